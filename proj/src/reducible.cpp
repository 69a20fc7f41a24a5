#include "nlosc/reducible.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>

#include <Eigen/Dense>

namespace nlosc {

namespace {

constexpr double coupling_tol = 1e-14;

// (1/8) sum over s in {+-1}^4 with s.k = 0 of weight(s); for cosines the weight
// is 1, for sines it is the product of the signs.
double sign_sum(const std::array<int, 4>& k, bool sine) {
    int total = 0;
    for (int mask = 0; mask < 16; ++mask) {
        int dot = 0, prod = 1;
        for (int r = 0; r < 4; ++r) {
            const int s = (mask >> r) & 1 ? -1 : 1;
            dot += s * k[r];
            prod *= s;
        }
        if (dot == 0) total += sine ? prod : 1;
    }
    return total / 8.0;
}

// Coefficient of each cubic monomial (sorted index triple) in equation i.
std::map<std::array<int, 3>, double> monomials(const std::vector<Mode>& modes, int i) {
    std::map<std::array<int, 3>, double> out;
    const int n = static_cast<int>(modes.size());
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l) {
                const double t = triple_product(modes[i], modes[j], modes[k], modes[l]);
                if (t == 0.0) continue;
                std::array<int, 3> key{j, k, l};
                std::sort(key.begin(), key.end());
                out[key] += t;
            }
    return out;
}

double linear_weight(Mode md, double omega, EquationKind kind) {
    const double p = md.time_wavenumber();
    return kind.spatial_weight(md.n) - p * p * omega * omega;
}

void check_modes(const std::vector<Mode>& modes) {
    for (std::size_t a = 0; a < modes.size(); ++a) {
        if (modes[a].m < 0 || modes[a].n < 0) throw InvalidArgument("mode indices must be nonnegative");
        for (std::size_t b = a + 1; b < modes.size(); ++b)
            if (modes[a] == modes[b]) throw InvalidArgument("mode set contains duplicates");
    }
}

}  // namespace

ModePair::ModePair(int m, int n, EquationKind kind) : m_(m), n_(n), kind_(kind) {
    if (m < 1 || n < 1) throw InvalidArgument("mode pair requires m >= 1 and n >= 1");
    if (!admissible(m, n, kind))
        throw InvalidArgument("mode pair (" + std::to_string(m) + "," + std::to_string(n) +
                              ") violates (2m+1) < (2n+1)^nu");
}

bool ModePair::admissible(int m, int n, EquationKind kind) {
    if (m < 1 || n < 1) return false;
    const int q = 2 * n + 1;
    const int qnu = kind.nu() == 1 ? q : q * q;
    return 2 * m + 1 < qnu;
}

CoefficientGrid ReducibleSolution::to_grid(int M, int N) const {
    int mm = 1, nn = 1;
    for (const auto& md : modes) {
        mm = std::max(mm, md.m + 1);
        nn = std::max(nn, md.n + 1);
    }
    CoefficientGrid g(std::max(M, mm), std::max(N, nn));
    for (std::size_t i = 0; i < modes.size(); ++i) g(modes[i].m, modes[i].n) = amplitudes[i];
    return g;
}

double triple_product(Mode i, Mode j, Mode k, Mode l) {
    const double t = sign_sum({i.time_wavenumber(), j.time_wavenumber(), k.time_wavenumber(), l.time_wavenumber()},
                              false);
    if (t == 0.0) return 0.0;
    return t * sign_sum({i.space_wavenumber(), j.space_wavenumber(), k.space_wavenumber(), l.space_wavenumber()},
                        true);
}

std::vector<double> restricted_residual(const std::vector<Mode>& modes, const std::vector<double>& amplitudes,
                                        double omega, EquationKind kind) {
    if (amplitudes.size() != modes.size()) throw InvalidArgument("one amplitude per mode required");
    const int n = static_cast<int>(modes.size());
    std::vector<double> r(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double c = 0.0;
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l)
                    c += triple_product(modes[i], modes[j], modes[k], modes[l]) * amplitudes[j] * amplitudes[k] *
                         amplitudes[l];
        r[i] = linear_weight(modes[i], omega, kind) * amplitudes[i] + c;
    }
    return r;
}

double trunk_amplitude(double omega) {
    if (!(omega >= 1.0)) throw InvalidArgument("trunk amplitude requires omega >= 1");
    return 4.0 / 3.0 * std::sqrt(omega * omega - 1.0);
}

std::pair<double, double> branch_window(const ModePair& pair) {
    const double W = pair.kind().spatial_weight(pair.n());
    const double P2 = std::pow(2.0 * pair.m() + 1.0, 2);
    return {(4.0 * W - 3.0) / (4.0 * P2 - 3.0), (3.0 * W - 4.0) / (3.0 * P2 - 4.0)};
}

ReducibleSolution two_mode_branch(const ModePair& pair, double omega) {
    if (!(omega > 0.0)) throw InvalidArgument("omega must be positive");
    const double W = pair.kind().spatial_weight(pair.n());
    const double P2 = std::pow(2.0 * pair.m() + 1.0, 2);
    const double w2 = omega * omega;
    const double a2 = (4.0 * P2 - 3.0) * w2 - (4.0 * W - 3.0);
    const double b2 = (3.0 * W - 4.0) - (3.0 * P2 - 4.0) * w2;
    const auto [lo, hi] = branch_window(pair);
    // Window ends reproduce to a few ulps; clip round-off there.
    const double slack = 8.0 * std::numeric_limits<double>::epsilon() * (4.0 * W);
    if (a2 < -slack || b2 < -slack)
        throw WindowViolation("omega^2 = " + std::to_string(w2) + " outside branch window [" + std::to_string(lo) +
                              ", " + std::to_string(hi) + "]");
    const double c = 4.0 / std::sqrt(21.0);
    return {{Mode{0, 0}, Mode{pair.m(), pair.n()}},
            {c * std::sqrt(std::max(a2, 0.0)), c * std::sqrt(std::max(b2, 0.0))},
            omega};
}

bool is_reducible(const std::vector<Mode>& modes, EquationKind) {
    check_modes(modes);
    for (int i = 0; i < static_cast<int>(modes.size()); ++i)
        for (const auto& [key, coeff] : monomials(modes, i)) {
            // allowed: c_i c_j^2, i.e. the triple holds i and a repeated index
            const bool has_i = std::find(key.begin(), key.end(), i) != key.end();
            bool pattern = false;
            if (has_i) {
                std::array<int, 3> rest = key;
                rest[std::find(rest.begin(), rest.end(), i) - rest.begin()] = -1;
                std::sort(rest.begin(), rest.end());
                pattern = rest[1] == rest[2];
            }
            if (!pattern && std::abs(coeff) > coupling_tol) return false;
        }
    return true;
}

std::vector<ReducibleSolution> solve_reducible(const std::vector<Mode>& modes, double omega, EquationKind kind) {
    if (!(omega > 0.0)) throw InvalidArgument("omega must be positive");
    if (!is_reducible(modes, kind)) throw NotReducible("mode set is not minimally coupled");
    const int n = static_cast<int>(modes.size());
    if (n > 20) throw InvalidArgument("at most 20 modes supported");

    // K(i,j): coefficient of c_i c_j^2 in equation i
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (const auto& [key, coeff] : monomials(modes, i)) {
            std::array<int, 3> rest = key;
            rest[std::find(rest.begin(), rest.end(), i) - rest.begin()] = -1;
            std::sort(rest.begin(), rest.end());
            K(i, rest[1]) += coeff;
        }

    std::vector<ReducibleSolution> out;
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
        std::vector<int> support;
        for (int i = 0; i < n; ++i)
            if (mask >> i & 1u) support.push_back(i);
        const int k = static_cast<int>(support.size());
        std::vector<double> amp(n, 0.0);
        bool ok = true;
        if (k > 0) {
            Eigen::MatrixXd A(k, k);
            Eigen::VectorXd b(k);
            for (int r = 0; r < k; ++r) {
                b(r) = -linear_weight(modes[support[r]], omega, kind);
                for (int c = 0; c < k; ++c) A(r, c) = K(support[r], support[c]);
            }
            Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
            if (!lu.isInvertible()) continue;
            const Eigen::VectorXd x = lu.solve(b);
            const double scale = b.cwiseAbs().maxCoeff() + 1.0;
            for (int r = 0; r < k; ++r) {
                // a squared amplitude that is zero to round-off belongs to a smaller support
                if (x(r) <= 1e-13 * scale) {
                    ok = false;
                    break;
                }
                amp[support[r]] = std::sqrt(x(r));
            }
        }
        if (ok) out.push_back({modes, amp, omega});
    }
    return out;
}

std::pair<double, double> nonreducible_11_residual(double A, double B, double omega) {
    const double w2 = omega * omega;
    return {A * (9 * A * A + 12 * B * B - 16 * w2 + 16) - 3 * A * A * B,
            B * (12 * A * A + 9 * B * B - 144 * w2 + 1296) - A * A * A};
}

std::vector<ReducibleSolution> nonreducible_11_beam(double omega) {
    if (!(omega > 0.0)) throw InvalidArgument("omega must be positive");
    const double w2 = omega * omega;

    // minimally coupled approximations (coefficients 9, 12, 12, 9)
    std::vector<std::pair<double, double>> seeds{{0.0, 0.0}};
    if (w2 >= 1.0) seeds.emplace_back(trunk_amplitude(omega), 0.0);
    if (9.0 * w2 >= 81.0) seeds.emplace_back(0.0, 4.0 / 3.0 * std::sqrt(w2 - 9.0));
    const double a2 = 16.0 / 21.0 * (33.0 * w2 - 321.0);
    const double b2 = 16.0 / 21.0 * (239.0 - 23.0 * w2);
    if (a2 >= 0.0 && b2 >= 0.0) seeds.emplace_back(std::sqrt(a2), std::sqrt(b2));

    std::vector<std::pair<double, double>> found;
    for (const auto& [a0, b0] : seeds)
        for (int sa : {1, -1})
            for (int sb : {1, -1}) {
                double A = sa * a0, B = sb * b0;
                bool converged = false;
                for (int it = 0; it < 60; ++it) {
                    const auto [f, g] = nonreducible_11_residual(A, B, omega);
                    const double scale = 1.0 + 16.0 * w2 * (std::abs(A) + std::abs(B));
                    if (std::max(std::abs(f), std::abs(g)) <= 1e-13 * scale) {
                        converged = true;
                        break;
                    }
                    const double fa = 27 * A * A + 12 * B * B - 16 * w2 + 16 - 6 * A * B;
                    const double fb = 24 * A * B - 3 * A * A;
                    const double ga = 24 * A * B - 3 * A * A;
                    const double gb = 12 * A * A + 27 * B * B - 144 * w2 + 1296;
                    const double det = fa * gb - fb * ga;
                    if (std::abs(det) < 1e-300) break;
                    A -= (gb * f - fb * g) / det;
                    B -= (fa * g - ga * f) / det;
                    if (!std::isfinite(A) || !std::isfinite(B)) break;
                }
                if (!converged) continue;
                if (A < 0.0 || (A == 0.0 && B < 0.0)) {
                    A = -A;
                    B = -B;
                }
                if (std::abs(A) < 1e-15) A = 0.0;
                if (std::abs(B) < 1e-15) B = 0.0;
                const bool dup = std::any_of(found.begin(), found.end(), [&](const auto& p) {
                    return std::abs(p.first - A) <= 1e-9 && std::abs(p.second - B) <= 1e-9;
                });
                if (!dup) found.emplace_back(A, B);
            }

    std::sort(found.begin(), found.end());
    std::vector<ReducibleSolution> out;
    for (const auto& [A, B] : found) out.push_back({{Mode{0, 0}, Mode{1, 1}}, {A, B}, omega});
    return out;
}

std::vector<ModePair> admissible_pairs(int N, EquationKind kind, int max_m) {
    if (N < 1) throw InvalidArgument("N must be positive");
    if (max_m < 0) max_m = N - 1;
    std::vector<ModePair> out;
    for (int n = 1; n < N; ++n)
        for (int m = 1; m <= max_m; ++m)
            if (ModePair::admissible(m, n, kind)) out.emplace_back(m, n, kind);
    return out;
}

std::vector<TreeRow> reducible_tree(int N, EquationKind kind, const std::vector<double>& omega_grid, int max_m) {
    const auto pairs = admissible_pairs(N, kind, max_m);
    std::vector<double> grid = omega_grid;
    std::sort(grid.begin(), grid.end());

    std::vector<TreeRow> rows;
    for (double w : grid) {
        if (!(w >= 1.0)) continue;
        const double A = trunk_amplitude(w);
        CoefficientGrid g(1, 1);
        g(0, 0) = A;
        rows.push_back({w, energy(g, w, kind), "trunk", 0, 0, A, 0.0});
    }
    for (const auto& pair : pairs) {
        const auto [lo, hi] = branch_window(pair);
        std::vector<double> ws{std::sqrt(lo)};
        for (double w : grid)
            if (w * w > lo && w * w < hi) ws.push_back(w);
        ws.push_back(std::sqrt(hi));
        for (double w : ws) {
            const auto sol = two_mode_branch(pair, w);
            rows.push_back({w, energy(sol.to_grid(), w, kind), "branch", pair.m(), pair.n(), sol.amplitudes[0],
                            sol.amplitudes[1]});
        }
    }
    return rows;
}

}  // namespace nlosc

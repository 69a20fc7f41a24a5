#include "nlosc/floquet.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <thread>

#include <Eigen/Eigenvalues>

namespace nlosc {

namespace {

constexpr double pi = std::numbers::pi;

using MatrixL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

// Legendre P_s and its derivative at x.
std::pair<long double, long double> legendre(int s, long double x) {
    long double p0 = 1.0L, p1 = x;
    for (int k = 2; k <= s; ++k) {
        const long double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    const long double dp = s * (x * p1 - p0) / (x * x - 1.0L);
    return {p1, dp};
}

Eigen::MatrixXd symplectic_form(int K) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(2 * K, 2 * K);
    J.topRightCorner(K, K).setIdentity();
    J.bottomLeftCorner(K, K) = -Eigen::MatrixXd::Identity(K, K);
    return J;
}

// Background at the time truncation used for the scan, corrected on the
// hyperplane through the zero-padded point (normal to the curve tangent when
// one is available, otherwise at fixed omega).
SolutionPoint refine(const SolutionPoint& p, const Eigen::VectorXd* tangent, int Mr, double tol) {
    const int N = p.N();
    if (Mr <= p.M() && p.residual_norm <= tol) return p;
    SolutionPoint seed = make_point(p.kind, p.grid.resized(std::max(Mr, p.M()), N), p.omega);
    const int n = seed.grid.size() + 1;
    AffineConstraint c = AffineConstraint::fixed_omega(n, p.omega);
    if (tangent && tangent->size() == p.grid.size() + 1) {
        Eigen::VectorXd t = Eigen::VectorXd::Zero(n);
        t.head(p.grid.size()) = tangent->head(p.grid.size());
        t(n - 1) = (*tangent)(p.grid.size());
        if (t.norm() > 0.0) c = AffineConstraint::hyperplane(t.normalized(), seed.state());
    }
    return newton_correct(seed, c, tol, 25).point;
}

}  // namespace

PerturbationBasis::PerturbationBasis(int K) : K_(K) {
    if (K < 1 || K % 2 == 0) throw InvalidArgument("perturbation basis size K must be a positive odd integer");
}

GaussLegendre GaussLegendre::of_order(int order) {
    if (order != 4 && order != 6 && order != 8) throw InvalidArgument("integrator order must be 4, 6 or 8");
    const int s = order / 2;
    std::vector<long double> c(s);
    for (int i = 0; i < s; ++i) {
        long double x = std::cos(pi * (i + 0.75L) / (s + 0.5L));
        for (int it = 0; it < 100; ++it) {
            const auto [p, dp] = legendre(s, x);
            const long double dx = p / dp;
            x -= dx;
            if (std::abs(dx) < 1e-19L) break;
        }
        c[i] = (1.0L - x) / 2.0L;  // ascending in [0, 1]
    }
    // l_j(t) = sum_k alpha(k, j) t^k
    MatrixL V(s, s);
    for (int i = 0; i < s; ++i)
        for (int k = 0; k < s; ++k) V(i, k) = std::pow(c[i], static_cast<long double>(k));
    const MatrixL alpha = V.inverse();
    auto integral = [&](int j, long double x) {
        long double r = 0.0L;
        for (int k = 0; k < s; ++k) r += alpha(k, j) * std::pow(x, static_cast<long double>(k + 1)) / (k + 1);
        return r;
    };
    GaussLegendre g;
    g.order = order;
    g.c.resize(s);
    g.b.resize(s);
    g.a.resize(s, s);
    for (int i = 0; i < s; ++i) {
        g.c(i) = static_cast<double>(c[i]);
        g.b(i) = static_cast<double>(integral(i, 1.0L));
        for (int j = 0; j < s; ++j) g.a(i, j) = static_cast<double>(integral(j, c[i]));
    }
    return g;
}

double MonodromyMatrix::symplecticity_defect() const {
    const Eigen::MatrixXd J = symplectic_form(K());
    return (entries.transpose() * J * entries - J).cwiseAbs().maxCoeff();
}

LinearizedOperator::LinearizedOperator(const SolutionPoint& point, PerturbationBasis basis)
    : K_(basis.K()), omega_(point.omega), coeffs_(point.grid.matrix()) {
    if (!(omega_ > 0.0)) throw InvalidArgument("omega must be positive");
    const int N = point.N();
    const int Q = 2 * N + K_;
    free_.resize(K_);
    for (int k = 0; k < K_; ++k) free_(k) = point.kind.stiffness(k + 1);
    sin_u_.resize(Q, N);
    sin_v_.resize(Q, K_);
    for (int q = 0; q < Q; ++q) {
        const double x = (q + 0.5) * pi / Q;
        for (int n = 0; n < N; ++n) sin_u_(q, n) = std::sin((2 * n + 1) * x);
        for (int k = 0; k < K_; ++k) sin_v_(q, k) = std::sin((k + 1) * x);
    }
}

Eigen::MatrixXd LinearizedOperator::at(double tau) const {
    const int M = static_cast<int>(coeffs_.rows());
    Eigen::VectorXd cosv(M);
    for (int m = 0; m < M; ++m) cosv(m) = std::cos((2 * m + 1) * tau);
    const Eigen::VectorXd u = sin_u_ * (coeffs_.transpose() * cosv);
    const double Q = static_cast<double>(sin_u_.rows());
    const Eigen::VectorXd w = (6.0 / Q) * u.array().square().matrix();
    Eigen::MatrixXd L = sin_v_.transpose() * w.asDiagonal() * sin_v_;
    L.diagonal() += free_;
    return L;
}

Eigen::MatrixXd build_L(const SolutionPoint& point, PerturbationBasis basis, double tau) {
    return LinearizedOperator(point, basis).at(tau);
}

MonodromyMatrix monodromy(const SolutionPoint& point, PerturbationBasis basis, int steps, int order) {
    if (steps < 64) throw InvalidArgument("monodromy needs at least 64 steps");
    const GaussLegendre gl = GaussLegendre::of_order(order);
    const LinearizedOperator op(point, basis);
    const int K = basis.K();
    const int d = 2 * K;
    const int s = static_cast<int>(gl.c.size());
    const double h = 2.0 * pi / steps;
    const double inv_w2 = 1.0 / (point.omega * point.omega);

    // Slopes k_i = A_i (y0 + h sum_j a_ij k_j) with A_i = [[0, I], [-L_i / Omega^2, 0]].
    Eigen::MatrixXd G(s * d, s * d), rhs(s * d, d);
    std::vector<Eigen::MatrixXd> A(s, Eigen::MatrixXd::Zero(d, d));
    for (auto& Ai : A) Ai.topRightCorner(K, K).setIdentity();

    Eigen::MatrixXd Mono = Eigen::MatrixXd::Identity(d, d);
    Eigen::MatrixXd T(d, d);
    for (int step = 0; step < steps; ++step) {
        const double t0 = step * h;
        for (int i = 0; i < s; ++i) A[i].bottomLeftCorner(K, K) = -inv_w2 * op.at(t0 + gl.c(i) * h);
        for (int i = 0; i < s; ++i) {
            for (int j = 0; j < s; ++j) {
                G.block(i * d, j * d, d, d) = -h * gl.a(i, j) * A[i];
                if (i == j) G.block(i * d, j * d, d, d).diagonal().array() += 1.0;
            }
            rhs.block(i * d, 0, d, d) = A[i];
        }
        const Eigen::MatrixXd k = G.partialPivLu().solve(rhs);
        T.setIdentity();
        for (int i = 0; i < s; ++i) T.noalias() += h * gl.b(i) * k.block(i * d, 0, d, d);
        Mono = T * Mono;
    }

    MonodromyMatrix out{std::move(Mono), steps, order};
    const double defect = out.symplecticity_defect();
    if (!(defect <= 1e-9))
        throw StepCountTooSmall("monodromy symplecticity defect " + std::to_string(defect) + " with " +
                                std::to_string(steps) + " steps");
    return out;
}

double FloquetSpectrum::pairing_defect() const {
    double worst = 0.0;
    for (const auto& l : multipliers) {
        const std::complex<double> inv = 1.0 / l;
        const std::complex<double> cj = std::conj(l);
        double di = std::numeric_limits<double>::infinity(), dc = di;
        for (const auto& m : multipliers) {
            di = std::min(di, std::abs(m - inv));
            dc = std::min(dc, std::abs(m - cj));
        }
        worst = std::max({worst, di, dc});
    }
    return worst;
}

FloquetSpectrum multipliers(const MonodromyMatrix& M, const FloquetSettings& settings) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(M.entries, false);
    if (es.info() != Eigen::Success) throw NonConvergence("eigenvalue iteration failed");
    FloquetSpectrum fs;
    const auto& ev = es.eigenvalues();
    for (Eigen::Index i = 0; i < ev.size(); ++i) fs.multipliers.push_back(ev(i));

    std::vector<int> order(fs.multipliers.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return std::abs(fs.multipliers[a] - 1.0) < std::abs(fs.multipliers[b] - 1.0);
    });
    fs.trivial_distance = order.empty() ? 0.0 : std::abs(fs.multipliers[order[0]] - 1.0);
    if (settings.trivial_pair_tol > 0.0 && order.size() >= 2 &&
        std::abs(fs.multipliers[order[1]] - 1.0) <= settings.trivial_pair_tol)
        fs.excluded = {order[0], order[1]};

    for (std::size_t i = 0; i < fs.multipliers.size(); ++i) {
        const double dev = std::abs(std::abs(fs.multipliers[i]) - 1.0);
        fs.max_dev_all = std::max(fs.max_dev_all, dev);
        if (std::find(fs.excluded.begin(), fs.excluded.end(), static_cast<int>(i)) == fs.excluded.end())
            fs.max_dev = std::max(fs.max_dev, dev);
    }
    fs.verdict = fs.max_dev <= settings.threshold ? Stability::stable : Stability::unstable;
    return fs;
}

std::vector<ScanResult> stability_scan(const BranchCurve& curve, const ScanSettings& settings) {
    const int n = static_cast<int>(curve.size());
    std::vector<ScanResult> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) out.push_back(ScanResult{i, curve.points[i], std::nullopt, 0.0, 0.0, {}});
    std::atomic<int> next{0};
    auto work = [&] {
        for (int i = next++; i < n; i = next++) {
            ScanResult& r = out[i];
            try {
                const SolutionPoint& p = curve.points[i];
                const int N = p.N();
                const int K = settings.K > 0 ? settings.K : 2 * N - 1;
                const int Mr = settings.refine_M > 0 ? settings.refine_M : std::max(p.M(), 3 * N * N);
                const Eigen::VectorXd* t =
                    static_cast<std::size_t>(i) < curve.tangents.size() ? &curve.tangents[i] : nullptr;
                const SolutionPoint bg = refine(p, t, Mr, settings.refine_tol);
                int steps = settings.floquet.steps;
                MonodromyMatrix mono = monodromy(bg, PerturbationBasis(K), steps, settings.floquet.order);
                // double the step count while the symplecticity defect exceeds 1e-10
                for (int d = 0; d < 3 && mono.symplecticity_defect() > 1e-10; ++d) {
                    steps *= 2;
                    mono = monodromy(bg, PerturbationBasis(K), steps, settings.floquet.order);
                }
                r.symplecticity_defect = mono.symplecticity_defect();
                r.determinant = mono.determinant();
                r.spectrum = multipliers(mono, settings.floquet);
                r.point.stability = r.spectrum->verdict;
            } catch (const std::exception& e) {
                r.error = e.what();
                r.point.stability = Stability::unknown;
            }
        }
    };
    const int threads = std::max(1, std::min(settings.threads, n));
    std::vector<std::thread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();
    return out;
}

BranchCurve annotate(const BranchCurve& curve, const std::vector<ScanResult>& scan) {
    BranchCurve out = curve;
    for (const auto& r : scan)
        if (r.index >= 0 && static_cast<std::size_t>(r.index) < out.points.size())
            out.points[r.index].stability = r.point.stability;
    return out;
}

}  // namespace nlosc

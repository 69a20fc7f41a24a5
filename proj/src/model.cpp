#include "nlosc/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace nlosc {

namespace {

constexpr double pi = std::numbers::pi;

int ipow(int base, int exp) {
    int r = 1;
    for (int i = 0; i < exp; ++i) r *= base;
    return r;
}

}  // namespace

EquationKind::EquationKind(int nu) : nu_(nu) {
    if (nu != 1 && nu != 2) throw InvalidArgument("nu must be 1 (wave) or 2 (beam), got " + std::to_string(nu));
}

double EquationKind::stiffness(int k) const {
    const double k2 = static_cast<double>(k) * k;
    return nu_ == 1 ? k2 : k2 * k2;
}

CoefficientGrid::CoefficientGrid(int M, int N) {
    if (M < 1 || N < 1) throw InvalidArgument("grid dimensions must be positive");
    coeffs_ = Eigen::MatrixXd::Zero(M, N);
}

CoefficientGrid::CoefficientGrid(Eigen::MatrixXd coeffs) : coeffs_(std::move(coeffs)) {
    if (coeffs_.rows() < 1 || coeffs_.cols() < 1) throw InvalidArgument("grid dimensions must be positive");
    if (!coeffs_.allFinite()) throw InvalidArgument("grid coefficients must be finite");
}

CoefficientGrid CoefficientGrid::from_flat(int M, int N, const Eigen::VectorXd& flat) {
    if (flat.size() < static_cast<Eigen::Index>(M) * N)
        throw InvalidArgument("flat coefficient vector shorter than M*N");
    Eigen::MatrixXd c(M, N);
    for (int m = 0; m < M; ++m)
        for (int n = 0; n < N; ++n) c(m, n) = flat(m * N + n);
    return CoefficientGrid(std::move(c));
}

Eigen::VectorXd CoefficientGrid::flat() const {
    Eigen::VectorXd v(size());
    for (int m = 0; m < M(); ++m)
        for (int n = 0; n < N(); ++n) v(m * N() + n) = coeffs_(m, n);
    return v;
}

CoefficientGrid CoefficientGrid::resized(int M, int N) const {
    CoefficientGrid g(M, N);
    const int mm = std::min(M, this->M());
    const int nn = std::min(N, this->N());
    g.coeffs_.topLeftCorner(mm, nn) = coeffs_.topLeftCorner(mm, nn);
    return g;
}

std::string to_string(Stability s) {
    switch (s) {
    case Stability::stable: return "stable";
    case Stability::unstable: return "unstable";
    case Stability::unknown: break;
    }
    return "unknown";
}

Stability stability_from_string(const std::string& s) {
    if (s == "stable") return Stability::stable;
    if (s == "unstable") return Stability::unstable;
    if (s == "unknown" || s.empty()) return Stability::unknown;
    throw InvalidArgument("unrecognised stability verdict '" + s + "'");
}

Eigen::VectorXd SolutionPoint::state() const {
    Eigen::VectorXd y(grid.size() + 1);
    y.head(grid.size()) = grid.flat();
    y(grid.size()) = omega;
    return y;
}

SolutionPoint make_point(EquationKind kind, CoefficientGrid grid, double omega, double tol) {
    if (!(omega > 0.0)) throw InvalidArgument("omega must be positive");
    const double E = energy(grid, omega, kind);
    const double res = residual(grid, omega, kind).max_abs();
    return SolutionPoint{kind, std::move(grid), omega, E, res, tol, std::nullopt};
}

SolutionPoint make_point(EquationKind kind, int M, int N, const Eigen::VectorXd& state, double tol) {
    return make_point(kind, CoefficientGrid::from_flat(M, N, state), state(static_cast<Eigen::Index>(M) * N), tol);
}

GalerkinSystem::GalerkinSystem(int M, int N, EquationKind kind, int time_nodes, int space_nodes)
    : M_(M), N_(N), kind_(kind), P_(time_nodes > 0 ? time_nodes : 3 * M),
      Q_(space_nodes > 0 ? space_nodes : 3 * N) {
    if (M < 1 || N < 1) throw InvalidArgument("truncation sizes must be positive");
    if (P_ < 2 * M || Q_ < 2 * N) throw InvalidArgument("collocation grid too coarse for exact cubic projection");
    cos_tau_.resize(P_, M_);
    for (int j = 0; j < P_; ++j) {
        const double tau = (j + 0.5) * pi / (2.0 * P_);
        for (int m = 0; m < M_; ++m) cos_tau_(j, m) = std::cos((2 * m + 1) * tau);
    }
    sin_x_.resize(Q_, N_);
    for (int k = 0; k < Q_; ++k) {
        const double x = (k + 0.5) * pi / (2.0 * Q_);
        for (int n = 0; n < N_; ++n) sin_x_(k, n) = std::sin((2 * n + 1) * x);
    }
}

Eigen::MatrixXd GalerkinSystem::collocate(const CoefficientGrid& grid) const {
    return cos_tau_ * grid.matrix() * sin_x_.transpose();
}

CoefficientGrid GalerkinSystem::project(const Eigen::MatrixXd& samples) const {
    return CoefficientGrid((4.0 / (static_cast<double>(P_) * Q_)) * (cos_tau_.transpose() * samples * sin_x_));
}

CoefficientGrid GalerkinSystem::cubic_projection(const CoefficientGrid& grid) const {
    const Eigen::MatrixXd u = collocate(grid);
    return project(u.array().cube().matrix());
}

double GalerkinSystem::linear_weight(int m, int n, double omega) const {
    const double p = 2 * m + 1;
    return -omega * omega * p * p + kind_.spatial_weight(n);
}

CoefficientGrid GalerkinSystem::residual(const CoefficientGrid& grid, double omega) const {
    if (!(omega > 0.0)) throw InvalidArgument("omega must be positive");
    if (grid.M() != M_ || grid.N() != N_) throw InvalidArgument("grid does not match the Galerkin truncation");
    Eigen::MatrixXd r = cubic_projection(grid).matrix();
    for (int m = 0; m < M_; ++m)
        for (int n = 0; n < N_; ++n) r(m, n) += linear_weight(m, n, omega) * grid(m, n);
    return CoefficientGrid(std::move(r));
}

Eigen::MatrixXd GalerkinSystem::jacobian(const CoefficientGrid& grid, double omega) const {
    if (!(omega > 0.0)) throw InvalidArgument("omega must be positive");
    if (grid.M() != M_ || grid.N() != N_) throw InvalidArgument("grid does not match the Galerkin truncation");
    const int K = size();
    const Eigen::MatrixXd u = collocate(grid);
    const Eigen::MatrixXd w = 3.0 * u.array().square().matrix();
    const double scale = 4.0 / (static_cast<double>(P_) * Q_);

    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(K, K + 1);
    Eigen::VectorXd wt(Q_);
    for (int m = 0; m < M_; ++m) {
        for (int a = m; a < M_; ++a) {
            // wt(k) = sum_j w(j,k) cos_m(tau_j) cos_a(tau_j)
            wt = w.transpose() * cos_tau_.col(m).cwiseProduct(cos_tau_.col(a));
            for (int n = 0; n < N_; ++n) {
                for (int b = 0; b < N_; ++b) {
                    const double g = scale * (wt.array() * sin_x_.col(n).array() * sin_x_.col(b).array()).sum();
                    J(m * N_ + n, a * N_ + b) = g;
                    J(a * N_ + b, m * N_ + n) = g;
                }
            }
        }
    }
    for (int m = 0; m < M_; ++m) {
        const double p = 2 * m + 1;
        for (int n = 0; n < N_; ++n) {
            J(m * N_ + n, m * N_ + n) += linear_weight(m, n, omega);
            J(m * N_ + n, K) = -2.0 * omega * p * p * grid(m, n);
        }
    }
    return J;
}

Eigen::VectorXd GalerkinSystem::residual(const Eigen::VectorXd& state) const {
    return residual(CoefficientGrid::from_flat(M_, N_, state), state(size())).flat();
}

Eigen::MatrixXd GalerkinSystem::jacobian(const Eigen::VectorXd& state) const {
    return jacobian(CoefficientGrid::from_flat(M_, N_, state), state(size()));
}

double evaluate_field(const CoefficientGrid& grid, double tau, double x) {
    double u = 0.0;
    for (int m = 0; m < grid.M(); ++m) {
        const double ct = std::cos((2 * m + 1) * tau);
        for (int n = 0; n < grid.N(); ++n) u += grid(m, n) * ct * std::sin((2 * n + 1) * x);
    }
    return u;
}

CoefficientGrid cubic_projection(const CoefficientGrid& grid) {
    return GalerkinSystem(grid.M(), grid.N(), EquationKind::wave()).cubic_projection(grid);
}

CoefficientGrid residual(const CoefficientGrid& grid, double omega, EquationKind kind) {
    return GalerkinSystem(grid.M(), grid.N(), kind).residual(grid, omega);
}

Eigen::MatrixXd jacobian(const CoefficientGrid& grid, double omega, EquationKind kind) {
    return GalerkinSystem(grid.M(), grid.N(), kind).jacobian(grid, omega);
}

double energy(const CoefficientGrid& grid, double omega, EquationKind kind, double tau, int quadrature_factor) {
    if (!(omega > 0.0)) throw InvalidArgument("omega must be positive");
    if (quadrature_factor < 1) throw InvalidArgument("quadrature factor must be positive");
    const int M = grid.M();
    const int N = grid.N();

    // Spatial profiles of u and u_tau at this tau; the quadratic terms are diagonal
    // in the orthogonal sine basis (squared norm pi/2).
    Eigen::VectorXd a = Eigen::VectorXd::Zero(N);
    Eigen::VectorXd da = Eigen::VectorXd::Zero(N);
    for (int m = 0; m < M; ++m) {
        const double p = 2 * m + 1;
        const double c = std::cos(p * tau);
        const double s = std::sin(p * tau);
        for (int n = 0; n < N; ++n) {
            a(n) += grid(m, n) * c;
            da(n) -= p * grid(m, n) * s;
        }
    }
    double quadratic = 0.0;
    for (int n = 0; n < N; ++n) quadratic += omega * omega * da(n) * da(n) + kind.spatial_weight(n) * a(n) * a(n);
    quadratic *= pi / 4.0;

    // u^4 carries even cosine harmonics up to 4(2N-1), symmetric about pi/2.
    const int Q = 3 * N * quadrature_factor;
    double quartic = 0.0;
    for (int k = 0; k < Q; ++k) {
        const double x = (k + 0.5) * pi / (2.0 * Q);
        double u = 0.0;
        for (int n = 0; n < N; ++n) u += a(n) * std::sin((2 * n + 1) * x);
        const double u2 = u * u;
        quartic += u2 * u2;
    }
    quartic *= pi / Q / 4.0;
    return quadratic + quartic;
}

double energy_drift(const CoefficientGrid& grid, double omega, EquationKind kind, int samples) {
    const double E0 = energy(grid, omega, kind, 0.0);
    if (E0 == 0.0) return 0.0;
    double worst = 0.0;
    for (int i = 1; i < samples; ++i) {
        const double tau = 2.0 * pi * i / samples;
        worst = std::max(worst, std::abs(energy(grid, omega, kind, tau) - E0));
    }
    return worst / E0;
}

SolutionPoint rescale(const SolutionPoint& point, RescaleParams params, int target_M, int target_N) {
    const int ms = params.m_scale;
    const int ns = params.n_scale;
    if (ms < 1 || ns < 1 || ms % 2 == 0 || ns % 2 == 0)
        throw InvalidArgument("rescaling integers must be odd and positive");
    const int M = point.M();
    const int N = point.N();
    const int needM = (ms * (2 * M - 1) + 1) / 2;
    const int needN = (ns * (2 * N - 1) + 1) / 2;
    if (target_M == 0) target_M = needM;
    if (target_N == 0) target_N = needN;
    if (target_M < needM || target_N < needN)
        throw InvalidArgument("target truncation too small for the rescaled modes");

    const int nu = point.kind.nu();
    const double amp = ipow(ns, nu);
    CoefficientGrid g(target_M, target_N);
    for (int m = 0; m < M; ++m)
        for (int n = 0; n < N; ++n) g((ms * (2 * m + 1) - 1) / 2, (ns * (2 * n + 1) - 1) / 2) = amp * point.grid(m, n);

    const double omega = amp * point.omega / ms;
    // The residual picks up a factor n^(3 nu) on the mapped entries.
    const double tol = point.tol * ipow(ns, 3 * nu);
    return make_point(point.kind, std::move(g), omega, tol);
}

}  // namespace nlosc

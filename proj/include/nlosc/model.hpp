#pragma once

// Odd-mode Galerkin representation of time-periodic solutions of
//
//     Omega^2 u_tt + (-1)^nu d_x^{2nu} u + u^3 = 0,   x in [0, pi],
//
// with u = sum_{m<M, n<N} c(m,n) cos((2m+1) tau) sin((2n+1) x).

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace nlosc {

class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// nu = 1 is the wave equation (Dirichlet), nu = 2 the beam equation (Navier).
class EquationKind {
public:
    explicit EquationKind(int nu);

    static EquationKind wave() { return EquationKind(1); }
    static EquationKind beam() { return EquationKind(2); }

    int nu() const { return nu_; }
    /// k^(2 nu) for an arbitrary positive integer wavenumber k.
    double stiffness(int k) const;
    /// (2n+1)^(2 nu): linear spatial weight of space index n.
    double spatial_weight(int n) const { return stiffness(2 * n + 1); }

    bool operator==(const EquationKind&) const = default;

private:
    int nu_;
};

class CoefficientGrid {
public:
    CoefficientGrid(int M, int N);
    explicit CoefficientGrid(Eigen::MatrixXd coeffs);

    static CoefficientGrid from_flat(int M, int N, const Eigen::VectorXd& flat);

    int M() const { return static_cast<int>(coeffs_.rows()); }
    int N() const { return static_cast<int>(coeffs_.cols()); }
    int size() const { return M() * N(); }

    double operator()(int m, int n) const { return coeffs_(m, n); }
    double& operator()(int m, int n) { return coeffs_(m, n); }

    const Eigen::MatrixXd& matrix() const { return coeffs_; }
    /// Row-major flattening; index m*N + n.
    Eigen::VectorXd flat() const;

    /// Copy into an M' x N' grid (M' >= M, N' >= N zero-padded; smaller truncates).
    CoefficientGrid resized(int M, int N) const;

    double max_abs() const { return coeffs_.cwiseAbs().maxCoeff(); }
    bool operator==(const CoefficientGrid& o) const { return coeffs_ == o.coeffs_; }

private:
    Eigen::MatrixXd coeffs_;
};

enum class Stability { unknown, stable, unstable };

std::string to_string(Stability s);
Stability stability_from_string(const std::string& s);

struct SolutionPoint {
    EquationKind kind;
    CoefficientGrid grid;
    double omega = 1.0;
    double energy = 0.0;
    double residual_norm = 0.0;
    /// Tolerance the point was converged to; residual_norm <= tol for converged points.
    double tol = 0.0;
    std::optional<Stability> stability;

    int M() const { return grid.M(); }
    int N() const { return grid.N(); }
    double fundamental() const { return grid(0, 0); }

    /// Unknown vector (row-major coefficients, omega last).
    Eigen::VectorXd state() const;
};

/// Build a point from raw data, evaluating energy E(0) and the residual max-norm.
SolutionPoint make_point(EquationKind kind, CoefficientGrid grid, double omega, double tol = 0.0);
SolutionPoint make_point(EquationKind kind, int M, int N, const Eigen::VectorXd& state, double tol = 0.0);

/// Collocation tables for a fixed truncation. The quadrature uses midpoint rules on
/// the quarter period tau in (0, pi/2) and the half interval x in (0, pi/2); the
/// integrands of all projections carry only even harmonics with the corresponding
/// reflection symmetry, so P >= 2M and Q >= 2N nodes integrate them exactly.
class GalerkinSystem {
public:
    GalerkinSystem(int M, int N, EquationKind kind, int time_nodes = 0, int space_nodes = 0);

    int M() const { return M_; }
    int N() const { return N_; }
    int size() const { return M_ * N_; }
    EquationKind kind() const { return kind_; }
    int time_nodes() const { return P_; }
    int space_nodes() const { return Q_; }

    /// Field values on the collocation grid (P x Q).
    Eigen::MatrixXd collocate(const CoefficientGrid& grid) const;
    /// Project samples on the collocation grid back onto the retained modes.
    CoefficientGrid project(const Eigen::MatrixXd& samples) const;

    CoefficientGrid cubic_projection(const CoefficientGrid& grid) const;
    CoefficientGrid residual(const CoefficientGrid& grid, double omega) const;
    /// MN x (MN+1); last column is dR/dOmega.
    Eigen::MatrixXd jacobian(const CoefficientGrid& grid, double omega) const;

    /// -Omega^2 (2m+1)^2 + (2n+1)^(2nu)
    double linear_weight(int m, int n, double omega) const;

    Eigen::VectorXd residual(const Eigen::VectorXd& state) const;
    Eigen::MatrixXd jacobian(const Eigen::VectorXd& state) const;

private:
    int M_, N_;
    EquationKind kind_;
    int P_, Q_;
    Eigen::MatrixXd cos_tau_;  // P x M
    Eigen::MatrixXd sin_x_;    // Q x N
};

double evaluate_field(const CoefficientGrid& grid, double tau, double x);
CoefficientGrid cubic_projection(const CoefficientGrid& grid);
CoefficientGrid residual(const CoefficientGrid& grid, double omega, EquationKind kind);
Eigen::MatrixXd jacobian(const CoefficientGrid& grid, double omega, EquationKind kind);

/// E(tau) = int_0^pi [ Omega^2 u_tau^2 / 2 + (d_x^nu u)^2 / 2 + u^4 / 4 ] dx.
/// `quadrature_factor` multiplies the (already exact) number of quartic nodes.
double energy(const CoefficientGrid& grid, double omega, EquationKind kind, double tau = 0.0,
              int quadrature_factor = 1);

/// max over sampled tau of |E(tau) - E(0)| / E(0); zero for the trivial solution.
double energy_drift(const CoefficientGrid& grid, double omega, EquationKind kind, int samples = 64);

struct RescaleParams {
    int m_scale = 1;
    int n_scale = 1;
};

/// Image under u -> n^nu u(m tau, n x), Omega -> n^nu Omega / m (odd m, n).
/// The target truncation defaults to the smallest one holding every image mode;
/// larger targets are zero-padded.
SolutionPoint rescale(const SolutionPoint& point, RescaleParams params, int target_M = 0,
                      int target_N = 0);

}  // namespace nlosc

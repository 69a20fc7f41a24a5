#pragma once

// Linear stability of periodic solutions. Perturbations
//     v = sum_{k<K} a_k(tau) sin((k+1) x)
// of Omega^2 v_tt + (-1)^nu d_x^{2nu} v + 3 u^2 v = 0 obey
//     p' = q,   q' = -L(tau) p / Omega^2,
// integrated over one period 2 pi with Gauss-Legendre collocation.

#include "nlosc/continuation.hpp"
#include "nlosc/model.hpp"

#include <Eigen/Dense>

#include <complex>
#include <optional>
#include <string>
#include <vector>

namespace nlosc {

class StepCountTooSmall : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class PerturbationBasis {
public:
    explicit PerturbationBasis(int K);

    /// K = 2N - 1.
    static PerturbationBasis for_truncation(int N) { return PerturbationBasis(2 * N - 1); }

    int K() const { return K_; }

private:
    int K_;
};

/// Butcher tableau of the s-stage Gauss-Legendre method (order 2s, s = 2, 3, 4).
struct GaussLegendre {
    int order = 6;
    Eigen::VectorXd c, b;
    Eigen::MatrixXd a;

    static GaussLegendre of_order(int order);
};

struct MonodromyMatrix {
    Eigen::MatrixXd entries;
    int steps = 0;
    int order = 0;

    int K() const { return static_cast<int>(entries.rows()) / 2; }
    /// max |M^T J M - J| with J = [[0, I], [-I, 0]].
    double symplecticity_defect() const;
    double determinant() const { return entries.determinant(); }
};

/// Time-dependent spatial operator at a fixed background; evaluates L(tau) with a
/// midpoint rule on [0, pi] that is exact for the trigonometric integrand.
class LinearizedOperator {
public:
    LinearizedOperator(const SolutionPoint& point, PerturbationBasis basis);

    int K() const { return K_; }
    double omega() const { return omega_; }
    Eigen::MatrixXd at(double tau) const;

private:
    int K_;
    double omega_;
    Eigen::MatrixXd coeffs_;  // M x N
    Eigen::VectorXd free_;    // (k+1)^(2 nu)
    Eigen::MatrixXd sin_u_;   // Q x N, sin((2n+1) x_q)
    Eigen::MatrixXd sin_v_;   // Q x K, sin((k+1) x_q)
};

Eigen::MatrixXd build_L(const SolutionPoint& point, PerturbationBasis basis, double tau);

/// Throws InvalidArgument for steps < 64 or an order outside {4, 6, 8}, and
/// StepCountTooSmall when the symplecticity defect exceeds 1e-9.
MonodromyMatrix monodromy(const SolutionPoint& point, PerturbationBasis basis, int steps = 4096, int order = 6);

struct FloquetSettings {
    int steps = 4096;
    int order = 6;
    /// Stable iff every counted multiplier has ||lambda| - 1| <= threshold.
    double threshold = 1e-12;
    /// The time-translation mode gives a multiplier pair at 1 forming a Jordan
    /// block, which numerical noise splits by O(sqrt(eps)); when the two
    /// multipliers closest to 1 lie within this distance they are not counted.
    /// Zero disables the exclusion.
    double trivial_pair_tol = 1e-5;
};

struct FloquetSpectrum {
    std::vector<std::complex<double>> multipliers;
    Stability verdict = Stability::unknown;
    /// max ||lambda| - 1| over the counted multipliers.
    double max_dev = 0.0;
    /// max ||lambda| - 1| over all multipliers.
    double max_dev_all = 0.0;
    /// min |lambda - 1|.
    double trivial_distance = 0.0;
    /// Indices of multipliers left out of the verdict.
    std::vector<int> excluded;

    /// Largest distance between the set and its image under lambda -> 1/conj(lambda)
    /// (matching each element to its nearest image).
    double pairing_defect() const;
};

FloquetSpectrum multipliers(const MonodromyMatrix& M, const FloquetSettings& settings = {});

struct ScanResult {
    int index = 0;
    SolutionPoint point;
    std::optional<FloquetSpectrum> spectrum;
    double symplecticity_defect = 0.0;
    double determinant = 0.0;
    std::string error;
};

struct ScanSettings {
    FloquetSettings floquet;
    /// Perturbation modes; <= 0 selects 2N - 1.
    int K = 0;
    /// Time truncation of the refined background; <= 0 selects max(M, 3 N^2).
    int refine_M = 0;
    double refine_tol = 1e-12;
    int threads = 1;
};

/// Refine every point of `curve` at the larger time truncation and classify it.
/// Failures are recorded per point; the scan never aborts.
std::vector<ScanResult> stability_scan(const BranchCurve& curve, const ScanSettings& settings = {});

/// Copy of `curve` with the verdict of each scanned point attached.
BranchCurve annotate(const BranchCurve& curve, const std::vector<ScanResult>& scan);

}  // namespace nlosc

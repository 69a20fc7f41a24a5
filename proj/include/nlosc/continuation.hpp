#pragma once

// Pseudo-arclength continuation of Galerkin solution families in the
// (coefficients, Omega) space, with fold / branch-point detection and
// branch switching.

#include "nlosc/model.hpp"

#include <Eigen/Dense>

#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace nlosc {

class NonConvergence : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bordered Newton system became numerically singular (rcond below 1e-14),
/// typically near a bifurcation point.
class SingularJacobian : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// normal . y = offset, with y = (coefficients, Omega).
struct AffineConstraint {
    Eigen::VectorXd normal;
    double offset = 0.0;

    static AffineConstraint fixed_omega(int unknowns, double omega);
    /// Hyperplane orthogonal to `direction` passing through `through`.
    static AffineConstraint hyperplane(const Eigen::VectorXd& direction, const Eigen::VectorXd& through);

    double operator()(const Eigen::VectorXd& y) const { return normal.dot(y) - offset; }
};

struct BranchCurve;

struct ContinuationSettings {
    double tol = 1e-11;
    int max_iter = 25;
    double step_min = 1e-8;
    double step_max = 0.1;
    double step_init = 0.01;
    /// Largest accepted turn of the tangent between consecutive points (radians).
    double max_turn = 0.5;
    /// Arclength resolution of branch-point bisection.
    double bisection_tol = 1e-10;
    /// Fundamental amplitude below which the curve is taken to meet a rescaled trunk.
    double fundamental_floor = 1e-10;
    bool stop_at_fundamental_zero = true;
    bool locate_branch_points = true;
    /// Retry with a halved step when the determinant flips away from a fundamental
    /// zero crossing: in the full Galerkin system trunk/branch junctions are
    /// imperfect, and a long step can hop across the gap. Flips that persist down
    /// to `jump_resolution` are kept as branch points.
    bool resolve_jumps = false;
    double jump_resolution = 1e-6;
};

struct TraceLimits {
    int max_points = 2000;
    double energy_max = std::numeric_limits<double>::infinity();
    double omega_min = 0.0;
    double omega_max = std::numeric_limits<double>::infinity();
};

struct Correction {
    SolutionPoint point;
    int iterations = 0;
};

/// Newton on R(y) = 0 augmented by one affine constraint. Throws NonConvergence
/// after max_iter iterations and SingularJacobian on a singular bordered system.
Correction newton_correct(const SolutionPoint& seed, const AffineConstraint& constraint, double tol,
                          int max_iter = 25);

/// Unit null vector of the MN x (MN+1) Jacobian, oriented to have a positive
/// component along `reference` (or along +Omega when no reference is given).
Eigen::VectorXd tangent_at(const SolutionPoint& point, const Eigen::VectorXd* reference = nullptr);

/// Sign of det [J; t^T]; changes across simple branch points, not across folds.
int bordered_determinant_sign(const SolutionPoint& point, const Eigen::VectorXd& tangent);

struct ContinuationState {
    SolutionPoint current;
    Eigen::VectorXd tangent;
    double step = 0.01;
    int orientation = 1;
};

/// current + step * orientation * tangent (unconverged seed).
SolutionPoint predict(const ContinuationState& state);

enum class EventKind { fold, branch_point, endpoint };

std::string to_string(EventKind k);
EventKind event_kind_from_string(const std::string& s);

struct CurveEvent {
    int index = 0;
    EventKind kind = EventKind::fold;
};

struct BranchCurve {
    std::vector<SolutionPoint> points;
    std::vector<Eigen::VectorXd> tangents;
    std::vector<CurveEvent> events;
    std::string provenance;

    bool empty() const { return points.empty(); }
    std::size_t size() const { return points.size(); }
    /// Event at `index`, if any (first match).
    std::optional<EventKind> event_at(int index) const;
    std::vector<int> event_indices(EventKind kind) const;
};

/// Event scan over the last two points of a curve under construction: folds from
/// the sign of the Omega component of the tangent, branch points from the sign
/// of the bordered determinant (reported only when no fold occurred).
std::vector<CurveEvent> detect_events(const std::vector<Eigen::VectorXd>& tangents, const std::vector<int>& det_signs,
                                      int first_index = 1);

/// Raised when step halving reaches step_min; carries the curve traced so far.
class TraceAborted : public NonConvergence {
public:
    TraceAborted(const std::string& what, BranchCurve partial);
    const BranchCurve& partial() const;

private:
    std::shared_ptr<const BranchCurve> partial_;
};

/// Trace from a converged point. `direction` selects the orientation of the
/// initial tangent relative to +Omega (or to `initial_tangent` when given).
BranchCurve trace(const SolutionPoint& start, int direction, const TraceLimits& limits,
                  const ContinuationSettings& settings = {}, const Eigen::VectorXd* initial_tangent = nullptr);

/// Trace both orientations from `start` and join them into one curve ordered by
/// increasing arclength along the +1 orientation. If either half aborts,
/// TraceAborted carries the joined curve as far as both halves got.
BranchCurve trace_both(const SolutionPoint& start, const TraceLimits& limits, const ContinuationSettings& settings = {},
                       const Eigen::VectorXd* initial_tangent = nullptr);

/// Kernel direction at a branch point orthogonal to the curve tangent.
Eigen::VectorXd branch_direction(const SolutionPoint& at, const Eigen::VectorXd& tangent);

/// Perturb `at` by +/- epsilon along `null_direction` and correct on the hyperplane
/// orthogonal to it through the perturbed point.
SolutionPoint switch_branch(const SolutionPoint& at, const Eigen::VectorXd& null_direction, double epsilon,
                            double tol = 1e-11, int max_iter = 25);

/// Fundamental trunk seed: Omega0 = 1 + 1e-4, c(0,0) = (4/3) sqrt(Omega0^2 - 1),
/// corrected at fixed Omega.
SolutionPoint trunk_seed(EquationKind kind, int M, int N, double omega0 = 1.0 + 1e-4, double tol = 1e-11);

}  // namespace nlosc

#include "nlosc/continuation.hpp"

#include <algorithm>
#include <cmath>

namespace nlosc {

namespace {

constexpr double singular_rcond = 1e-14;

Eigen::MatrixXd bordered(const Eigen::MatrixXd& J, const Eigen::VectorXd& row) {
    Eigen::MatrixXd B(J.rows() + 1, J.cols());
    B.topRows(J.rows()) = J;
    B.row(J.rows()) = row.transpose();
    return B;
}

int lu_sign(const Eigen::PartialPivLU<Eigen::MatrixXd>& lu) {
    int s = lu.permutationP().determinant() > 0 ? 1 : -1;
    const auto& U = lu.matrixLU();
    for (Eigen::Index i = 0; i < U.rows(); ++i) {
        if (U(i, i) < 0) s = -s;
        else if (U(i, i) == 0) return 0;
    }
    return s;
}

// Unit tangent from [J; ref^T] t = e_last; orientation follows ref.
Eigen::VectorXd bordered_tangent(const Eigen::MatrixXd& J, const Eigen::VectorXd& ref) {
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(J.cols());
    rhs(J.rows()) = 1.0;
    Eigen::VectorXd t = bordered(J, ref).partialPivLu().solve(rhs);
    if (!t.allFinite() || t.norm() == 0.0) throw SingularJacobian("tangent system is singular");
    return t / t.norm();
}

struct Tracer {
    EquationKind kind;
    int M, N;
    GalerkinSystem sys;
    const ContinuationSettings& cfg;

    Tracer(const SolutionPoint& start, const ContinuationSettings& settings)
        : kind(start.kind), M(start.M()), N(start.N()), sys(start.M(), start.N(), start.kind), cfg(settings) {}

    SolutionPoint seed(const Eigen::VectorXd& y) const {
        SolutionPoint p{kind, CoefficientGrid::from_flat(M, N, y), y(M * N), 0.0, 0.0, 0.0, std::nullopt};
        return p;
    }

    // Corrected point on the hyperplane orthogonal to t through y + s t.
    Correction step_from(const Eigen::VectorXd& y, const Eigen::VectorXd& t, double s) const {
        const Eigen::VectorXd pred = y + s * t;
        if (!(pred(M * N) > 0.0)) throw NonConvergence("predictor left the positive-frequency half space");
        return newton_correct(seed(pred), AffineConstraint::hyperplane(t, pred), cfg.tol, cfg.max_iter);
    }
};

}  // namespace

AffineConstraint AffineConstraint::fixed_omega(int unknowns, double omega) {
    AffineConstraint c;
    c.normal = Eigen::VectorXd::Zero(unknowns);
    c.normal(unknowns - 1) = 1.0;
    c.offset = omega;
    return c;
}

AffineConstraint AffineConstraint::hyperplane(const Eigen::VectorXd& direction, const Eigen::VectorXd& through) {
    return AffineConstraint{direction, direction.dot(through)};
}

Correction newton_correct(const SolutionPoint& seed, const AffineConstraint& constraint, double tol, int max_iter) {
    if (!(tol > 0.0)) throw InvalidArgument("tolerance must be positive");
    const int M = seed.M();
    const int N = seed.N();
    const int K = M * N;
    if (constraint.normal.size() != K + 1) throw InvalidArgument("constraint has the wrong dimension");
    const GalerkinSystem sys(M, N, seed.kind);

    Eigen::VectorXd y = seed.state();
    Eigen::VectorXd F(K + 1);
    const double constraint_tol = tol * (1.0 + std::abs(constraint.offset));
    for (int it = 0;; ++it) {
        if (!(y(K) > 0.0)) throw NonConvergence("Newton iterate reached nonpositive omega");
        F.head(K) = sys.residual(y);
        F(K) = constraint(y);
        const double res = F.head(K).lpNorm<Eigen::Infinity>();
        if (res <= tol && std::abs(F(K)) <= constraint_tol) {
            SolutionPoint p = make_point(seed.kind, M, N, y, tol);
            return Correction{std::move(p), it};
        }
        if (it >= max_iter) throw NonConvergence("Newton corrector did not converge (residual " + std::to_string(res) + ")");
        const Eigen::PartialPivLU<Eigen::MatrixXd> lu(bordered(sys.jacobian(y), constraint.normal));
        if (!(lu.rcond() > singular_rcond)) throw SingularJacobian("bordered Jacobian is numerically singular");
        const Eigen::VectorXd dy = lu.solve(-F);
        if (!dy.allFinite()) throw NonConvergence("Newton update is not finite");
        y += dy;
    }
}

Eigen::VectorXd tangent_at(const SolutionPoint& point, const Eigen::VectorXd* reference) {
    const Eigen::MatrixXd J = jacobian(point.grid, point.omega, point.kind);
    Eigen::VectorXd t;
    if (reference) {
        t = bordered_tangent(J, *reference);
    } else {
        const Eigen::JacobiSVD<Eigen::MatrixXd> svd(J, Eigen::ComputeFullV);
        t = svd.matrixV().col(J.cols() - 1);
        if (t(t.size() - 1) < 0) t = -t;
    }
    return t;
}

int bordered_determinant_sign(const SolutionPoint& point, const Eigen::VectorXd& tangent) {
    const Eigen::MatrixXd J = jacobian(point.grid, point.omega, point.kind);
    return lu_sign(Eigen::PartialPivLU<Eigen::MatrixXd>(bordered(J, tangent)));
}

SolutionPoint predict(const ContinuationState& state) {
    const Eigen::VectorXd y = state.current.state() + state.step * state.orientation * state.tangent;
    const int M = state.current.M();
    const int N = state.current.N();
    return SolutionPoint{state.current.kind, CoefficientGrid::from_flat(M, N, y), y(M * N), 0.0, 0.0, 0.0,
                         std::nullopt};
}

std::string to_string(EventKind k) {
    switch (k) {
    case EventKind::fold: return "fold";
    case EventKind::branch_point: return "branch_point";
    case EventKind::endpoint: return "endpoint";
    }
    return "";
}

EventKind event_kind_from_string(const std::string& s) {
    if (s == "fold") return EventKind::fold;
    if (s == "branch_point") return EventKind::branch_point;
    if (s == "endpoint") return EventKind::endpoint;
    throw InvalidArgument("unrecognised event kind '" + s + "'");
}

std::optional<EventKind> BranchCurve::event_at(int index) const {
    for (const auto& e : events)
        if (e.index == index) return e.kind;
    return std::nullopt;
}

std::vector<int> BranchCurve::event_indices(EventKind kind) const {
    std::vector<int> out;
    for (const auto& e : events)
        if (e.kind == kind) out.push_back(e.index);
    return out;
}

std::vector<CurveEvent> detect_events(const std::vector<Eigen::VectorXd>& tangents, const std::vector<int>& det_signs,
                                      int first_index) {
    std::vector<CurveEvent> out;
    const int n = static_cast<int>(std::min(tangents.size(), det_signs.size()));
    for (int i = std::max(first_index, 1); i < n; ++i) {
        const double w0 = tangents[i - 1](tangents[i - 1].size() - 1);
        const double w1 = tangents[i](tangents[i].size() - 1);
        const bool fold = w0 * w1 < 0.0;
        if (fold) out.push_back({i, EventKind::fold});
        else if (det_signs[i - 1] * det_signs[i] < 0) out.push_back({i, EventKind::branch_point});
    }
    return out;
}

TraceAborted::TraceAborted(const std::string& what, BranchCurve partial)
    : NonConvergence(what), partial_(std::make_shared<const BranchCurve>(std::move(partial))) {}

const BranchCurve& TraceAborted::partial() const { return *partial_; }

BranchCurve trace(const SolutionPoint& start, int direction, const TraceLimits& limits,
                  const ContinuationSettings& settings, const Eigen::VectorXd* initial_tangent) {
    if (direction != 1 && direction != -1) throw InvalidArgument("direction must be +1 or -1");
    if (!(start.residual_norm <= settings.tol)) throw InvalidArgument("start point is not converged to tol");
    const Tracer tr(start, settings);
    const int K = start.M() * start.N();

    BranchCurve curve;
    std::vector<int> signs;

    Eigen::VectorXd t = tangent_at(start, initial_tangent) * direction;
    curve.points.push_back(start);
    curve.tangents.push_back(t);
    signs.push_back(bordered_determinant_sign(start, t));

    auto finish = [&](EventKind kind) { curve.events.push_back({static_cast<int>(curve.size()) - 1, kind}); };

    double h = std::clamp(settings.step_init, settings.step_min, settings.step_max);
    int easy = 0;
    while (static_cast<int>(curve.size()) < limits.max_points) {
        const SolutionPoint& cur = curve.points.back();
        const Eigen::VectorXd y = cur.state();
        const Eigen::VectorXd& t_prev = curve.tangents.back();

        std::optional<Correction> corr;
        Eigen::VectorXd t_new;
        bool ok = false;
        try {
            corr = tr.step_from(y, t_prev, h);
            const Eigen::VectorXd y_new = corr->point.state();
            t_new = bordered_tangent(jacobian(corr->point.grid, corr->point.omega, corr->point.kind), t_prev);
            const double turn = std::acos(std::clamp(t_new.dot(t_prev), -1.0, 1.0));
            ok = (y_new - y).norm() <= 2.0 * h && turn <= settings.max_turn;
        } catch (const NonConvergence&) {
        } catch (const SingularJacobian&) {
        }
        if (!ok) {
            h *= 0.5;
            easy = 0;
            if (h < settings.step_min) {
                finish(EventKind::endpoint);
                throw TraceAborted("continuation step fell below step_min", std::move(curve));
            }
            continue;
        }

        const Correction& c = *corr;
        const double u00_prev = cur.fundamental();
        const int sign_prev = signs.back();
        const int sign_new = bordered_determinant_sign(c.point, t_new);
        const bool fold = t_prev(K) * t_new(K) < 0.0;
        const bool branch = !fold && sign_prev * sign_new < 0;
        const double h_used = h;
        if (branch && settings.resolve_jumps && h > settings.jump_resolution &&
            u00_prev * c.point.fundamental() > 0.0) {
            h *= 0.5;
            easy = 0;
            continue;
        }

        if (branch && settings.locate_branch_points) {
            // Bisection in arclength on the determinant sign.
            double lo = 0.0, hi = h_used;
            std::optional<Correction> best;
            Eigen::VectorXd best_t;
            while (hi - lo > settings.bisection_tol) {
                const double mid = 0.5 * (lo + hi);
                try {
                    Correction cm = tr.step_from(y, t_prev, mid);
                    if ((cm.point.state() - y).norm() > 2.0 * h_used) break;
                    const Eigen::VectorXd tm =
                        bordered_tangent(jacobian(cm.point.grid, cm.point.omega, cm.point.kind), t_prev);
                    const int sm = bordered_determinant_sign(cm.point, tm);
                    if (sm == sign_prev) lo = mid;
                    else hi = mid;
                    best = std::move(cm);
                    best_t = tm;
                } catch (const NonConvergence&) {
                    break;
                } catch (const SingularJacobian&) {
                    break;
                }
            }
            if (best) {
                curve.points.push_back(best->point);
                curve.tangents.push_back(best_t);
                signs.push_back(sign_prev);
                finish(EventKind::branch_point);
            }
        }

        curve.points.push_back(c.point);
        curve.tangents.push_back(t_new);
        signs.push_back(sign_new);
        if (fold) finish(EventKind::fold);
        else if (branch && !settings.locate_branch_points) finish(EventKind::branch_point);

        const SolutionPoint& p = curve.points.back();
        const double u00 = p.fundamental();
        if (settings.stop_at_fundamental_zero && (u00_prev * u00 < 0.0 || std::abs(u00) < settings.fundamental_floor)) {
            if (std::abs(u00) >= settings.fundamental_floor) {
                // Regula falsi (Illinois) in arclength on the fundamental amplitude.
                double a = 0.0, fa = u00_prev, b = h_used, fb = u00;
                std::optional<Correction> best;
                Eigen::VectorXd best_t;
                for (int it = 0; it < 100; ++it) {
                    const double s = (a * fb - b * fa) / (fb - fa);
                    try {
                        Correction cm = tr.step_from(y, t_prev, s);
                        if ((cm.point.state() - y).norm() > 2.0 * h_used) break;
                        const double fs = cm.point.fundamental();
                        best_t = bordered_tangent(jacobian(cm.point.grid, cm.point.omega, cm.point.kind), t_prev);
                        best = std::move(cm);
                        if (std::abs(fs) < settings.fundamental_floor) break;
                        if (fs * fb < 0.0) {
                            a = b;
                            fa = fb;
                        } else {
                            fa *= 0.5;
                        }
                        b = s;
                        fb = fs;
                    } catch (const NonConvergence&) {
                        break;
                    } catch (const SingularJacobian&) {
                        break;
                    }
                }
                if (best) {
                    curve.points.back() = best->point;
                    curve.tangents.back() = best_t;
                }
            }
            finish(EventKind::endpoint);
            break;
        }
        if (p.energy > limits.energy_max || p.omega > limits.omega_max || p.omega < limits.omega_min) {
            finish(EventKind::endpoint);
            break;
        }

        if (c.iterations <= 3) {
            if (++easy >= 3) {
                h = std::min(2.0 * h, settings.step_max);
                easy = 0;
            }
        } else {
            easy = 0;
        }
    }
    if (curve.events.empty() || curve.events.back().index != static_cast<int>(curve.size()) - 1 ||
        curve.events.back().kind != EventKind::endpoint)
        finish(EventKind::endpoint);
    return curve;
}

BranchCurve trace_both(const SolutionPoint& start, const TraceLimits& limits, const ContinuationSettings& settings,
                       const Eigen::VectorXd* initial_tangent) {
    std::optional<BranchCurve> halves[2];
    std::string failure;
    bool aborted = false;
    for (int k = 0; k < 2; ++k) {
        try {
            halves[k] = trace(start, k == 0 ? -1 : 1, limits, settings, initial_tangent);
        } catch (const TraceAborted& e) {
            halves[k] = e.partial();
            failure = e.what();
            aborted = true;
        }
    }
    const BranchCurve& back = *halves[0];
    const BranchCurve& fwd = *halves[1];
    BranchCurve out;
    const int nb = static_cast<int>(back.size());
    for (int i = nb - 1; i >= 1; --i) {
        out.points.push_back(back.points[i]);
        out.tangents.push_back(-back.tangents[i]);
    }
    for (const auto& e : back.events)
        if (e.index >= 1) out.events.push_back({nb - 1 - e.index, e.kind});
    std::reverse(out.events.begin(), out.events.end());
    const int offset = nb - 1;
    out.points.insert(out.points.end(), fwd.points.begin(), fwd.points.end());
    out.tangents.insert(out.tangents.end(), fwd.tangents.begin(), fwd.tangents.end());
    for (const auto& e : fwd.events) out.events.push_back({e.index + offset, e.kind});
    if (aborted) throw TraceAborted(failure, std::move(out));
    return out;
}

Eigen::VectorXd branch_direction(const SolutionPoint& at, const Eigen::VectorXd& tangent) {
    const Eigen::MatrixXd J = jacobian(at.grid, at.omega, at.kind);
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(J, Eigen::ComputeFullV);
    const auto& V = svd.matrixV();
    const Eigen::Index n = V.cols();
    // Two right singular vectors with the smallest singular values span the kernel.
    Eigen::VectorXd best;
    double best_norm = -1.0;
    for (Eigen::Index k = n - 2; k < n; ++k) {
        Eigen::VectorXd v = V.col(k);
        v -= v.dot(tangent) * tangent;
        if (v.norm() > best_norm) {
            best_norm = v.norm();
            best = v;
        }
    }
    return best / best.norm();
}

SolutionPoint switch_branch(const SolutionPoint& at, const Eigen::VectorXd& null_direction, double epsilon, double tol,
                            int max_iter) {
    const Eigen::VectorXd phi = null_direction / null_direction.norm();
    const Eigen::VectorXd y = at.state();
    const int M = at.M();
    const int N = at.N();
    for (const double s : {epsilon, -epsilon}) {
        const Eigen::VectorXd pred = y + s * phi;
        if (!(pred(M * N) > 0.0)) continue;
        const SolutionPoint seed{at.kind, CoefficientGrid::from_flat(M, N, pred), pred(M * N), 0.0, 0.0, 0.0,
                                 std::nullopt};
        try {
            return newton_correct(seed, AffineConstraint::hyperplane(phi, pred), tol, max_iter).point;
        } catch (const NonConvergence&) {
        } catch (const SingularJacobian&) {
        }
    }
    throw NonConvergence("branch switching failed for both perturbation signs");
}

SolutionPoint trunk_seed(EquationKind kind, int M, int N, double omega0, double tol) {
    if (!(omega0 > 1.0)) throw InvalidArgument("trunk seed frequency must exceed 1");
    CoefficientGrid g(M, N);
    g(0, 0) = 4.0 / 3.0 * std::sqrt(omega0 * omega0 - 1.0);
    const SolutionPoint seed{kind, std::move(g), omega0, 0.0, 0.0, 0.0, std::nullopt};
    return newton_correct(seed, AffineConstraint::fixed_omega(M * N + 1, omega0), tol).point;
}

}  // namespace nlosc

#include "cli.hpp"

#include "nlosc/continuation.hpp"
#include "nlosc/floquet.hpp"
#include "nlosc/io.hpp"
#include "nlosc/model.hpp"
#include "nlosc/reducible.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace nlosc::cli {

namespace {

namespace fs = std::filesystem;

constexpr double inf = std::numeric_limits<double>::infinity();

struct RunConfig {
    int nu = 0;
    int N = 1;
    int M = 0;  // 0: N^2
    double tol = 1e-11;
    std::string out_dir = ".";
    int threads = 1;
    double seed_omega = 1.0 + 1e-4;

    double omega_min = 0.0;
    double omega_max = 3.0;
    double energy_max = inf;
    int max_points = 2000;
    double step_min = 1e-8;
    double step_max = 0.1;
    double step_init = 0.01;
    bool branches = false;
    bool switch_branches = false;
    double switch_eps = 1e-3;
    bool resolve_jumps = false;
    bool through_tips = false;
    int max_m = -1;

    int samples = 200;

    std::string input;
    int K = 0;
    int steps = 4096;
    int order = 6;
    double threshold = 1e-12;
    int refine_M = 0;
    bool write_multipliers = false;

    int nt = 65;
    int nx = 33;

    int m_scale = 1;
    int n_scale = 1;
    int target_M = 0;
    int target_N = 0;
};

// Files are collected during a command and written once at the end.
using Outputs = std::vector<std::pair<std::string, std::string>>;

void write_outputs(const RunConfig& cfg, const Outputs& files) {
    if (files.empty()) return;
    fs::create_directories(cfg.out_dir);
    for (const auto& [name, content] : files) {
        const fs::path path = fs::path(cfg.out_dir) / name;
        write_file(path.string(), content);
        fmt::print(stderr, "wrote {}\n", path.string());
    }
}

class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

void require(bool cond, const std::string& key, const std::string& what) {
    if (!cond) throw InputError(fmt::format("invalid value for '{}': {}", key, what));
}

EquationKind equation(const RunConfig& cfg) {
    require(cfg.nu == 1 || cfg.nu == 2, "nu", "must be given as 1 (wave) or 2 (beam)");
    return EquationKind(cfg.nu);
}

int time_modes(const RunConfig& cfg) { return cfg.M > 0 ? cfg.M : cfg.N * cfg.N; }

ContinuationSettings continuation_settings(const RunConfig& cfg) {
    require(cfg.tol > 0.0, "tol", "must be positive");
    require(cfg.step_min > 0.0 && cfg.step_min <= cfg.step_max, "step-min", "must satisfy 0 < step-min <= step-max");
    require(cfg.step_init >= cfg.step_min && cfg.step_init <= cfg.step_max, "step-init",
            "must lie in [step-min, step-max]");
    ContinuationSettings s;
    s.tol = cfg.tol;
    s.step_min = cfg.step_min;
    s.step_max = cfg.step_max;
    s.step_init = cfg.step_init;
    s.resolve_jumps = cfg.resolve_jumps;
    s.stop_at_fundamental_zero = !cfg.through_tips;
    return s;
}

void add_curve(Outputs& out, const std::string& stem, const BranchCurve& c) {
    out.emplace_back(stem + ".csv", to_csv(c));
    out.emplace_back(stem + ".json", to_json(c));
}

std::string describe(const BranchCurve& c) {
    std::map<EventKind, int> counts;
    for (const auto& e : c.events) ++counts[e.kind];
    return fmt::format("{} points, {} folds, {} branch points", c.size(), counts[EventKind::fold],
                       counts[EventKind::branch_point]);
}

// Two-mode seed for the family of `pair`, refined in the full truncation at the
// middle of its window.
std::optional<SolutionPoint> branch_seed(const ModePair& pair, int M, int N, double tol) {
    const auto [lo, hi] = branch_window(pair);
    const double omega = std::sqrt(0.5 * (lo + hi));
    ReducibleSolution sol = two_mode_branch(pair, omega);
    if (pair.kind().nu() == 2 && pair.m() == 1 && pair.n() == 1) {
        // the beam (1,1) pair carries extra coupling terms; take the nearest root
        double best = inf;
        for (const auto& s : nonreducible_11_beam(omega)) {
            if (s.amplitudes[0] == 0.0 || s.amplitudes[1] == 0.0) continue;
            const double d = std::hypot(s.amplitudes[0] - sol.amplitudes[0], s.amplitudes[1] - sol.amplitudes[1]);
            if (d < best) {
                best = d;
                sol.amplitudes = s.amplitudes;
            }
        }
    }
    if (pair.m() >= M || pair.n() >= N) return std::nullopt;
    const SolutionPoint seed = make_point(pair.kind(), sol.to_grid(M, N), omega);
    return newton_correct(seed, AffineConstraint::fixed_omega(M * N + 1, omega), tol).point;
}

int cmd_trace(const RunConfig& cfg) {
    const EquationKind kind = equation(cfg);
    require(cfg.N >= 1, "N", "must be a positive integer");
    const int M = time_modes(cfg);
    require(M >= 1, "M", "must be a positive integer");
    require(cfg.omega_max > cfg.omega_min, "omega-max", "omega range is empty");
    require(cfg.seed_omega > 1.0, "seed-omega", "must exceed 1");
    require(cfg.seed_omega >= cfg.omega_min && cfg.seed_omega < cfg.omega_max, "seed-omega",
            "must lie inside [omega-min, omega-max)");
    require(cfg.max_points >= 2, "max-points", "must be at least 2");
    require(cfg.switch_eps > 0.0, "switch-eps", "must be positive");
    const ContinuationSettings settings = continuation_settings(cfg);
    TraceLimits limits;
    limits.max_points = cfg.max_points;
    limits.energy_max = cfg.energy_max;
    limits.omega_min = cfg.omega_min;
    limits.omega_max = cfg.omega_max;

    SolutionPoint start = [&] {
        try {
            return trunk_seed(kind, M, cfg.N, cfg.seed_omega, cfg.tol);
        } catch (const NonConvergence& e) {
            throw InputError(fmt::format("trunk seed did not converge: {}", e.what()));
        } catch (const SingularJacobian& e) {
            throw InputError(fmt::format("trunk seed did not converge: {}", e.what()));
        }
    }();

    Outputs out;
    bool incomplete = false;
    BranchCurve trunk;
    try {
        trunk = trace(start, 1, limits, settings);
    } catch (const TraceAborted& e) {
        trunk = e.partial();
        incomplete = true;
        fmt::print(stderr, "trunk trace aborted: {}\n", e.what());
    }
    trunk.provenance = "trunk";
    fmt::print(stderr, "trunk: {}\n", describe(trunk));
    add_curve(out, "trunk", trunk);

    if (cfg.branches) {
        for (const auto& pair : admissible_pairs(cfg.N, kind, cfg.max_m)) {
            const std::string label = fmt::format("branch (m,n)=({},{})", pair.m(), pair.n());
            std::optional<SolutionPoint> seed;
            try {
                seed = branch_seed(pair, M, cfg.N, cfg.tol);
            } catch (const std::runtime_error& e) {
                fmt::print(stderr, "{}: seed failed: {}\n", label, e.what());
                incomplete = true;
                continue;
            }
            if (!seed) {
                fmt::print(stderr, "{}: mode outside the truncation, skipped\n", label);
                continue;
            }
            if (seed->omega < cfg.omega_min || seed->omega > cfg.omega_max) {
                fmt::print(stderr, "{}: window at omega={:.6g} outside the omega range, skipped\n", label,
                           seed->omega);
                continue;
            }
            BranchCurve c;
            try {
                c = trace_both(*seed, limits, settings);
            } catch (const TraceAborted& e) {
                c = e.partial();
                incomplete = true;
                fmt::print(stderr, "{}: trace aborted: {}\n", label, e.what());
            }
            c.provenance = label;
            fmt::print(stderr, "{}: {}\n", label, describe(c));
            add_curve(out, fmt::format("branch_m{}_n{}", pair.m(), pair.n()), c);
        }
    }

    if (cfg.switch_branches) {
        int k = 0;
        for (const int idx : trunk.event_indices(EventKind::branch_point)) {
            const std::string label = fmt::format("switched at trunk point {}", idx);
            BranchCurve c;
            try {
                const SolutionPoint& at = trunk.points[idx];
                const Eigen::VectorXd phi = branch_direction(at, trunk.tangents[idx]);
                const SolutionPoint p = switch_branch(at, phi, cfg.switch_eps, cfg.tol);
                c = trace_both(p, limits, settings, &phi);
            } catch (const TraceAborted& e) {
                c = e.partial();
                incomplete = true;
                fmt::print(stderr, "{}: trace aborted: {}\n", label, e.what());
            } catch (const std::runtime_error& e) {
                fmt::print(stderr, "{}: switching failed: {}\n", label, e.what());
                incomplete = true;
                continue;
            }
            c.provenance = label;
            fmt::print(stderr, "{}: {}\n", label, describe(c));
            add_curve(out, fmt::format("switched_{}", k++), c);
        }
    }

    write_outputs(cfg, out);
    return incomplete ? partial : ok;
}

int cmd_reducible_tree(const RunConfig& cfg) {
    const EquationKind kind = equation(cfg);
    require(cfg.N >= 1, "N", "must be a positive integer");
    require(cfg.samples >= 2, "samples", "must be at least 2");
    require(cfg.omega_max > cfg.omega_min, "omega-max", "omega range is empty");
    std::vector<double> grid(cfg.samples);
    for (int i = 0; i < cfg.samples; ++i)
        grid[i] = cfg.omega_min + (cfg.omega_max - cfg.omega_min) * i / (cfg.samples - 1);
    const auto rows = reducible_tree(cfg.N, kind, grid, cfg.max_m);
    fmt::print(stderr, "reducible tree: {} pairs, {} rows\n", admissible_pairs(cfg.N, kind, cfg.max_m).size(),
               rows.size());
    write_outputs(cfg, {{"reducible_tree.csv", tree_to_csv(rows)}});
    return ok;
}

BranchCurve load_curve(const RunConfig& cfg) {
    require(!cfg.input.empty(), "input", "a curve file is required");
    const std::string text = read_file(cfg.input);
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) return {};
    if (fs::path(cfg.input).extension() == ".csv") {
        require(cfg.N >= 1, "N", "must be a positive integer");
        return curve_from_csv(text, equation(cfg), time_modes(cfg), cfg.N);
    }
    return curve_from_json(text);
}

int cmd_stability(const RunConfig& cfg) {
    require(cfg.steps >= 64, "steps", "must be at least 64");
    require(cfg.order == 4 || cfg.order == 6 || cfg.order == 8, "order", "must be 4, 6 or 8");
    require(cfg.threshold > 0.0, "threshold", "must be positive");
    require(cfg.K <= 0 || cfg.K % 2 == 1, "K", "must be odd");
    require(cfg.threads >= 1, "threads", "must be positive");
    const BranchCurve curve = load_curve(cfg);
    ScanSettings s;
    s.floquet.steps = cfg.steps;
    s.floquet.order = cfg.order;
    s.floquet.threshold = cfg.threshold;
    s.K = cfg.K;
    s.refine_M = cfg.refine_M;
    s.threads = cfg.threads;
    const auto scan = stability_scan(curve, s);
    int stable = 0, unstable = 0, failed = 0;
    for (const auto& r : scan) {
        if (!r.error.empty()) {
            ++failed;
            fmt::print(stderr, "point {}: {}\n", r.index, r.error);
        } else if (r.point.stability == Stability::stable) {
            ++stable;
        } else {
            ++unstable;
        }
    }
    fmt::print(stderr, "stability: {} stable, {} unstable, {} failed\n", stable, unstable, failed);
    Outputs out{{"stability.csv", scan_to_csv(scan)}};
    if (cfg.write_multipliers) out.emplace_back("multipliers.json", scan_multipliers_json(scan));
    write_outputs(cfg, out);
    return ok;
}

SolutionPoint load_point(const RunConfig& cfg) {
    require(!cfg.input.empty(), "input", "a solution file is required");
    return solution_from_json(read_file(cfg.input));
}

int cmd_field_sample(const RunConfig& cfg) {
    require(cfg.nt >= 1, "nt", "must be positive");
    require(cfg.nx >= 1, "nx", "must be positive");
    const SolutionPoint p = load_point(cfg);
    write_outputs(cfg, {{"field.csv", field_sample_csv(p.grid, cfg.nt, cfg.nx)}});
    return ok;
}

int cmd_rescale(const RunConfig& cfg) {
    require(cfg.m_scale >= 1 && cfg.m_scale % 2 == 1, "m-scale", "must be an odd positive integer");
    require(cfg.n_scale >= 1 && cfg.n_scale % 2 == 1, "n-scale", "must be an odd positive integer");
    const SolutionPoint p = load_point(cfg);
    const SolutionPoint r = rescale(p, {cfg.m_scale, cfg.n_scale}, cfg.target_M, cfg.target_N);
    fmt::print(stderr, "rescaled: omega={} energy={} residual={:.3e}\n", format_real(r.omega), format_real(r.energy),
               r.residual_norm);
    write_outputs(cfg, {{"rescaled.json", to_json(r) + "\n"}});
    return ok;
}

}  // namespace

int run(int argc, const char* const* argv) {
    RunConfig cfg;
    CLI::App app{"Periodic solutions of the cubic wave and beam equations"};
    app.set_config("--config", "", "flat key=value file; command-line values take precedence");
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.require_subcommand(1);

    app.add_option("--nu", cfg.nu, "1 = wave, 2 = beam")->check(CLI::IsMember({1, 2}));
    app.add_option("--N", cfg.N, "space modes")->check(CLI::PositiveNumber);
    app.add_option("--M", cfg.M, "time modes (default N^2)")->check(CLI::PositiveNumber);
    app.add_option("--tol", cfg.tol, "residual tolerance")->check(CLI::PositiveNumber);
    app.add_option("--out-dir", cfg.out_dir, "output directory");
    app.add_option("--threads", cfg.threads, "worker threads")->check(CLI::PositiveNumber);
    app.add_option("--seed-omega", cfg.seed_omega, "trunk seed frequency");

    app.add_option("--omega-min", cfg.omega_min);
    app.add_option("--omega-max", cfg.omega_max);
    app.add_option("--energy-max", cfg.energy_max)->check(CLI::PositiveNumber);
    app.add_option("--max-points", cfg.max_points);
    app.add_option("--step-min", cfg.step_min);
    app.add_option("--step-max", cfg.step_max);
    app.add_option("--step-init", cfg.step_init);
    app.add_flag("--branches", cfg.branches, "also trace the two-mode families seeded from closed forms");
    app.add_flag("--switch", cfg.switch_branches, "switch branches at detected trunk branch points");
    app.add_option("--switch-eps", cfg.switch_eps);
    app.add_flag("--resolve-jumps", cfg.resolve_jumps, "refine steps that hop across thin junctions");
    app.add_flag("--through-tips", cfg.through_tips, "continue past points where the fundamental mode vanishes");
    app.add_option("--max-m", cfg.max_m, "largest time index of two-mode families (default N-1)");
    app.add_option("--samples", cfg.samples, "omega samples of the reducible tree");

    app.add_option("--input", cfg.input, "input curve or solution file");
    app.add_option("--K", cfg.K, "perturbation modes (default 2N-1)");
    app.add_option("--steps", cfg.steps, "integration steps per period");
    app.add_option("--order", cfg.order, "integrator order (4, 6, 8)");
    app.add_option("--threshold", cfg.threshold, "stability threshold on ||lambda|-1|");
    app.add_option("--refine-M", cfg.refine_M, "time modes of the refined background (default max(M, 3N^2))");
    app.add_flag("--multipliers", cfg.write_multipliers, "also write all multipliers as JSON");

    app.add_option("--nt", cfg.nt, "tau samples");
    app.add_option("--nx", cfg.nx, "x samples");

    app.add_option("--m-scale", cfg.m_scale);
    app.add_option("--n-scale", cfg.n_scale);
    app.add_option("--target-M", cfg.target_M);
    app.add_option("--target-N", cfg.target_N);

    std::function<int(const RunConfig&)> command;
    auto sub = [&](const char* name, const char* help, int (*fn)(const RunConfig&)) {
        app.add_subcommand(name, help)->fallthrough()->callback([&command, fn] { command = fn; });
    };
    sub("trace", "continue the trunk (and optionally branches)", cmd_trace);
    sub("reducible-tree", "closed-form trunk and two-mode families", cmd_reducible_tree);
    sub("stability", "Floquet stability scan of a traced curve", cmd_stability);
    sub("field-sample", "sample u(tau, x) of a stored solution", cmd_field_sample);
    sub("rescale", "apply the scaling symmetry to a stored solution", cmd_rescale);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : invalid_input;
    }

    try {
        return command(cfg);
    } catch (const InputError& e) {
        fmt::print(stderr, "error: {}\n", e.what());
    } catch (const InvalidArgument& e) {
        fmt::print(stderr, "error: {}\n", e.what());
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
    }
    return invalid_input;
}

}  // namespace nlosc::cli

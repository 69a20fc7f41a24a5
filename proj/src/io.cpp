#include "nlosc/io.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

namespace nlosc {

namespace {

using nlohmann::json;

std::string quoted(const std::string& s) { return json(s).dump(); }

std::string real_or_null(double x) { return std::isfinite(x) ? format_real(x) : "null"; }

std::string real_array(const Eigen::VectorXd& v) {
    std::string out = "[";
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        out += real_or_null(v(i));
    }
    return out + "]";
}

double as_real(const json& j, const char* key) {
    if (!j.contains(key)) throw ParseError(fmt::format("missing field '{}'", key));
    const json& v = j.at(key);
    if (!v.is_number()) throw ParseError(fmt::format("field '{}' is not a number", key));
    return v.get<double>();
}

int as_int(const json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_number_integer())
        throw ParseError(fmt::format("missing or non-integer field '{}'", key));
    return j.at(key).get<int>();
}

json parse(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed JSON: ") + e.what());
    }
}

SolutionPoint point_from(const json& j) {
    if (!j.is_object()) throw ParseError("solution point must be a JSON object");
    const EquationKind kind(as_int(j, "nu"));
    const int M = as_int(j, "M");
    const int N = as_int(j, "N");
    if (M < 1 || N < 1) throw ParseError("M and N must be positive");
    if (!j.contains("coeffs") || !j.at("coeffs").is_array() ||
        j.at("coeffs").size() != static_cast<std::size_t>(M) * N)
        throw ParseError("field 'coeffs' must be an array of M*N numbers");
    Eigen::VectorXd flat(M * N);
    for (int i = 0; i < M * N; ++i) {
        const json& v = j.at("coeffs")[i];
        if (!v.is_number()) throw ParseError("non-numeric coefficient");
        flat(i) = v.get<double>();
    }
    const double omega = as_real(j, "omega");
    if (!(omega > 0.0)) throw ParseError("omega must be positive");
    const double tol = j.contains("tol") && j.at("tol").is_number() ? j.at("tol").get<double>() : 0.0;
    SolutionPoint p = make_point(kind, CoefficientGrid::from_flat(M, N, flat), omega);
    p.tol = std::max(tol, p.residual_norm);
    if (j.contains("stability") && j.at("stability").is_string())
        p.stability = stability_from_string(j.at("stability").get<std::string>());
    return p;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(line);
    while (std::getline(is, cur, sep)) out.push_back(cur);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

double to_real(const std::string& s) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw ParseError("trailing characters in number '" + s + "'");
        return v;
    } catch (const std::logic_error&) {
        throw ParseError("invalid number '" + s + "'");
    }
}

}  // namespace

std::string format_real(double x) { return fmt::format("{:.16e}", x); }

std::string to_json(const SolutionPoint& p) {
    return fmt::format(
        "{{\"nu\":{},\"M\":{},\"N\":{},\"omega\":{},\"energy\":{},\"residual_norm\":{},\"tol\":{},\"coeffs\":{},"
        "\"stability\":{}}}",
        p.kind.nu(), p.M(), p.N(), format_real(p.omega), real_or_null(p.energy), real_or_null(p.residual_norm),
        format_real(p.tol), real_array(p.grid.flat()), p.stability ? quoted(to_string(*p.stability)) : "null");
}

SolutionPoint solution_from_json(const std::string& text) { return point_from(parse(text)); }

std::string coefficient_label(int m, int n, int M, int N) {
    return M > 10 || N > 10 ? fmt::format("u{}_{}", m, n) : fmt::format("u{}{}", m, n);
}

std::string to_csv(const BranchCurve& curve) {
    std::string out = "index,omega,energy,residual_norm";
    const int M = curve.empty() ? 0 : curve.points.front().M();
    const int N = curve.empty() ? 0 : curve.points.front().N();
    for (int m = 0; m < M; ++m)
        for (int n = 0; n < N; ++n) out += "," + coefficient_label(m, n, M, N);
    out += ",event\n";
    for (std::size_t i = 0; i < curve.size(); ++i) {
        const SolutionPoint& p = curve.points[i];
        out += fmt::format("{},{},{},{}", i, format_real(p.omega), format_real(p.energy), format_real(p.residual_norm));
        for (int m = 0; m < M; ++m)
            for (int n = 0; n < N; ++n) out += "," + format_real(p.grid(m, n));
        const auto ev = curve.event_at(static_cast<int>(i));
        out += "," + (ev ? to_string(*ev) : std::string()) + "\n";
    }
    return out;
}

std::string to_json(const BranchCurve& curve) {
    std::string out = "{\"provenance\":" + quoted(curve.provenance) + ",\"points\":[";
    for (std::size_t i = 0; i < curve.size(); ++i) out += (i ? ",\n" : "\n") + to_json(curve.points[i]);
    out += "],\"tangents\":[";
    for (std::size_t i = 0; i < curve.tangents.size(); ++i) out += (i ? ",\n" : "\n") + real_array(curve.tangents[i]);
    out += "],\"events\":[";
    for (std::size_t i = 0; i < curve.events.size(); ++i)
        out += fmt::format("{}{{\"index\":{},\"kind\":\"{}\"}}", i ? "," : "", curve.events[i].index,
                           to_string(curve.events[i].kind));
    return out + "]}\n";
}

BranchCurve curve_from_json(const std::string& text) {
    const json j = parse(text);
    if (!j.is_object() || !j.contains("points") || !j.at("points").is_array())
        throw ParseError("branch curve must be an object with a 'points' array");
    BranchCurve c;
    if (j.contains("provenance") && j.at("provenance").is_string()) c.provenance = j.at("provenance");
    for (const auto& p : j.at("points")) c.points.push_back(point_from(p));
    for (std::size_t i = 1; i < c.size(); ++i)
        if (c.points[i].M() != c.points[0].M() || c.points[i].N() != c.points[0].N() ||
            !(c.points[i].kind == c.points[0].kind))
            throw ParseError("curve points differ in truncation or equation");
    if (j.contains("tangents") && j.at("tangents").is_array()) {
        for (const auto& t : j.at("tangents")) {
            if (!t.is_array()) throw ParseError("tangent must be an array");
            Eigen::VectorXd v(t.size());
            for (std::size_t k = 0; k < t.size(); ++k) v(k) = t[k].get<double>();
            c.tangents.push_back(std::move(v));
        }
        if (!c.tangents.empty() && c.tangents.size() != c.size())
            throw ParseError("tangent count differs from point count");
    }
    if (j.contains("events") && j.at("events").is_array())
        for (const auto& e : j.at("events")) {
            const int idx = as_int(e, "index");
            if (idx < 0 || static_cast<std::size_t>(idx) >= c.size()) throw ParseError("event index out of range");
            if (!e.contains("kind") || !e.at("kind").is_string()) throw ParseError("event without kind");
            try {
                c.events.push_back({idx, event_kind_from_string(e.at("kind").get<std::string>())});
            } catch (const InvalidArgument& ex) {
                throw ParseError(ex.what());
            }
        }
    return c;
}

BranchCurve curve_from_csv(const std::string& text, EquationKind kind, int M, int N) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line)) throw ParseError("empty curve file");
    const auto header = split(line, ',');
    const std::size_t cols = 5 + static_cast<std::size_t>(M) * N;
    if (header.size() != cols || header[0] != "index" || header[1] != "omega" || header.back() != "event")
        throw ParseError(fmt::format("curve header does not match an {}x{} grid", M, N));
    BranchCurve c;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != cols) throw ParseError(fmt::format("row {} has {} fields, expected {}", c.size(), f.size(), cols));
        Eigen::VectorXd flat(M * N);
        for (int k = 0; k < M * N; ++k) flat(k) = to_real(f[4 + k]);
        const double omega = to_real(f[1]);
        if (!(omega > 0.0)) throw ParseError("omega must be positive");
        SolutionPoint p = make_point(kind, CoefficientGrid::from_flat(M, N, flat), omega);
        p.tol = std::max(p.residual_norm, to_real(f[3]));
        const int idx = static_cast<int>(c.size());
        c.points.push_back(std::move(p));
        if (!f.back().empty()) {
            try {
                c.events.push_back({idx, event_kind_from_string(f.back())});
            } catch (const InvalidArgument& ex) {
                throw ParseError(ex.what());
            }
        }
    }
    // tangents are not stored; recover them oriented along the point order
    for (std::size_t i = 0; i < c.size(); ++i) {
        const std::size_t a = i + 1 < c.size() ? i : (i > 0 ? i - 1 : i);
        const std::size_t b = i + 1 < c.size() ? i + 1 : i;
        Eigen::VectorXd d = c.points[b].state() - c.points[a].state();
        c.tangents.push_back(d.norm() > 0.0 ? tangent_at(c.points[i], &d) : tangent_at(c.points[i]));
    }
    return c;
}

std::string scan_to_csv(const std::vector<ScanResult>& scan) {
    std::string out = "index,omega,energy,verdict,max_dev\n";
    for (const auto& r : scan)
        out += fmt::format("{},{},{},{},{}\n", r.index, format_real(r.point.omega), format_real(r.point.energy),
                           to_string(r.point.stability.value_or(Stability::unknown)),
                           r.spectrum ? format_real(r.spectrum->max_dev) : std::string());
    return out;
}

std::string scan_multipliers_json(const std::vector<ScanResult>& scan) {
    std::string out = "{\"points\":[";
    for (std::size_t i = 0; i < scan.size(); ++i) {
        const auto& r = scan[i];
        out += fmt::format("{}\n{{\"index\":{},\"omega\":{},\"multipliers\":[", i ? "," : "", r.index,
                           format_real(r.point.omega));
        if (r.spectrum)
            for (std::size_t k = 0; k < r.spectrum->multipliers.size(); ++k) {
                const auto& l = r.spectrum->multipliers[k];
                out += fmt::format("{}[{},{}]", k ? "," : "", format_real(l.real()), format_real(l.imag()));
            }
        out += "]";
        if (!r.error.empty()) out += ",\"error\":" + quoted(r.error);
        out += "}";
    }
    return out + "]}\n";
}

std::string tree_to_csv(const std::vector<TreeRow>& rows) {
    std::string out = "omega,energy,family,m,n,A,B\n";
    for (const auto& r : rows)
        out += fmt::format("{},{},{},{},{},{},{}\n", format_real(r.omega), format_real(r.energy), r.family, r.m, r.n,
                           format_real(r.A), format_real(r.B));
    return out;
}

std::string field_sample_csv(const CoefficientGrid& grid, int tau_nodes, int x_nodes) {
    if (tau_nodes < 1 || x_nodes < 1) throw InvalidArgument("sample resolution must be positive");
    constexpr double pi = std::numbers::pi;
    std::string out = "tau,x,u\n";
    for (int i = 0; i < tau_nodes; ++i) {
        const double tau = tau_nodes > 1 ? 2.0 * pi * i / (tau_nodes - 1) : 0.0;
        for (int k = 0; k < x_nodes; ++k) {
            const double x = x_nodes > 1 ? pi * k / (x_nodes - 1) : 0.0;
            out += fmt::format("{},{},{}\n", format_real(tau), format_real(x),
                               format_real(evaluate_field(grid, tau, x)));
        }
    }
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << content;
    if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

}  // namespace nlosc

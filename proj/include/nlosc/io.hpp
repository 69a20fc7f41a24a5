#pragma once

// Text serialization. Every real number is written in scientific notation with
// 17 significant digits, so values round-trip exactly.

#include "nlosc/continuation.hpp"
#include "nlosc/floquet.hpp"
#include "nlosc/model.hpp"
#include "nlosc/reducible.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace nlosc {

class ParseError : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

std::string format_real(double x);

std::string to_json(const SolutionPoint& p);
SolutionPoint solution_from_json(const std::string& text);

/// Column label of coefficient (m, n): "u<m><n>", with an underscore separator
/// ("u<m>_<n>") when either truncation exceeds 10.
std::string coefficient_label(int m, int n, int M, int N);

std::string to_csv(const BranchCurve& curve);
std::string to_json(const BranchCurve& curve);
BranchCurve curve_from_json(const std::string& text);
/// The CSV header carries neither nu nor the grid shape when labels are
/// ambiguous, so they are supplied by the caller.
BranchCurve curve_from_csv(const std::string& text, EquationKind kind, int M, int N);

std::string scan_to_csv(const std::vector<ScanResult>& scan);
/// {"points": [{"index", "omega", "multipliers": [[re, im], ...]}, ...]}
std::string scan_multipliers_json(const std::vector<ScanResult>& scan);

std::string tree_to_csv(const std::vector<TreeRow>& rows);

/// Samples on [0, 2 pi] x [0, pi] including both ends ("tau,x,u"); a single
/// node in a direction samples at 0.
std::string field_sample_csv(const CoefficientGrid& grid, int tau_nodes, int x_nodes);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace nlosc

#pragma once

// Closed-form and small-system analysis of minimally coupled mode sets.

#include "nlosc/model.hpp"

#include <string>
#include <utility>
#include <vector>

namespace nlosc {

/// Omega^2 outside the closed window of a two-mode family.
class WindowViolation : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

class NotReducible : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

/// Lattice index of cos((2m+1) tau) sin((2n+1) x).
struct Mode {
    int m = 0;
    int n = 0;

    int time_wavenumber() const { return 2 * m + 1; }
    int space_wavenumber() const { return 2 * n + 1; }

    auto operator<=>(const Mode&) const = default;
};

/// Secondary mode (m, n) of a two-mode family {(0,0), (m,n)}; requires m, n >= 1
/// and (2m+1) < (2n+1)^nu.
class ModePair {
public:
    ModePair(int m, int n, EquationKind kind);

    static bool admissible(int m, int n, EquationKind kind);

    int m() const { return m_; }
    int n() const { return n_; }
    EquationKind kind() const { return kind_; }

private:
    int m_, n_;
    EquationKind kind_;
};

struct ReducibleSolution {
    std::vector<Mode> modes;
    std::vector<double> amplitudes;
    double omega = 1.0;

    /// Embed in the smallest grid containing every mode (or a larger one).
    CoefficientGrid to_grid(int M = 0, int N = 0) const;
};

/// Coefficient of c_j c_k c_l in the projection of u^3 onto mode i (ordered
/// triple; the full cubic term is the sum over all ordered triples).
double triple_product(Mode i, Mode j, Mode k, Mode l);

/// Galerkin residual restricted to `modes`: the linear weights plus every cubic
/// monomial generated inside the set.
std::vector<double> restricted_residual(const std::vector<Mode>& modes, const std::vector<double>& amplitudes,
                                        double omega, EquationKind kind);

/// A = (4/3) sqrt(Omega^2 - 1).
double trunk_amplitude(double omega);

/// (Omega^2_low, Omega^2_high) for the two-mode family of `pair`.
std::pair<double, double> branch_window(const ModePair& pair);

/// Amplitudes (A, B) of the two-mode family; window ends are included and
/// return a vanishing amplitude.
ReducibleSolution two_mode_branch(const ModePair& pair, double omega);

/// True iff every equation of the restricted system is a combination of
/// c_i c_j^2 monomials.
bool is_reducible(const std::vector<Mode>& modes, EquationKind kind);

/// All real solutions with nonnegative amplitudes over every support subset.
/// The zero solution comes first; order follows the subset bitmask.
std::vector<ReducibleSolution> solve_reducible(const std::vector<Mode>& modes, double omega, EquationKind kind);

/// Real solutions (A, B) of the beam {(0,0), (1,1)} system
///   A[9A^2 + 12B^2 - 16 Omega^2 + 16] - 3A^2 B = 0
///   B[12A^2 + 9B^2 - 144 Omega^2 + 1296] - A^3 = 0
/// reached by Newton from the minimally coupled solutions. Representatives have
/// A > 0, or A = 0 and B >= 0 (the system is odd under (A,B) -> (-A,-B)).
std::vector<ReducibleSolution> nonreducible_11_beam(double omega);

/// Left-hand sides of the system above.
std::pair<double, double> nonreducible_11_residual(double A, double B, double omega);

struct TreeRow {
    double omega = 0.0;
    double energy = 0.0;
    std::string family;  // "trunk" or "branch"
    int m = 0;
    int n = 0;
    double A = 0.0;
    double B = 0.0;
};

/// Admissible pairs with 1 <= n < N and 1 <= m <= max_m, sorted by (n, m).
/// max_m < 0 selects N - 1.
std::vector<ModePair> admissible_pairs(int N, EquationKind kind, int max_m = -1);

/// Trunk samples on omega_grid (omega >= 1) followed by each admissible two-mode
/// family sampled inside its window, with both window ends appended. Energies are
/// evaluated on the grid spanned by the family's modes.
std::vector<TreeRow> reducible_tree(int N, EquationKind kind, const std::vector<double>& omega_grid, int max_m = -1);

}  // namespace nlosc

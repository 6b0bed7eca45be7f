#pragma once

// Turns an assignment matrix into an operational per-slot schedule: pad to a
// square doubly stochastic matrix with virtual bands/SUs, split it into
// weighted permutation matrices, and sample one permutation per slot.

#include <cogband/matrix.hpp>
#include <cogband/rng.hpp>
#include <cogband/stability_region.hpp>

#include <cstddef>
#include <vector>

namespace cogband {

inline constexpr double kSupportThreshold = 1e-12;
inline constexpr double kResidualStop = 1e-9;

/// Square matrix whose first `real_bands` rows and `real_sus` columns carry
/// the original assignment; the remaining rows are virtual bands and the
/// remaining columns virtual SUs.
struct DoublyStochasticMatrix {
    Matrix values;
    std::size_t real_bands = 0;
    std::size_t real_sus = 0;

    std::size_t size() const noexcept { return values.rows(); }
    bool is_virtual_band(std::size_t row) const noexcept { return row >= real_bands; }
    bool is_virtual_su(std::size_t col) const noexcept { return col >= real_sus; }

    /// Largest deviation of any row or column sum from one.
    double sum_error() const;
    void validate(double tol = kFeasibilityTol) const;
};

struct ScheduleTerm {
    /// band_of[col] = padded row index assigned to padded column `col`.
    std::vector<std::size_t> band_of;
    double weight = 0.0;
};

struct PermutationSchedule {
    std::size_t real_bands = 0;
    std::size_t real_sus = 0;
    std::vector<ScheduleTerm> terms;

    std::size_t size() const noexcept { return terms.empty() ? 0 : terms.front().band_of.size(); }
    double total_weight() const;

    /// Band of each real SU under term `i`; kVirtualBand for a virtual band.
    std::vector<std::size_t> real_assignment(std::size_t i) const;

    /// Pr{SU k on band j} over real bands and SUs.
    Matrix marginals() const;

    /// Throws ConstraintViolationError on non-bijective terms, weights
    /// outside (0, 1], or a total weight off one by more than tol.
    void validate(double tol = kFeasibilityTol) const;
};

/// Throws ConstraintViolationError when omega has a negative entry or a
/// row/column sum above one (beyond 1e-9).
DoublyStochasticMatrix pad_to_doubly_stochastic(const AssignmentMatrix& omega);

/// Greedy Birkhoff extraction: find a perfect matching on the positive
/// support, peel off its smallest entry, repeat until the residual mass
/// drops below kResidualStop. Throws DecompositionError if no perfect
/// matching exists while mass remains.
PermutationSchedule decompose(const DoublyStochasticMatrix& ds);

DoublyStochasticMatrix reconstruct(const PermutationSchedule& schedule);

/// Index of a term drawn with probability equal to its weight.
std::size_t sample_permutation(const PermutationSchedule& schedule, Rng& rng);

/// Perfect matching on entries above `threshold`, as row index per column;
/// empty when none exists. Augmenting-path search.
std::vector<std::size_t> perfect_matching(const Matrix& m, double threshold);

} // namespace cogband

#pragma once

// Stability-region envelope of system S: the reduced linear program over the
// assignment matrix, the equivalent program over per-slot assignment
// probabilities (used as a cross-check), the 2x2 closed form, and sweeps.

#include <cogband/core_model.hpp>
#include <cogband/matrix.hpp>

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace cogband {

inline constexpr double kFeasibilityTol = 1e-9;

/// omega(j, k) = Pr{SU k is assigned band j} in a slot.
struct AssignmentMatrix {
    Matrix omega;

    std::size_t num_bands() const noexcept { return omega.rows(); }
    std::size_t num_sus() const noexcept { return omega.cols(); }

    /// Largest violation of: entries in [0, 1], row and column sums <= 1,
    /// column sums == 1 when M_p >= M_s, row sums == 1 when M_s >= M_p.
    double constraint_violation() const;

    /// Throws ConstraintViolationError when constraint_violation() > tol.
    void validate(double tol = kFeasibilityTol) const;

    /// Mean service rate of each SU: sum_j omega(j, k) * P(j, k).
    std::vector<double> service_rates(const SuccessMatrix& p) const;
};

/// Maximize lambda of `target_su` with every other SU's rate held at
/// `rates[l]`. The entry `rates[target_su]` is ignored.
struct RegionQuery {
    std::size_t target_su = 0;
    std::vector<double> rates;
};

struct EnvelopePoint {
    std::vector<double> rates; ///< full vector with the target at its maximum
    AssignmentMatrix omega_star;
    bool feasible = false;

    double target_rate(std::size_t target_su) const { return rates.at(target_su); }
};

/// Exact optimum of the reduced program over Omega.
EnvelopePoint max_rate_lp(const SuccessMatrix& p, const RegionQuery& query);

inline constexpr std::uint64_t kEnumerationLimit = 1'000'000;

/// One-SU-per-band assignments. Entry k is the band of SU k, or
/// `kVirtualBand` when SU k sits on a virtual band (only when M_s > M_p).
inline constexpr std::size_t kVirtualBand = static_cast<std::size_t>(-1);
std::vector<std::vector<std::size_t>> enumerate_assignments(std::size_t num_bands, std::size_t num_sus,
                                                            std::uint64_t limit = kEnumerationLimit);

/// Same optimum as max_rate_lp, solved over one weight per assignment.
/// Throws EnumerationLimitError when the assignment count exceeds `limit`.
EnvelopePoint max_rate_lp_over_q(const SuccessMatrix& p, const RegionQuery& query,
                                 std::uint64_t limit = kEnumerationLimit);

struct TwoByTwoSolution {
    double epsilon = 0.0;       ///< omega_12 = omega_21
    double lambda_s2_max = 0.0;
    bool feasible = false;
};

/// Closed-form optimum for two bands and two SUs with SU 1's rate fixed and
/// SU 2's maximized. When P(0,1) == P(1,1) any feasible epsilon is optimal;
/// the smallest one is returned.
TwoByTwoSolution closed_form_2x2(const SuccessMatrix& p, double lambda_s1);

/// Sweep SU `sweep_su` over `grid_size` equally spaced rates from 0 to its
/// largest feasible value (target at rate 0, others at `rates`), maximizing
/// `target_su` at each point.
std::vector<EnvelopePoint> envelope_sweep(const SuccessMatrix& p, std::size_t target_su, std::size_t sweep_su,
                                          std::span<const double> rates, std::size_t grid_size);

/// As envelope_sweep, on caller-supplied sweep values.
std::vector<EnvelopePoint> envelope_on_grid(const SuccessMatrix& p, std::size_t target_su, std::size_t sweep_su,
                                            std::span<const double> rates, std::span<const double> sweep_values);

} // namespace cogband

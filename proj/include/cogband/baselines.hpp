#pragma once

// Comparison systems: random band selection with collisions (system S-hat)
// and fixed one-to-one assignment.

#include <cogband/core_model.hpp>
#include <cogband/matrix.hpp>
#include <cogband/stability_region.hpp>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace cogband {

/// gamma(i, k) = Pr{SU k picks band i}. Columns may sum below one; the
/// leftover is the probability that the SU stays idle.
struct SelectionPolicy {
    Matrix gamma;

    void validate(double tol = kFeasibilityTol) const;
};

/// band_of_su[k] = band held by SU k in every slot.
struct FixedAssignment {
    std::vector<std::size_t> band_of_su;

    /// Throws InvalidArgumentError if not injective or a band is out of range.
    void validate(std::size_t num_bands) const;
};

/// Service rates with every competing queue nonempty:
/// mu_k = sum_j P(j,k) gamma(j,k) prod_{v != k} (1 - gamma(j,v)).
std::vector<double> shat_service_rates_saturated(const SuccessMatrix& p, const SelectionPolicy& policy);

/// Service rates when SU v's queue is empty with probability empty_probs[v],
/// independently across SUs. A competitor only collides when it picks the
/// same band and has a packet.
std::vector<double> shat_service_rate_conditional(const SuccessMatrix& p, const SelectionPolicy& policy,
                                                  std::span<const double> empty_probs);

struct ShatOptions {
    std::size_t restarts = 64;     ///< random starts, in addition to warm starts
    std::size_t iterations = 4000; ///< per start
    std::uint64_t seed = 1;
    std::size_t random_directions = 8; ///< joint moves tried when no single-column move improves
};

/// Best-effort result; lambda_max is a lower bound on the S-hat envelope.
struct ShatOptimum {
    SelectionPolicy gamma_star;
    std::vector<double> rates; ///< saturated service rates at gamma_star
    double lambda_max = 0.0;
    bool feasible = false;
};

/// Multi-start projected local search maximizing the target's saturated rate
/// subject to rates[l] <= mu_l for every other SU. Warm starts: the best
/// fixed assignment (when bands >= SUs) and the columns of the system-S
/// optimum.
ShatOptimum shat_optimize(const SuccessMatrix& p, const RegionQuery& query, const ShatOptions& options = {});

std::vector<double> fixed_assignment_rates(const SuccessMatrix& p, const FixedAssignment& assignment);

struct FixedOptimum {
    FixedAssignment assignment;
    double lambda_max = 0.0;
    bool feasible = false;
};

/// Exhaustive search over one-to-one assignments. Requires bands >= SUs.
FixedOptimum best_fixed_envelope(const SuccessMatrix& p, const RegionQuery& query,
                                 std::uint64_t limit = kEnumerationLimit);

} // namespace cogband

#pragma once

#include <cogband/birkhoff.hpp>
#include <cogband/core_model.hpp>
#include <cogband/matrix.hpp>
#include <cogband/rng.hpp>

#include <algorithm>
#include <numeric>
#include <vector>

namespace cogband::testing {

// Two bands, two SUs: pi = (0.25, 0.875), Pbar rows per band.
inline SuccessMatrix two_band_success()
{
    const std::vector<double> pi{0.25, 0.875};
    const Matrix pbar{{0.7, 0.85}, {0.8, 0.9}};
    return build_success_matrix(pi, pbar);
}

inline std::vector<double> four_band_availability() { return {0.45, 0.2, 0.6, 0.4}; }

inline Matrix four_band_pout_bar()
{
    return Matrix{{0.6, 0.7, 0.6, 0.7}, {0.8, 0.6, 0.8, 0.5}, {0.7, 0.8, 0.7, 0.6}, {0.85, 0.9, 0.5, 0.95}};
}

inline SuccessMatrix four_band_success()
{
    const auto pi = four_band_availability();
    return build_success_matrix(pi, four_band_pout_bar());
}

/// Abstract-mode network with the given availabilities, Pbar and primary
/// service rates; SU arrival rates are set separately.
inline NetworkModel abstract_model(const std::vector<double>& pi, const Matrix& pbar, const std::vector<double>& mu_p,
                                   const std::vector<double>& su_arrival)
{
    NetworkModel m;
    m.availability = pi;
    m.primary_success = mu_p;
    for (std::size_t j = 0; j < pi.size(); ++j)
        m.primary_arrival.push_back(mu_p[j] * (1.0 - pi[j]));
    m.secondary_success = pbar;
    m.su_arrival = su_arrival;
    return m;
}

inline std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng)
{
    std::vector<std::size_t> p(n);
    std::iota(p.begin(), p.end(), 0);
    for (std::size_t i = n; i > 1; --i) {
        const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
        std::swap(p[i - 1], p[std::min(j, i - 1)]);
    }
    return p;
}

/// Convex combination of `terms` random permutation matrices.
inline Matrix random_doubly_stochastic(std::size_t n, std::size_t terms, Rng& rng)
{
    std::vector<double> w(terms);
    for (double& x : w)
        x = 0.05 + uniform01(rng);
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    Matrix m(n, n);
    for (std::size_t t = 0; t < terms; ++t) {
        const auto p = random_permutation(n, rng);
        for (std::size_t c = 0; c < n; ++c)
            m(p[c], c) += w[t] / total;
    }
    return m;
}

inline SuccessMatrix random_success(std::size_t mp, std::size_t ms, Rng& rng)
{
    Matrix p(mp, ms);
    for (double& v : p.data())
        v = uniform01(rng);
    return SuccessMatrix{p};
}

} // namespace cogband::testing

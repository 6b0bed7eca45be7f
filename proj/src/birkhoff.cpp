#include <cogband/birkhoff.hpp>

#include <cogband/errors.hpp>

#include <algorithm>
#include <cmath>
#include <string>

namespace cogband {

namespace {

constexpr std::size_t kUnmatched = static_cast<std::size_t>(-1);

// Kuhn's augmenting path from column `col`.
bool augment(const Matrix& m, double threshold, std::size_t col, std::vector<bool>& seen,
             std::vector<std::size_t>& col_of_row)
{
    const std::size_t n = m.rows();
    for (std::size_t r = 0; r < n; ++r) {
        if (m(r, col) <= threshold || seen[r])
            continue;
        seen[r] = true;
        if (col_of_row[r] == kUnmatched || augment(m, threshold, col_of_row[r], seen, col_of_row)) {
            col_of_row[r] = col;
            return true;
        }
    }
    return false;
}

// Pours `amount` into consecutive cells of a line with the given remaining
// capacities; the last cell absorbs any rounding overflow.
template <typename Put>
void pour(double amount, std::vector<double>& capacity, std::size_t& cursor, Put put)
{
    while (amount > 0.0 && cursor < capacity.size()) {
        const bool last = cursor + 1 == capacity.size();
        const double take = last ? amount : std::min(amount, capacity[cursor]);
        if (take > 0.0)
            put(cursor, take);
        capacity[cursor] -= take;
        amount -= take;
        if (!last && capacity[cursor] <= kSupportThreshold)
            ++cursor;
        else if (last)
            break;
    }
}

} // namespace

double DoublyStochasticMatrix::sum_error() const
{
    double worst = 0.0;
    for (std::size_t i = 0; i < values.rows(); ++i)
        worst = std::max({worst, std::abs(values.row_sum(i) - 1.0), std::abs(values.col_sum(i) - 1.0)});
    return worst;
}

void DoublyStochasticMatrix::validate(double tol) const
{
    if (values.rows() != values.cols())
        throw DimensionError("doubly stochastic matrix must be square");
    if (real_bands > values.rows() || real_sus > values.cols())
        throw DimensionError("real block larger than padded matrix");
    for (double v : values.data())
        if (v < -kSupportThreshold)
            throw ConstraintViolationError("doubly stochastic matrix has a negative entry");
    const double err = sum_error();
    if (err > tol)
        throw ConstraintViolationError("row/column sums deviate from one by " + std::to_string(err));
}

double PermutationSchedule::total_weight() const
{
    double s = 0.0;
    for (const auto& t : terms)
        s += t.weight;
    return s;
}

std::vector<std::size_t> PermutationSchedule::real_assignment(std::size_t i) const
{
    const auto& term = terms.at(i);
    std::vector<std::size_t> out(real_sus);
    for (std::size_t k = 0; k < real_sus; ++k)
        out[k] = term.band_of[k] < real_bands ? term.band_of[k] : kVirtualBand;
    return out;
}

Matrix PermutationSchedule::marginals() const
{
    Matrix m(real_bands, real_sus);
    for (const auto& t : terms)
        for (std::size_t k = 0; k < real_sus; ++k)
            if (t.band_of[k] < real_bands)
                m(t.band_of[k], k) += t.weight;
    return m;
}

void PermutationSchedule::validate(double tol) const
{
    const std::size_t n = size();
    if (n < std::max(real_bands, real_sus))
        throw DimensionError("schedule permutations smaller than the real network");
    for (const auto& t : terms) {
        if (t.band_of.size() != n)
            throw ConstraintViolationError("schedule terms differ in size");
        std::vector<bool> hit(n, false);
        for (std::size_t row : t.band_of) {
            if (row >= n || hit[row])
                throw ConstraintViolationError("schedule term is not a bijection");
            hit[row] = true;
        }
        if (!(t.weight > 0.0) || t.weight > 1.0 + tol)
            throw ConstraintViolationError("schedule weight outside (0, 1]");
    }
    if (std::abs(total_weight() - 1.0) > tol)
        throw ConstraintViolationError("schedule weights do not sum to one");
}

DoublyStochasticMatrix pad_to_doubly_stochastic(const AssignmentMatrix& assignment)
{
    const Matrix& omega = assignment.omega;
    const std::size_t mp = omega.rows();
    const std::size_t ms = omega.cols();
    if (mp == 0 || ms == 0)
        throw DimensionError("empty assignment matrix");

    for (double v : omega.data())
        if (v < -kFeasibilityTol || v > 1.0 + kFeasibilityTol)
            throw ConstraintViolationError("assignment entry outside [0, 1]");

    std::vector<double> row_slack(mp);
    std::vector<double> col_slack(ms);
    double total_row_slack = 0.0;
    for (std::size_t j = 0; j < mp; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < ms; ++k)
            s += std::clamp(omega(j, k), 0.0, 1.0);
        if (s > 1.0 + kFeasibilityTol)
            throw ConstraintViolationError("band " + std::to_string(j) + " is assigned more than one SU on average");
        row_slack[j] = std::max(1.0 - s, 0.0);
        total_row_slack += row_slack[j];
    }
    for (std::size_t k = 0; k < ms; ++k) {
        double s = 0.0;
        for (std::size_t j = 0; j < mp; ++j)
            s += std::clamp(omega(j, k), 0.0, 1.0);
        if (s > 1.0 + kFeasibilityTol)
            throw ConstraintViolationError("SU " + std::to_string(k) + " is assigned more than one band on average");
        col_slack[k] = std::max(1.0 - s, 0.0);
    }

    // Virtual SU columns must absorb all row slack; virtual band rows then
    // make the matrix square. Slack in both dimensions meets in the
    // virtual-virtual block.
    std::size_t virtual_sus = static_cast<std::size_t>(std::max(0.0, std::ceil(total_row_slack - kFeasibilityTol)));
    if (mp > ms)
        virtual_sus = std::max(virtual_sus, mp - ms);
    const std::size_t n = ms + virtual_sus;
    const std::size_t virtual_bands = n - mp;

    DoublyStochasticMatrix out;
    out.values = Matrix(n, n);
    out.real_bands = mp;
    out.real_sus = ms;
    for (std::size_t j = 0; j < mp; ++j)
        for (std::size_t k = 0; k < ms; ++k)
            out.values(j, k) = std::clamp(omega(j, k), 0.0, 1.0);

    std::vector<double> vcol_room(virtual_sus, 1.0);
    std::vector<double> vrow_room(virtual_bands, 1.0);
    std::size_t cursor = 0;
    for (std::size_t j = 0; j < mp; ++j)
        pour(row_slack[j], vcol_room, cursor, [&](std::size_t c, double v) { out.values(j, ms + c) += v; });
    cursor = 0;
    for (std::size_t k = 0; k < ms; ++k)
        pour(col_slack[k], vrow_room, cursor, [&](std::size_t r, double v) { out.values(mp + r, k) += v; });

    // Northwest-corner fill of the virtual-virtual block.
    std::size_t r = 0;
    std::size_t c = 0;
    while (r < virtual_bands && c < virtual_sus) {
        const double take = std::min(vrow_room[r], vcol_room[c]);
        if (take > 0.0)
            out.values(mp + r, ms + c) += take;
        vrow_room[r] -= take;
        vcol_room[c] -= take;
        if (vrow_room[r] <= kSupportThreshold)
            ++r;
        else
            ++c;
    }
    return out;
}

std::vector<std::size_t> perfect_matching(const Matrix& m, double threshold)
{
    const std::size_t n = m.rows();
    std::vector<std::size_t> col_of_row(n, kUnmatched);
    for (std::size_t c = 0; c < n; ++c) {
        std::vector<bool> seen(n, false);
        if (!augment(m, threshold, c, seen, col_of_row))
            return {};
    }
    std::vector<std::size_t> row_of_col(n);
    for (std::size_t r = 0; r < n; ++r)
        row_of_col[col_of_row[r]] = r;
    return row_of_col;
}

PermutationSchedule decompose(const DoublyStochasticMatrix& ds)
{
    ds.validate();
    const std::size_t n = ds.size();
    Matrix residual = ds.values;
    for (double& v : residual.data())
        v = std::max(v, 0.0);

    PermutationSchedule out;
    out.real_bands = ds.real_bands;
    out.real_sus = ds.real_sus;

    const auto remaining_mass = [&] {
        double worst = 0.0;
        for (std::size_t r = 0; r < n; ++r)
            worst = std::max(worst, residual.row_sum(r));
        return worst;
    };

    // Each pass zeroes at least one support entry, so n*n passes suffice.
    for (std::size_t pass = 0; pass <= n * n; ++pass) {
        const double mass = remaining_mass();
        if (mass < kResidualStop)
            return out;
        const auto band_of = perfect_matching(residual, kSupportThreshold);
        if (band_of.empty())
            throw DecompositionError("no perfect matching on the residual support", mass);

        double weight = 1.0;
        for (std::size_t c = 0; c < n; ++c)
            weight = std::min(weight, residual(band_of[c], c));
        for (std::size_t c = 0; c < n; ++c) {
            double& cell = residual(band_of[c], c);
            cell -= weight;
            if (cell <= kSupportThreshold)
                cell = 0.0;
        }
        out.terms.push_back({band_of, weight});
    }
    throw DecompositionError("decomposition did not converge", remaining_mass());
}

DoublyStochasticMatrix reconstruct(const PermutationSchedule& schedule)
{
    const std::size_t n = schedule.size();
    DoublyStochasticMatrix out;
    out.values = Matrix(n, n);
    out.real_bands = schedule.real_bands;
    out.real_sus = schedule.real_sus;
    for (const auto& t : schedule.terms)
        for (std::size_t c = 0; c < n; ++c)
            out.values(t.band_of[c], c) += t.weight;
    return out;
}

std::size_t sample_permutation(const PermutationSchedule& schedule, Rng& rng)
{
    if (schedule.terms.empty())
        throw InvalidArgumentError("cannot sample from an empty schedule");
    const double u = uniform01(rng) * schedule.total_weight();
    double acc = 0.0;
    for (std::size_t i = 0; i < schedule.terms.size(); ++i) {
        acc += schedule.terms[i].weight;
        if (u < acc)
            return i;
    }
    return schedule.terms.size() - 1;
}

} // namespace cogband

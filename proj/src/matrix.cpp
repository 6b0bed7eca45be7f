#include <cogband/matrix.hpp>

#include <cogband/errors.hpp>

#include <algorithm>
#include <cmath>

namespace cogband {

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> init)
{
    rows_ = init.size();
    cols_ = rows_ == 0 ? 0 : init.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : init) {
        if (r.size() != cols_)
            throw DimensionError("ragged matrix initializer");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::identity(std::size_t n)
{
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        m(i, i) = 1.0;
    return m;
}

double Matrix::row_sum(std::size_t r) const
{
    double s = 0.0;
    for (double v : row(r))
        s += v;
    return s;
}

double Matrix::col_sum(std::size_t c) const
{
    double s = 0.0;
    for (std::size_t r = 0; r < rows_; ++r)
        s += (*this)(r, c);
    return s;
}

double max_abs_diff(const Matrix& a, const Matrix& b)
{
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw DimensionError("max_abs_diff: dimension mismatch");
    double worst = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i)
        worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
    return worst;
}

} // namespace cogband

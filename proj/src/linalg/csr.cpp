#include "tthom/linalg/csr.hpp"

#include <limits>
#include <stdexcept>

namespace tthom::linalg {

CsrMatrix::CsrMatrix(const SparseMatrix& m)
    : rows_(static_cast<std::size_t>(m.rows())), cols_(static_cast<std::size_t>(m.cols()))
{
    if (m.cols() > std::numeric_limits<std::int32_t>::max())
        throw std::length_error("CsrMatrix: column count exceeds 32-bit indices");
    SparseMatrix c = m;
    c.makeCompressed();
    row_ptr_.assign(c.outerIndexPtr(), c.outerIndexPtr() + c.rows() + 1);
    col_.reserve(static_cast<std::size_t>(c.nonZeros()));
    for (Eigen::Index k = 0; k < c.nonZeros(); ++k)
        col_.push_back(static_cast<std::int32_t>(c.innerIndexPtr()[k]));
    val_.assign(c.valuePtr(), c.valuePtr() + c.nonZeros());
}

void CsrMatrix::multiply(std::span<const double> x, std::span<double> y) const
{
    if (x.size() != cols_ || y.size() != rows_)
        throw std::invalid_argument("CsrMatrix::multiply: size mismatch");
    simd::csr_spmv(view(), x, y);
}

std::vector<double> CsrMatrix::diagonal() const
{
    std::vector<double> d(rows_, 0.0);
    for (std::size_t r = 0; r < rows_; ++r)
        for (auto k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
            if (static_cast<std::size_t>(col_[k]) == r)
                d[r] += val_[k];
    return d;
}

} // namespace tthom::linalg

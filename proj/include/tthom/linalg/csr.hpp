#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/SparseCore>

#include "tthom/simd/kernels.hpp"

namespace tthom::linalg {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, std::int64_t>;

// Compressed-row matrix driving the SIMD spmv kernel.
class CsrMatrix {
public:
    CsrMatrix() = default;
    explicit CsrMatrix(const SparseMatrix& m);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t nnz() const noexcept { return val_.size(); }

    std::span<const std::int64_t> row_ptr() const noexcept { return row_ptr_; }
    std::span<const std::int32_t> col() const noexcept { return col_; }
    std::span<const double> val() const noexcept { return val_; }

    simd::CsrView view() const noexcept { return {row_ptr_, col_, val_}; }
    void multiply(std::span<const double> x, std::span<double> y) const;
    std::vector<double> diagonal() const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::int64_t> row_ptr_;
    std::vector<std::int32_t> col_;
    std::vector<double> val_;
};

} // namespace tthom::linalg

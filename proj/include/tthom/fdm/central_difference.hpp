#pragma once

#include "tthom/fdm/lattice.hpp"
#include "tthom/linalg/csr.hpp"
#include "tthom/tt/tensor_train.hpp"

namespace tthom::fdm {

// Periodic central difference (u[i+1] - u[i-1]) / 2h along `axis`, as the
// N^d x N^d sparse matrix I^(d-axis-1) (x) D (x) I^(axis).
linalg::SparseMatrix central_diff_dense(const LatticeSpec& spec, int axis);

// Same operator as a rank-5 quantized MPO: identity cores off-axis, the
// 5x5 block difference cores on the axis bits, closed by the boundary row
// (carrying 1/2h) and column that realize the periodic wrap.
tt::TTOperator central_diff_qtt(const LatticeSpec& spec, int axis);

tt::TTOperator identity_qtt(const LatticeSpec& spec);

} // namespace tthom::fdm

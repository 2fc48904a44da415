#pragma once

#include <vector>

#include "tthom/fdm/lattice.hpp"
#include "tthom/tt/tensor_train.hpp"

// The periodic central difference annihilates constants and the per-axis
// checkerboards, so each cell operator has a 2^d-dimensional nullspace per
// displacement component. These helpers handle it in tensor-train form.
namespace tthom::homog {

// Orthonormal nullspace modes as rank-1 trains. With components > 1 a
// trailing component core is appended (dense layout g * components + c).
std::vector<tt::TTVector> nullspace_modes(const fdm::LatticeSpec& spec, int components = 1);

// weight * sum_v v v^T, rank = number of modes.
tt::TTOperator nullspace_penalty(const std::vector<tt::TTVector>& modes, double weight);

// x minus its projection on the modes, rounded with `policy`.
tt::TTVector remove_nullspace(const tt::TTVector& x, const std::vector<tt::TTVector>& modes,
                              const tt::TruncationPolicy& policy);

} // namespace tthom::homog

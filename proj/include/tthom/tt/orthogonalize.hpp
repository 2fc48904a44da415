#pragma once

#include <cstddef>
#include <vector>

#include "tthom/tt/tensor_train.hpp"

// Building blocks shared by rounding and the alternating solver.
namespace tthom::tt {

struct Split {
    Matrix left;  // rows x rank
    Matrix right; // rank x cols
    std::vector<double> singular_values; // all of them, descending
    std::size_t rank = 0;
    double discarded_sq = 0.0;
};

// Rank chosen for singular values `s` (descending): the smallest rank whose
// discarded tail has squared norm <= abs_budget^2, limited by max_rank and
// by the singular floor, never below 1.
std::size_t choose_rank(const std::vector<double>& s, double abs_budget, std::size_t max_rank);

// Truncated SVD of m. With absorb_right the singular values are folded into
// `right` (left is orthonormal); otherwise into `left`.
Split svd_split(const Matrix& m, double abs_budget, std::size_t max_rank, bool absorb_right = true);

// QR of core k's left unfolding; R is pushed into core k+1.
void left_orthogonalize_core(std::vector<Core>& cores, std::size_t k);
// LQ of core k's right unfolding; L is pushed into core k-1.
void right_orthogonalize_core(std::vector<Core>& cores, std::size_t k);

// Makes cores (k, m-1] right-orthogonal, leaving the center at `k`.
void right_orthogonalize(std::vector<Core>& cores, std::size_t k = 0);
// Makes cores [0, k) left-orthogonal, leaving the center at `k`.
void left_orthogonalize(std::vector<Core>& cores, std::size_t k);

// Contracts two neighbouring cores into (left*p1) x (p2*right).
Matrix merge_pair(const Core& a, const Core& b);

// Budget-distributed rounding sweep on a raw chain. Returns the absolute
// discarded Frobenius norm.
double round_chain(std::vector<Core>& cores, const TruncationPolicy& policy);

} // namespace tthom::tt

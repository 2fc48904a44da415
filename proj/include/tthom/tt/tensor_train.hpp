#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "tthom/error.hpp"

namespace tthom::tt {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<Matrix>;
using ConstMatrixMap = Eigen::Map<const Matrix>;

inline constexpr std::size_t unbounded_rank = std::numeric_limits<std::size_t>::max();

// Relative Frobenius error budget and rank cap applied when rounding a train.
struct TruncationPolicy {
    double rel_eps = 0.0;
    std::size_t max_rank = unbounded_rank;

    static TruncationPolicy exact() { return {}; }
    static TruncationPolicy eps(double e) { return {e, unbounded_rank}; }
    static TruncationPolicy capped(double e, std::size_t r) { return {e, r}; }

    bool bounded() const noexcept { return max_rank != unbounded_rank; }
    void validate() const;
};

// Singular values below this fraction of the largest one at a bond are
// always discarded, whatever the policy says.
inline constexpr double kSingularFloor = 1e-14;

// Three-index core (left rank, physical index, right rank) stored row-major,
// so both the left unfolding (left*phys x right) and the right unfolding
// (left x phys*right) are plain views of the same buffer.
class Core {
public:
    Core() = default;
    Core(std::size_t left, std::size_t phys, std::size_t right);
    Core(std::size_t left, std::size_t phys, std::size_t right, std::vector<double> values);

    std::size_t left() const noexcept { return left_; }
    std::size_t phys() const noexcept { return phys_; }
    std::size_t right() const noexcept { return right_; }
    std::size_t size() const noexcept { return data_.size(); }

    double& operator()(std::size_t a, std::size_t p, std::size_t b) noexcept
    {
        return data_[(a * phys_ + p) * right_ + b];
    }
    double operator()(std::size_t a, std::size_t p, std::size_t b) const noexcept
    {
        return data_[(a * phys_ + p) * right_ + b];
    }

    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }

    MatrixMap left_unfolding() { return {data_.data(), Eigen::Index(left_ * phys_), Eigen::Index(right_)}; }
    ConstMatrixMap left_unfolding() const
    {
        return {data_.data(), Eigen::Index(left_ * phys_), Eigen::Index(right_)};
    }
    MatrixMap right_unfolding() { return {data_.data(), Eigen::Index(left_), Eigen::Index(phys_ * right_)}; }
    ConstMatrixMap right_unfolding() const
    {
        return {data_.data(), Eigen::Index(left_), Eigen::Index(phys_ * right_)};
    }

    static Core from_left_unfolding(const Matrix& m, std::size_t phys);
    static Core from_right_unfolding(const Matrix& m, std::size_t phys);

private:
    std::size_t left_ = 0;
    std::size_t phys_ = 0;
    std::size_t right_ = 0;
    std::vector<double> data_;
};

// Chain of cores. Position 0 is the leftmost core, which carries the most
// significant index digit; for an m-core train, position k holds the core
// the lattice notation labels m-1-k.
class TTVector {
public:
    TTVector() = default;
    explicit TTVector(std::vector<Core> cores, std::optional<std::size_t> ortho_center = std::nullopt);

    std::size_t num_cores() const noexcept { return cores_.size(); }
    const Core& core(std::size_t k) const { return cores_.at(k); }
    const std::vector<Core>& cores() const noexcept { return cores_; }
    std::vector<Core> take_cores() && { return std::move(cores_); }

    std::vector<std::size_t> phys_dims() const;
    // Bond ranks between consecutive cores (num_cores() - 1 entries).
    std::vector<std::size_t> ranks() const;
    std::size_t max_rank() const;
    // Number of entries of the represented tensor (saturates at SIZE_MAX).
    std::size_t dense_size() const;
    // Index of the only non-orthogonal core, when known.
    std::optional<std::size_t> ortho_center() const noexcept { return center_; }

private:
    std::vector<Core> cores_;
    std::optional<std::size_t> center_;
};

// Matrix product operator. Core k is stored as a 3-index core with a fused
// physical index p = out * in_dim + in.
class TTOperator {
public:
    TTOperator() = default;
    TTOperator(std::vector<Core> cores, std::vector<std::size_t> out_dims, std::vector<std::size_t> in_dims);

    std::size_t num_cores() const noexcept { return cores_.size(); }
    const Core& core(std::size_t k) const { return cores_.at(k); }
    const std::vector<Core>& cores() const noexcept { return cores_; }
    std::vector<Core> take_cores() && { return std::move(cores_); }

    const std::vector<std::size_t>& out_dims() const noexcept { return out_; }
    const std::vector<std::size_t>& in_dims() const noexcept { return in_; }
    std::size_t out(std::size_t k) const { return out_.at(k); }
    std::size_t in(std::size_t k) const { return in_.at(k); }

    double operator()(std::size_t k, std::size_t a, std::size_t o, std::size_t i, std::size_t b) const
    {
        return cores_[k](a, o * in_[k] + i, b);
    }

    std::vector<std::size_t> ranks() const;
    std::size_t max_rank() const;
    std::size_t rows() const;
    std::size_t cols() const;

private:
    std::vector<Core> cores_;
    std::vector<std::size_t> out_;
    std::vector<std::size_t> in_;
};

template <class Train>
struct Rounded {
    Train train;
    double error = 0.0; // absolute Frobenius norm of the discarded part
};

// --- construction ---------------------------------------------------------

// Largest dense tensor (in elements) that to_dense will materialize.
// TTHOM_DENSE_CAP overrides the default of 2^24.
std::size_t dense_cap();

TTVector constant_vector(std::span<const std::size_t> dims, double value);
TTVector ones(std::span<const std::size_t> dims);
TTOperator identity_operator(std::span<const std::size_t> dims);

// Successive-SVD encoding of a dense tensor given in C order (first mode
// most significant). Reports the Frobenius norm of the discarded part.
Rounded<TTVector> vector_from_dense(std::span<const double> values, std::span<const std::size_t> dims,
                                    const TruncationPolicy& policy = TruncationPolicy::exact());

// Encodes matrix m whose row index is formed from out_dims and column index
// from in_dims, each in C order.
Rounded<TTOperator> operator_from_dense(const Matrix& m, std::span<const std::size_t> out_dims,
                                        std::span<const std::size_t> in_dims,
                                        const TruncationPolicy& policy = TruncationPolicy::exact());

std::vector<double> to_dense(const TTVector& x, std::size_t cap = dense_cap());
Matrix to_dense(const TTOperator& a, std::size_t cap = dense_cap());

// --- arithmetic -------------------------------------------------------------

// a*A + b*B by block-diagonal cores; bond ranks add, no rounding.
TTVector add(double a, const TTVector& x, double b, const TTVector& y);
TTOperator add(double a, const TTOperator& x, double b, const TTOperator& y);

TTVector scale(double c, const TTVector& x);
TTOperator scale(double c, const TTOperator& x);

// Right-orthogonalization followed by a left-to-right SVD sweep. The
// relative budget is split evenly over the bonds.
Rounded<TTVector> truncate(const TTVector& x, const TruncationPolicy& policy);
Rounded<TTOperator> truncate(const TTOperator& x, const TruncationPolicy& policy);

TTOperator diag(const TTVector& v);
TTOperator transpose(const TTOperator& a);

TTVector apply_exact(const TTOperator& a, const TTVector& x);
TTVector apply(const TTOperator& a, const TTVector& x, const TruncationPolicy& policy);
TTOperator compose_exact(const TTOperator& a, const TTOperator& b);
TTOperator compose(const TTOperator& a, const TTOperator& b, const TruncationPolicy& policy);

// Outer (Kronecker) product: the cores of `lhs` followed by the cores of `rhs`.
TTVector kron(const TTVector& lhs, const TTVector& rhs);
TTOperator kron(const TTOperator& lhs, const TTOperator& rhs);

// Fixes the index of the rightmost core to `index` and absorbs it into the
// preceding core, dropping one mode.
TTVector fix_last_index(const TTVector& x, std::size_t index);

double inner(const TTVector& x, const TTVector& y);
double norm(const TTVector& x);
// Frobenius norm of the operator.
double norm(const TTOperator& a);

// Applies the operator to a dense vector without forming the dense matrix.
std::vector<double> apply_to_dense(const TTOperator& a, std::span<const double> x);

} // namespace tthom::tt

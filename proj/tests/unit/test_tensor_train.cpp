#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "support/oracles.hpp"
#include "tthom/fdm/central_difference.hpp"
#include "tthom/tt/tensor_train.hpp"

using namespace tthom;
using tt::TruncationPolicy;

namespace {

std::vector<std::size_t> twos(std::size_t m) { return std::vector<std::size_t>(m, 2); }

} // namespace

TEST(FromDense, AllOnesIsRankOne)
{
    const std::vector<double> x(8, 1.0);
    const auto dims = twos(3);
    const auto enc = tt::vector_from_dense(x, dims);
    for (std::size_t r : enc.train.ranks())
        EXPECT_EQ(r, 1u);
    EXPECT_LE(oracle::max_abs_diff(tt::to_dense(enc.train), x), 1e-14);
}

TEST(FromDense, RandomRoundTripIsExact)
{
    std::mt19937_64 rng(7);
    const auto x = oracle::random_vector(64, rng);
    const auto dims = twos(6);
    const auto enc = tt::vector_from_dense(x, dims);
    EXPECT_LE(oracle::rel_diff(tt::to_dense(enc.train), x), 1e-12);
    EXPECT_LE(enc.error, 1e-12);
}

TEST(FromDense, RoundTripPropertyMixedDims)
{
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<std::size_t> dim_dist(1, 4);
    for (int trial = 0; trial < 40; ++trial) {
        std::vector<std::size_t> dims;
        std::size_t total = 1;
        while (dims.size() < 8) {
            const std::size_t d = dim_dist(rng);
            if (total * d > 4096)
                break;
            dims.push_back(d);
            total *= d;
        }
        const auto x = oracle::random_vector(total, rng);
        const auto enc = tt::vector_from_dense(x, dims);
        EXPECT_LE(oracle::max_abs_diff(tt::to_dense(enc.train), x), 1e-12) << "trial " << trial;
    }
}

TEST(FromDense, KroneckerDifferenceOperatorEncodesExactly)
{
    const fdm::LatticeSpec spec(2, 3);
    const oracle::Dense d = oracle::central_diff_kron(2, 3, 0);
    const tt::Matrix m = d;
    const auto dims = spec.qtt_dims();
    const auto enc = tt::operator_from_dense(m, dims, dims);
    const tt::Matrix back = tt::to_dense(enc.train);
    EXPECT_LE((back - m).cwiseAbs().maxCoeff(), 1e-12 * m.cwiseAbs().maxCoeff());
}

TEST(FromDense, LayoutMismatchIsStructuralError)
{
    const std::vector<double> x(10, 1.0);
    const auto dims = twos(3);
    EXPECT_THROW(tt::vector_from_dense(x, dims), StructuralError);
    const std::vector<std::size_t> zero{2, 0, 2};
    EXPECT_THROW(tt::vector_from_dense(std::vector<double>{}, zero), StructuralError);
}

TEST(ToDense, ConstantTrain)
{
    const auto dims = twos(5);
    const auto c = tt::constant_vector(dims, 3.25);
    for (double v : tt::to_dense(c))
        EXPECT_EQ(v, 3.25);
}

TEST(ToDense, RefusesAboveCap)
{
    const auto dims = twos(12);
    const auto c = tt::ones(dims);
    EXPECT_THROW(tt::to_dense(c, 1000), SizeCapError);
}

TEST(Add, IdentityWhenSecondWeightIsZero)
{
    std::mt19937_64 rng(3);
    const auto a = oracle::random_train(twos(5), {2, 3, 3, 2}, rng);
    const auto b = oracle::random_train(twos(5), {2, 2, 2, 2}, rng);
    const auto c = tt::add(1.0, a, 0.0, b);
    EXPECT_LE(oracle::max_abs_diff(tt::to_dense(c), tt::to_dense(a)), 1e-14);
}

TEST(Add, ConstantsSum)
{
    const auto dims = twos(4);
    const auto c = tt::add(1.0, tt::constant_vector(dims, 2.0), 1.0, tt::constant_vector(dims, 3.0));
    for (double v : tt::to_dense(c))
        EXPECT_DOUBLE_EQ(v, 5.0);
}

TEST(Add, DenseEquivalenceAndRankLaw)
{
    std::mt19937_64 rng(5);
    const auto dims = twos(4);
    const auto xa = oracle::random_vector(16, rng);
    const auto xb = oracle::random_vector(16, rng);
    const auto a = tt::vector_from_dense(xa, dims).train;
    const auto b = tt::vector_from_dense(xb, dims).train;
    const double wa = 0.75, wb = -1.5;
    const auto c = tt::add(wa, a, wb, b);
    std::vector<double> expect(16);
    for (std::size_t i = 0; i < 16; ++i)
        expect[i] = wa * xa[i] + wb * xb[i];
    EXPECT_LE(oracle::max_abs_diff(tt::to_dense(c), expect), 1e-12);
    const auto ra = a.ranks(), rb = b.ranks(), rc = c.ranks();
    for (std::size_t k = 0; k < rc.size(); ++k)
        EXPECT_EQ(rc[k], ra[k] + rb[k]);
}

TEST(Add, MismatchedShapesThrow)
{
    const auto a = tt::ones(twos(4));
    const auto b = tt::ones(twos(5));
    EXPECT_THROW(tt::add(1.0, a, 1.0, b), StructuralError);
    const std::vector<std::size_t> other{2, 2, 3, 2};
    EXPECT_THROW(tt::add(1.0, a, 1.0, tt::ones(other)), StructuralError);
}

TEST(Truncate, ExactPolicyKeepsValues)
{
    std::mt19937_64 rng(9);
    const auto a = oracle::random_train(twos(6), {2, 4, 5, 4, 2}, rng);
    const auto r = tt::truncate(a, TruncationPolicy::exact());
    EXPECT_LE(oracle::rel_diff(tt::to_dense(r.train), tt::to_dense(a)), 1e-12);
}

TEST(Truncate, DropsNegligibleOrthogonalTerm)
{
    // u1(x)v1(x)w1 + 1e-9 u2(x)v2(x)w2 with u1 _|_ u2 etc.: dense SVD of any
    // unfolding has singular values {|t1|, 1e-9 |t2|}.
    const std::vector<double> e0{1.0, 0.0}, e1{0.0, 1.0};
    const std::vector<double> f0{0.6, 0.8}, f1{-0.8, 0.6};
    std::vector<double> x(8);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j)
            for (std::size_t k = 0; k < 2; ++k)
                x[(i * 2 + j) * 2 + k] = e0[i] * f0[j] * e0[k] + 1e-9 * e1[i] * f1[j] * e1[k];
    const auto dims = twos(3);
    const auto full = tt::vector_from_dense(x, dims).train;
    ASSERT_EQ(full.max_rank(), 2u);
    const auto r = tt::truncate(full, TruncationPolicy::eps(1e-6));
    for (std::size_t rank : r.train.ranks())
        EXPECT_EQ(rank, 1u);
    // discarded term has unit norm factors, so the error is its weight
    EXPECT_NEAR(r.error, 1e-9, 1e-15);
    const Eigen::VectorXd diff = oracle::as_eigen(tt::to_dense(r.train)) - oracle::as_eigen(x);
    EXPECT_NEAR(diff.norm(), 1e-9, 1e-15);
}

TEST(Truncate, SingleBondErrorMatchesDenseDistance)
{
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 10; ++trial) {
        // only the middle bond (rank 4) exceeds the cap of 2
        const auto a = oracle::random_train(twos(4), {2, 4, 2}, rng);
        const auto r = tt::truncate(a, TruncationPolicy::capped(0.0, 2));
        const auto ranks = r.train.ranks();
        EXPECT_EQ(ranks[1], 2u);
        const Eigen::VectorXd diff = oracle::as_eigen(tt::to_dense(r.train)) - oracle::as_eigen(tt::to_dense(a));
        EXPECT_NEAR(r.error, diff.norm(), 1e-10);
        // dense oracle: discarded singular values of the middle unfolding
        const auto da = tt::to_dense(a);
        const Eigen::Map<const Eigen::Matrix<double, 4, 4, Eigen::RowMajor>> unf(da.data());
        const Eigen::Vector4d s = Eigen::JacobiSVD<Eigen::Matrix4d>(unf).singularValues();
        EXPECT_NEAR(r.error, std::hypot(s(2), s(3)), 1e-10);
    }
}

TEST(Truncate, ReportedErrorBoundsBudgetAndRanks)
{
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 10; ++trial) {
        const auto a = oracle::random_train(twos(8), {2, 4, 8, 8, 8, 4, 2}, rng);
        const double eps = 0.05 * (trial + 1);
        const auto r = tt::truncate(a, TruncationPolicy::capped(eps, 6));
        EXPECT_LE(r.train.max_rank(), 6u);
        const Eigen::VectorXd before = oracle::as_eigen(tt::to_dense(a));
        const Eigen::VectorXd diff = oracle::as_eigen(tt::to_dense(r.train)) - before;
        EXPECT_NEAR(r.error, diff.norm(), 1e-10 * before.norm());
        const auto r_eps = tt::truncate(a, TruncationPolicy::eps(eps));
        EXPECT_LE(r_eps.error, eps * before.norm() * (1 + 1e-12));
    }
}

TEST(Diag, ConstantIsScaledIdentity)
{
    const auto dims = twos(4);
    const tt::Matrix m = tt::to_dense(tt::diag(tt::constant_vector(dims, 2.5)));
    EXPECT_LE((m - 2.5 * tt::Matrix::Identity(16, 16)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Diag, ActsElementwise)
{
    std::mt19937_64 rng(19);
    const auto dims = twos(4);
    const auto v = oracle::random_vector(16, rng);
    const auto x = oracle::random_vector(16, rng);
    const tt::Matrix m = tt::to_dense(tt::diag(tt::vector_from_dense(v, dims).train));
    const Eigen::VectorXd y = m * oracle::as_eigen(x);
    for (std::size_t i = 0; i < 16; ++i)
        EXPECT_NEAR(y(Eigen::Index(i)), v[i] * x[i], 1e-12);
}

TEST(Diag, MaskIsProjector)
{
    const auto dims = twos(3);
    const std::vector<double> mask{1, 0, 0, 1, 1, 1, 0, 1};
    const tt::Matrix p = tt::to_dense(tt::diag(tt::vector_from_dense(mask, dims).train));
    EXPECT_LE((p * p - p).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Apply, IdentityLeavesVector)
{
    std::mt19937_64 rng(23);
    const auto x = oracle::random_train(twos(5), {2, 3, 3, 2}, rng);
    const auto y = tt::apply(tt::identity_operator(twos(5)), x, TruncationPolicy::exact());
    EXPECT_LE(oracle::rel_diff(tt::to_dense(y), tt::to_dense(x)), 1e-12);
}

TEST(Apply, MatchesDenseProduct)
{
    std::mt19937_64 rng(29);
    const auto a = oracle::random_operator(twos(3), {3, 2}, rng);
    const auto x = oracle::random_train(twos(3), {2, 2}, rng);
    const Eigen::VectorXd expect = tt::to_dense(a) * oracle::as_eigen(tt::to_dense(x));
    const auto y = tt::to_dense(tt::apply(a, x, TruncationPolicy::exact()));
    EXPECT_LE((oracle::as_eigen(y) - expect).norm(), 1e-12 * expect.norm());
    const auto yd = tt::apply_to_dense(a, tt::to_dense(x));
    EXPECT_LE((oracle::as_eigen(yd) - expect).norm(), 1e-12 * expect.norm());
}

TEST(Apply, DifferenceOfConstantVanishes)
{
    const fdm::LatticeSpec spec(2, 3);
    const auto c = tt::constant_vector(spec.qtt_dims(), 1.7);
    const auto y = tt::apply(fdm::central_diff_qtt(spec, 0), c, TruncationPolicy::exact());
    EXPECT_LE(tt::norm(y), 1e-12);
}

TEST(Apply, LinearityProperty)
{
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 5; ++trial) {
        const auto a = oracle::random_operator(twos(4), {2, 3, 2}, rng);
        const auto x = oracle::random_train(twos(4), {2, 2, 2}, rng);
        const auto y = oracle::random_train(twos(4), {2, 3, 2}, rng);
        const auto lhs = tt::to_dense(tt::apply(a, tt::add(1.0, x, 1.0, y), TruncationPolicy::exact()));
        auto rhs = tt::to_dense(tt::apply(a, x, TruncationPolicy::exact()));
        const auto ay = tt::to_dense(tt::apply(a, y, TruncationPolicy::exact()));
        double scale = 0.0;
        for (std::size_t i = 0; i < rhs.size(); ++i) {
            rhs[i] += ay[i];
            scale = std::max(scale, std::abs(rhs[i]));
        }
        EXPECT_LE(oracle::max_abs_diff(lhs, rhs), 1e-12 * scale);
    }
}

TEST(Apply, StructuralMismatchThrows)
{
    const auto a = tt::identity_operator(twos(4));
    EXPECT_THROW(tt::apply_exact(a, tt::ones(twos(5))), StructuralError);
}

TEST(Compose, IdentityLeavesOperator)
{
    std::mt19937_64 rng(37);
    const auto a = oracle::random_operator(twos(3), {2, 3}, rng);
    const auto c = tt::compose(tt::identity_operator(twos(3)), a, TruncationPolicy::exact());
    EXPECT_LE((tt::to_dense(c) - tt::to_dense(a)).norm(), 1e-12 * tt::to_dense(a).norm());
}

TEST(Compose, MatchesDenseProduct)
{
    std::mt19937_64 rng(41);
    const auto a = oracle::random_operator(twos(3), {2, 3}, rng);
    const auto b = oracle::random_operator(twos(3), {3, 2}, rng);
    const tt::Matrix expect = tt::to_dense(a) * tt::to_dense(b);
    const tt::Matrix got = tt::to_dense(tt::compose(a, b, TruncationPolicy::exact()));
    EXPECT_LE((got - expect).norm(), 1e-12 * expect.norm());
}

TEST(Compose, SquaredDifferenceIsWideStencil)
{
    const fdm::LatticeSpec spec(1, 4);
    const std::size_t n = spec.nodes_per_axis();
    const double h = spec.spacing();
    std::vector<double> u(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double y = h * static_cast<double>(i);
        u[i] = 3.0 * y * y - y + 0.5;
    }
    const auto dd = tt::compose(fdm::central_diff_qtt(spec, 0), fdm::central_diff_qtt(spec, 0),
                                TruncationPolicy::exact());
    const auto got = tt::to_dense(tt::apply(dd, tt::vector_from_dense(u, spec.qtt_dims()).train,
                                            TruncationPolicy::exact()));
    for (std::size_t i = 0; i < n; ++i) {
        const double expect = (u[(i + 2) % n] - 2.0 * u[i] + u[(i + n - 2) % n]) / (4.0 * h * h);
        EXPECT_NEAR(got[i], expect, 1e-9) << "node " << i;
    }
}

TEST(Inner, OnesCountsNodes)
{
    for (int d = 1; d <= 3; ++d)
        for (int n = 1; n <= 3; ++n) {
            const fdm::LatticeSpec spec(d, n);
            const auto o = tt::ones(spec.qtt_dims());
            EXPECT_DOUBLE_EQ(tt::inner(o, o), std::ldexp(1.0, d * n));
        }
}

TEST(Inner, MatchesDenseNorm)
{
    std::mt19937_64 rng(43);
    const auto x = oracle::random_train(twos(4), {2, 3, 2}, rng);
    const Eigen::VectorXd dx = oracle::as_eigen(tt::to_dense(x));
    EXPECT_NEAR(tt::inner(x, x), dx.squaredNorm(), 1e-12 * dx.squaredNorm());
    EXPECT_NEAR(tt::norm(x), dx.norm(), 1e-12 * dx.norm());
}

TEST(Inner, CauchySchwarz)
{
    std::mt19937_64 rng(47);
    for (int trial = 0; trial < 20; ++trial) {
        const auto a = oracle::random_train(twos(6), {2, 3, 4, 3, 2}, rng);
        const auto b = oracle::random_train(twos(6), {2, 2, 2, 2, 2}, rng);
        EXPECT_LE(std::abs(tt::inner(a, b)), tt::norm(a) * tt::norm(b) * (1 + 1e-12));
    }
}

TEST(Kron, ComponentCoreLayout)
{
    std::mt19937_64 rng(53);
    const auto dims = twos(3);
    const auto v = oracle::random_vector(8, rng);
    const auto spatial = tt::vector_from_dense(v, dims).train;
    const std::vector<std::size_t> comp_dim{3};
    const std::vector<double> e1{0.0, 1.0, 0.0};
    const auto e = tt::vector_from_dense(e1, comp_dim).train;
    const auto field = tt::kron(spatial, e);
    const auto dense = tt::to_dense(field);
    for (std::size_t g = 0; g < 8; ++g)
        for (std::size_t j = 0; j < 3; ++j)
            EXPECT_NEAR(dense[g * 3 + j], j == 1 ? v[g] : 0.0, 1e-14);
    const auto back = tt::to_dense(tt::fix_last_index(field, 1));
    EXPECT_LE(oracle::max_abs_diff(back, v), 1e-14);
}

TEST(Policy, RejectsInvalidValues)
{
    EXPECT_THROW(TruncationPolicy::capped(-1.0, 3).validate(), std::invalid_argument);
    EXPECT_THROW(TruncationPolicy::capped(0.1, 0).validate(), std::invalid_argument);
}

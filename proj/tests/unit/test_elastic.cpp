#include <gtest/gtest.h>

#include "support/dense_homog.hpp"
#include "tthom/homog/elastic.hpp"
#include "tthom/reference/full_rank.hpp"

using namespace tthom;

namespace {

rve::VoxelGrid voronoi(int d, int n, std::uint64_t seed, std::size_t points = 6)
{
    return rve::generate_voronoi_rve(fdm::LatticeSpec(d, n), {points, 0.5, seed});
}

const homog::Lame kStiff = homog::lame_from_engineering(10.0, 0.3);
const homog::Lame kSoft = homog::lame_from_engineering(1.0, 0.3);

homog::ElasticityTensor tt_C(const rve::VoxelGrid& grid, homog::Lame a, homog::Lame b)
{
    const auto problem = homog::make_elastic_problem(grid, a, b, tt::TruncationPolicy::exact());
    const auto sol = homog::solve_cell_elastic(problem);
    EXPECT_TRUE(sol.converged());
    return homog::homogenized_C(problem, sol);
}

double rel_diff(const homog::ElasticityTensor& c, const std::vector<double>& expect)
{
    return oracle::rel_diff(c.values(), expect);
}

} // namespace

TEST(Lame, EngineeringConversion)
{
    const auto l = homog::lame_from_engineering(10.0, 0.3);
    EXPECT_NEAR(l.lambda, 10.0 * 0.3 / (1.3 * 0.4), 1e-12);
    EXPECT_NEAR(l.mu, 10.0 / 2.6, 1e-12);
    EXPECT_THROW(homog::lame_from_engineering(1.0, 0.5), std::invalid_argument);
    EXPECT_THROW(homog::lame_from_engineering(-1.0, 0.2), std::invalid_argument);
}

TEST(ElasticityTensor, IsotropicVoigtLayout)
{
    const auto c = homog::ElasticityTensor::isotropic(3, {2.0, 1.0});
    const Eigen::MatrixXd v = c.voigt();
    ASSERT_EQ(v.rows(), 6);
    EXPECT_DOUBLE_EQ(v(0, 0), 4.0);
    EXPECT_DOUBLE_EQ(v(0, 1), 2.0);
    EXPECT_DOUBLE_EQ(v(3, 3), 1.0);
    EXPECT_DOUBLE_EQ(v(0, 3), 0.0);
    EXPECT_EQ(c.symmetry_defect(), 0.0);
    const auto& pairs = homog::ElasticityTensor::voigt_pairs(2);
    EXPECT_EQ(pairs[2], std::make_pair(0, 1));
}

TEST(ElasticOperator, BlocksMatchDenseOracle)
{
    for (int d : {2, 3}) {
        const int n = 2;
        const auto grid = voronoi(d, n, 5);
        const auto problem = homog::make_elastic_problem(grid, kStiff, kSoft, tt::TruncationPolicy::exact());
        const auto lambda = rve::material_values(grid, kStiff.lambda, kSoft.lambda);
        const auto mu = rve::material_values(grid, kStiff.mu, kSoft.mu);
        const oracle::Dense expect = oracle::elastic_operator(d, n, oracle::as_eigen(lambda), oracle::as_eigen(mu));
        const oracle::Dense tt_op = tt::to_dense(homog::assemble_elastic_operator(problem).train);
        EXPECT_LT((tt_op - expect).norm(), 1e-10 * expect.norm()) << "d=" << d;
        const oracle::Dense sparse = reference::elastic_operator_sparse(grid.spec, lambda, mu);
        EXPECT_LT((sparse - expect).norm(), 1e-12 * expect.norm()) << "d=" << d;
        EXPECT_LT((expect - expect.transpose()).norm(), 1e-12 * expect.norm());
    }
}

TEST(ElasticOperator, NegativeSemidefinite)
{
    const auto grid = voronoi(2, 2, 17);
    const auto problem = homog::make_elastic_problem(grid, kStiff, kSoft, tt::TruncationPolicy::exact());
    const oracle::Dense k = tt::to_dense(homog::assemble_elastic_operator(problem).train);
    Eigen::SelfAdjointEigenSolver<oracle::Dense> eig(k);
    EXPECT_LT(eig.eigenvalues().maxCoeff(), 1e-10 * k.norm());
}

TEST(ElasticRhs, MatchesReferenceAndIsSymmetricInPair)
{
    const auto grid = voronoi(2, 3, 23);
    const auto problem = homog::make_elastic_problem(grid, kStiff, kSoft, tt::TruncationPolicy::exact());
    const auto lambda = rve::material_values(grid, kStiff.lambda, kSoft.lambda);
    const auto mu = rve::material_values(grid, kStiff.mu, kSoft.mu);
    const auto basis = reference::parity_basis(grid.spec, 2);
    for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) {
            const auto b = tt::to_dense(homog::assemble_elastic_rhs(problem, k, l));
            EXPECT_LT(oracle::rel_diff(b, reference::elastic_rhs_dense(grid.spec, lambda, mu, k, l)), 1e-12);
            EXPECT_LT(oracle::rel_diff(b, tt::to_dense(homog::assemble_elastic_rhs(problem, l, k))), 1e-14);
            for (const auto& v : basis)
                EXPECT_LT(std::abs(oracle::as_eigen(v).dot(oracle::as_eigen(b))), 1e-10);
        }
}

TEST(ElasticHomogenization, HomogeneousCellIsIsotropic)
{
    for (int d : {2, 3}) {
        const auto grid = rve::VoxelGrid::uniform(fdm::LatticeSpec(d, 2), 1);
        const auto c = tt_C(grid, kStiff, kSoft);
        const auto expect = homog::ElasticityTensor::isotropic(d, kStiff);
        EXPECT_LT(homog::relative_frobenius(c, expect), 1e-10) << "d=" << d;
    }
}

TEST(ElasticHomogenization, TensorTrainMatchesDenseOracle)
{
    for (int d : {2, 3}) {
        const int n = d == 3 ? 2 : 3;
        const auto grid = voronoi(d, n, 31 + std::uint64_t(d));
        const auto lambda = rve::material_values(grid, kStiff.lambda, kSoft.lambda);
        const auto mu = rve::material_values(grid, kStiff.mu, kSoft.mu);
        const auto expect = oracle::elastic_C(d, n, oracle::as_eigen(lambda), oracle::as_eigen(mu));
        EXPECT_LT(rel_diff(tt_C(grid, kStiff, kSoft), expect), 1e-8) << "d=" << d;
    }
}

TEST(ElasticHomogenization, FullRankMatchesDenseOracle)
{
    for (int d : {2, 3}) {
        const int n = d == 3 ? 2 : 3;
        const auto grid = voronoi(d, n, 13 + std::uint64_t(d));
        const auto lambda = rve::material_values(grid, kStiff.lambda, kSoft.lambda);
        const auto mu = rve::material_values(grid, kStiff.mu, kSoft.mu);
        const auto expect = oracle::elastic_C(d, n, oracle::as_eigen(lambda), oracle::as_eigen(mu));
        const auto full = reference::solve_elastic_full(grid, kStiff, kSoft);
        EXPECT_TRUE(full.converged());
        EXPECT_LT(rel_diff(full.C, expect), 1e-8) << "d=" << d;
    }
}

TEST(ElasticHomogenization, MinorAndMajorSymmetry)
{
    const auto c = tt_C(voronoi(2, 4, 2, 10), kStiff, kSoft);
    EXPECT_LT(c.symmetry_defect(), 1e-8 * c.frobenius());
}

TEST(ElasticHomogenization, ScalesLinearlyWithModuli)
{
    const auto grid = voronoi(2, 3, 4);
    const auto c = tt_C(grid, kStiff, kSoft);
    const homog::Lame a{3.0 * kStiff.lambda, 3.0 * kStiff.mu};
    const homog::Lame b{3.0 * kSoft.lambda, 3.0 * kSoft.mu};
    EXPECT_LT(homog::relative_frobenius(tt_C(grid, a, b), c.scaled(3.0)), 1e-9);
}

TEST(ElasticHomogenization, PhaseSwapInvariance)
{
    const auto grid = voronoi(2, 3, 6);
    const auto c = tt_C(grid, kStiff, kSoft);
    EXPECT_LT(homog::relative_frobenius(tt_C(grid.complement(), kSoft, kStiff), c), 1e-9);
}

TEST(ElasticProblem, RejectsUnstableModuli)
{
    const auto grid = voronoi(2, 2, 1);
    EXPECT_THROW(homog::make_elastic_problem(grid, {1.0, 0.0}, kSoft, tt::TruncationPolicy::exact()),
                 std::invalid_argument);
    EXPECT_THROW(homog::make_elastic_problem(grid, kStiff, {-5.0, 1.0}, tt::TruncationPolicy::exact()),
                 std::invalid_argument);
}

TEST(ElasticHomogenization, InvariantUnderNullspaceModes)
{
    const auto grid = voronoi(2, 3, 19);
    const auto problem = homog::make_elastic_problem(grid, kStiff, kSoft, tt::TruncationPolicy::exact());
    const auto sol = homog::solve_cell_elastic(problem);
    const auto c = homog::homogenized_C(problem, sol);
    std::vector<std::size_t> dims = grid.spec.qtt_dims();
    dims.push_back(2);
    for (const auto& mode : reference::parity_basis(grid.spec, 2)) {
        const auto v = tt::vector_from_dense(mode, dims).train;
        auto shifted = sol;
        for (auto& x : shifted.xi)
            x = tt::add(1.0, x, 3.0, v);
        EXPECT_LT(homog::relative_frobenius(homog::homogenized_C(problem, shifted), c), 1e-10);
    }
}

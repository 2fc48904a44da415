#pragma once

#include <array>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tthom/homog/thermal.hpp"

namespace tthom::homog {

struct Lame {
    double lambda = 0.0;
    double mu = 0.0;
};

// 3D conversion, also used for 2D (plane strain).
Lame lame_from_engineering(double young, double poisson);

// Full d^4 tensor, C(i, j, k, l) stored row-major.
class ElasticityTensor {
public:
    ElasticityTensor() = default;
    explicit ElasticityTensor(int dim) : dim_(dim), c_(std::size_t(dim * dim * dim * dim), 0.0) {}

    static ElasticityTensor isotropic(int dim, Lame lame);

    int dim() const noexcept { return dim_; }
    double& operator()(int i, int j, int k, int l) { return c_[index(i, j, k, l)]; }
    double operator()(int i, int j, int k, int l) const { return c_[index(i, j, k, l)]; }
    const std::vector<double>& values() const noexcept { return c_; }

    // Rows/columns ordered (00, 11, 01) in 2D and (00, 11, 22, 12, 02, 01) in 3D.
    Eigen::MatrixXd voigt() const;
    static const std::vector<std::pair<int, int>>& voigt_pairs(int dim);

    double frobenius() const;
    // Largest violation of the minor and major symmetries.
    double symmetry_defect() const;
    ElasticityTensor scaled(double s) const;

private:
    std::size_t index(int i, int j, int k, int l) const
    {
        return std::size_t(((i * dim_ + j) * dim_ + k) * dim_ + l);
    }
    int dim_ = 0;
    std::vector<double> c_;
};

double relative_frobenius(const ElasticityTensor& a, const ElasticityTensor& b);

// Elastic cell problem. Vector fields carry a trailing component core of
// size d, so their dense layout is g * d + component.
struct ElasticProblem {
    fdm::LatticeSpec spec;
    tt::TTVector lambda;
    tt::TTVector mu;
    tt::TruncationPolicy policy;
    double encoding_error = 0.0;
};

ElasticProblem make_elastic_problem(const rve::VoxelGrid& grid, Lame phase_a, Lame phase_b,
                                    const tt::TruncationPolicy& policy);

// Block operator sum_{j,j'} K_jj' (x) E_jj' with
// K_jj' = D_j lambda D_j' + D_j' mu D_j + delta_jj' sum_i D_i mu D_i.
Assembled<tt::TTOperator> assemble_elastic_operator(const ElasticProblem& problem);
// Single spatial block K_jj' (no component core).
tt::TTOperator assemble_elastic_block(const ElasticProblem& problem, int j, int jp);

// Component j: delta_kl D_j lambda + delta_jl D_k mu + delta_jk D_l mu.
tt::TTVector assemble_elastic_rhs(const ElasticProblem& problem, int k, int l);
tt::TTVector elastic_rhs_component(const ElasticProblem& problem, int k, int l, int j);

struct ElasticSolution {
    // xi[pair index] for the (k, l) pairs with k <= l in lexicographic order.
    std::vector<std::pair<int, int>> pairs;
    std::vector<tt::TTVector> xi;
    std::vector<solver::SolveReport> reports;
    double assembly_error = 0.0;
    double assemble_seconds = 0.0;
    double solve_seconds = 0.0;

    bool converged() const;
    const tt::TTVector& field(int k, int l) const;
};

ElasticSolution solve_cell_elastic(const ElasticProblem& problem, solver::MALSConfig cfg = {});
ElasticSolution solve_cell_elastic(const ElasticProblem& problem, const tt::TTOperator& op, solver::MALSConfig cfg);

ElasticityTensor homogenized_C(const ElasticProblem& problem, const ElasticSolution& solution);

} // namespace tthom::homog

#pragma once

#include <span>
#include <vector>

#include "tthom/homog/elastic.hpp"
#include "tthom/homog/thermal.hpp"
#include "tthom/linalg/csr.hpp"
#include "tthom/rve/voxel_grid.hpp"
#include "tthom/solver/mals.hpp"

// Conventional sparse finite-difference homogenization, used as the oracle
// for the tensor-train path and as the benchmark baseline.
namespace tthom::reference {

struct PcgOptions {
    double rel_tol = 1e-10;
    std::size_t max_iter = 0; // 0: 10 * size
};

// Orthonormal basis of the common nullspace of the difference operators:
// products over axes of constants and (-1)^g_axis, one set per component
// (dense layout g * components + c).
std::vector<std::vector<double>> parity_basis(const fdm::LatticeSpec& spec, int components = 1);

// Jacobi-preconditioned CG on the orthogonal complement of `nullspace`
// (orthonormal vectors). The right-hand side and every iterate are
// projected, so the returned solution has no nullspace component.
std::vector<double> deflated_pcg(const linalg::CsrMatrix& a, std::span<const double> b,
                                 const std::vector<std::vector<double>>& nullspace, const PcgOptions& opt,
                                 solver::SolveReport& report);

// sum_i D_i diag(kappa) D_i, negative semidefinite.
linalg::SparseMatrix thermal_operator_sparse(const fdm::LatticeSpec& spec, std::span<const double> kappa);
std::vector<double> thermal_rhs_dense(const fdm::LatticeSpec& spec, std::span<const double> kappa, int axis);
homog::ConductivityTensor kappa_from_fields(const fdm::LatticeSpec& spec, std::span<const double> kappa,
                                            const std::vector<std::vector<double>>& phi);

struct FullThermalResult {
    homog::ConductivityTensor kappa;
    std::vector<std::vector<double>> phi;
    std::vector<solver::SolveReport> reports;
    double assemble_seconds = 0.0;
    double solve_seconds = 0.0;
    bool converged() const;
};

FullThermalResult solve_thermal_full(const fdm::LatticeSpec& spec, std::span<const double> kappa,
                                     const PcgOptions& opt = {});
FullThermalResult solve_thermal_full(const rve::VoxelGrid& grid, double kappa_a, double kappa_b,
                                     const PcgOptions& opt = {});

// Block operator with dense index g * d + component.
linalg::SparseMatrix elastic_operator_sparse(const fdm::LatticeSpec& spec, std::span<const double> lambda,
                                             std::span<const double> mu);
std::vector<double> elastic_rhs_dense(const fdm::LatticeSpec& spec, std::span<const double> lambda,
                                      std::span<const double> mu, int k, int l);
// xi indexed like ElasticSolution::pairs (k <= l, lexicographic).
homog::ElasticityTensor C_from_fields(const fdm::LatticeSpec& spec, std::span<const double> lambda,
                                      std::span<const double> mu, const std::vector<std::vector<double>>& xi);

struct FullElasticResult {
    homog::ElasticityTensor C;
    std::vector<std::pair<int, int>> pairs;
    std::vector<std::vector<double>> xi;
    std::vector<solver::SolveReport> reports;
    double assemble_seconds = 0.0;
    double solve_seconds = 0.0;
    bool converged() const;
};

FullElasticResult solve_elastic_full(const fdm::LatticeSpec& spec, std::span<const double> lambda,
                                     std::span<const double> mu, const PcgOptions& opt = {});
FullElasticResult solve_elastic_full(const rve::VoxelGrid& grid, homog::Lame phase_a, homog::Lame phase_b,
                                     const PcgOptions& opt = {});

} // namespace tthom::reference

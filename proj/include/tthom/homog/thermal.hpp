#pragma once

#include <vector>

#include <Eigen/Dense>

#include "tthom/fdm/lattice.hpp"
#include "tthom/rve/voxel_grid.hpp"
#include "tthom/solver/mals.hpp"
#include "tthom/tt/tensor_train.hpp"

namespace tthom::homog {

using ConductivityTensor = Eigen::MatrixXd;

// Thermal cell problem on the QTT lattice. rel_eps of `policy` governs every
// rounding (encoding, assembly, solution); max_rank caps the phase
// indicator and the solution train.
struct ThermalProblem {
    fdm::LatticeSpec spec;
    tt::TTVector kappa;
    tt::TruncationPolicy policy;
    // Frobenius error of the capped phase-indicator encoding.
    double encoding_error = 0.0;
};

ThermalProblem make_thermal_problem(const rve::VoxelGrid& grid, double kappa_a, double kappa_b,
                                    const tt::TruncationPolicy& policy);

template <class Train>
struct Assembled {
    Train train;
    // Absolute Frobenius error accumulated by the roundings.
    double truncation_error = 0.0;
};

// sum_i D_i diag(kappa) D_i. D is antisymmetric, so this is the negative of
// a positive semidefinite operator; the solvers negate both sides.
Assembled<tt::TTOperator> assemble_thermal_operator(const ThermalProblem& problem);
// D_axis kappa.
tt::TTVector assemble_thermal_rhs(const ThermalProblem& problem, int axis);

struct ThermalSolution {
    std::vector<tt::TTVector> phi; // one per axis, mean zero
    std::vector<solver::SolveReport> reports;
    double assembly_error = 0.0;
    double assemble_seconds = 0.0;
    double solve_seconds = 0.0;

    bool converged() const;
};

// MALS with cfg.policy replaced by the problem's policy. Solutions are
// returned with their nullspace (constant and checkerboard) part removed.
ThermalSolution solve_cell_thermal(const ThermalProblem& problem, solver::MALSConfig cfg = {});
ThermalSolution solve_cell_thermal(const ThermalProblem& problem, const tt::TTOperator& op,
                                   solver::MALSConfig cfg);

ConductivityTensor homogenized_kappa(const ThermalProblem& problem, const std::vector<tt::TTVector>& phi);

// Closed form for two equal-width layers rotated by 45 degrees.
ConductivityTensor analytic_layered_kappa(double kappa_a, double kappa_b);

// ||a - b||_F / ||b||_F
double relative_frobenius(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

} // namespace tthom::homog

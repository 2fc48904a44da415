#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "tthom/tt/tensor_train.hpp"

namespace tthom::solver {

struct MALSConfig {
    int max_sweeps = 30;
    double rel_residual_tol = 1e-8;
    // Supercore split: relative threshold on the local SVD and rank cap.
    tt::TruncationPolicy policy = tt::TruncationPolicy::exact();
    double local_solver_tol = 1e-12;
    // Diagonal shift of every local system, relative to the largest local
    // diagonal entry (our estimate of the operator norm). Zero disables it.
    double regularization = 1e-12;
    // Local systems up to this many unknowns are factorized directly.
    std::size_t dense_local_limit = 4096;
    // Stop early when a full sweep fails to cut the best residual below
    // stall_ratio times its value stall_sweeps sweeps earlier (0 disables).
    // Rank-capped solves plateau well above any useful tolerance.
    int stall_sweeps = 3;
    double stall_ratio = 0.9;
    // Seed of the default random initial guess.
    std::uint64_t seed = 0x5eed;

    void validate() const;
};

struct SolveReport {
    // Relative residual ||Ax - b|| / ||b|| after every half-sweep.
    std::vector<double> residual_history;
    // Energy 0.5 <x, A x> - <b, x> after every half-sweep.
    std::vector<double> energy_history;
    double final_residual = 0.0;
    // Bond ranks of x after every half-sweep.
    std::vector<std::vector<std::size_t>> rank_profiles;
    int sweeps = 0;
    bool converged = false;
    bool stalled = false;
    double wall_seconds = 0.0;
    std::size_t largest_local_system = 0;
};

struct MALSResult {
    tt::TTVector x;
    SolveReport report;
};

// Two-site alternating least squares for A x = b with A symmetric positive
// semidefinite and b orthogonal to its nullspace. Each step merges two
// neighbouring cores, solves the projected system, and splits the result by
// SVD under cfg.policy. Returns the first iterate that meets the tolerance,
// otherwise the one with the lowest energy (the quantity ALS minimizes, and
// the meaningful one when a rank cap keeps the residual large).
MALSResult mals_solve(const tt::TTOperator& a, const tt::TTVector& b, const std::optional<tt::TTVector>& x0,
                      const MALSConfig& cfg = {});

// Rank-1 random train with its mean removed (rank 2 after the subtraction).
tt::TTVector default_initial_guess(std::span<const std::size_t> dims, std::uint64_t seed);

struct Diagnostics {
    double residual = 0.0; // ||A x - b||
    double energy = 0.0;   // 0.5 <x, A x> - <b, x>
};

// Densely when the vectors are small enough, otherwise in TT.
Diagnostics diagnose(const tt::TTOperator& a, const tt::TTVector& x, const tt::TTVector& b);
double residual_norm(const tt::TTOperator& a, const tt::TTVector& x, const tt::TTVector& b);

} // namespace tthom::solver

#include "tthom/homog/thermal.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "tthom/error.hpp"
#include "tthom/fdm/central_difference.hpp"
#include "tthom/homog/gauge.hpp"

namespace tthom::homog {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

tt::TruncationPolicy eps_only(const tt::TruncationPolicy& p) { return tt::TruncationPolicy::eps(p.rel_eps); }

// Operator roundings use the threshold relative to a typical row rather than
// the whole matrix: a Frobenius-relative error grows like sqrt(N^d) times the
// row scale and would swamp the smallest nonzero eigenvalues on fine grids,
// leaving an indefinite operator.
tt::TruncationPolicy operator_rounding(const tt::TruncationPolicy& p, const fdm::LatticeSpec& spec)
{
    return tt::TruncationPolicy::eps(p.rel_eps / std::sqrt(double(spec.num_nodes())));
}

// -b, with roundoff-level right-hand sides (homogeneous cells) snapped to zero
// so the solver does not chase a relative residual of noise.
tt::TTVector negated_rhs(const tt::TTVector& b, double scale)
{
    if (tt::norm(b) <= 1e-13 * scale)
        return tt::constant_vector(b.phys_dims(), 0.0);
    return tt::scale(-1.0, b);
}

} // namespace

ThermalProblem make_thermal_problem(const rve::VoxelGrid& grid, double kappa_a, double kappa_b,
                                    const tt::TruncationPolicy& policy)
{
    policy.validate();
    if (!(kappa_a > 0.0) || !(kappa_b > 0.0))
        throw std::invalid_argument("thermal problem: conductivities must be positive");
    ThermalProblem p;
    p.spec = grid.spec;
    p.policy = policy;
    auto chi = rve::chi_to_qtt(grid, policy);
    p.encoding_error = chi.error;
    p.kappa = tt::truncate(rve::material_field(chi.train, kappa_a, kappa_b), eps_only(policy)).train;
    return p;
}

Assembled<tt::TTOperator> assemble_thermal_operator(const ThermalProblem& problem)
{
    const auto& spec = problem.spec;
    const auto round = operator_rounding(problem.policy, spec);
    const tt::TTOperator kd = tt::diag(problem.kappa);
    Assembled<tt::TTOperator> out;
    for (int i = 0; i < spec.dim; ++i) {
        const tt::TTOperator d = fdm::central_diff_qtt(spec, i);
        auto inner = tt::truncate(tt::compose_exact(kd, d), round);
        auto term = tt::truncate(tt::compose_exact(d, inner.train), round);
        out.truncation_error += inner.error + term.error;
        if (i == 0) {
            out.train = std::move(term.train);
        } else {
            auto sum = tt::truncate(tt::add(1.0, out.train, 1.0, term.train), round);
            out.truncation_error += sum.error;
            out.train = std::move(sum.train);
        }
    }
    return out;
}

tt::TTVector assemble_thermal_rhs(const ThermalProblem& problem, int axis)
{
    return tt::apply(fdm::central_diff_qtt(problem.spec, axis), problem.kappa, eps_only(problem.policy));
}

bool ThermalSolution::converged() const
{
    return std::all_of(reports.begin(), reports.end(), [](const auto& r) { return r.converged; });
}

ThermalSolution solve_cell_thermal(const ThermalProblem& problem, solver::MALSConfig cfg)
{
    const auto t0 = std::chrono::steady_clock::now();
    auto op = assemble_thermal_operator(problem);
    const double assemble = seconds_since(t0);
    ThermalSolution sol = solve_cell_thermal(problem, op.train, cfg);
    sol.assembly_error = op.truncation_error;
    sol.assemble_seconds += assemble;
    return sol;
}

ThermalSolution solve_cell_thermal(const ThermalProblem& problem, const tt::TTOperator& op, solver::MALSConfig cfg)
{
    cfg.policy = problem.policy;
    const auto& spec = problem.spec;
    const auto round = eps_only(problem.policy);
    ThermalSolution sol;
    auto t0 = std::chrono::steady_clock::now();
    // The penalty on the nullspace modes, weighted like the mean diagonal,
    // makes the negated operator positive definite without moving the solution.
    const auto modes = nullspace_modes(spec);
    const double mean_kappa = tt::inner(tt::ones(spec.qtt_dims()), problem.kappa) / double(spec.num_nodes());
    const double n2 = double(spec.nodes_per_axis()) * double(spec.nodes_per_axis());
    const double weight = 0.5 * spec.dim * n2 * mean_kappa;
    const tt::TTOperator neg = tt::add(-1.0, op, 1.0, nullspace_penalty(modes, weight));
    // ||D|| <= N, so N ||kappa|| bounds every right-hand side
    const double scale = double(spec.nodes_per_axis()) * tt::norm(problem.kappa);
    std::vector<tt::TTVector> rhs;
    for (int j = 0; j < spec.dim; ++j)
        rhs.push_back(negated_rhs(remove_nullspace(assemble_thermal_rhs(problem, j), modes, round), scale));
    sol.assemble_seconds = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    for (int j = 0; j < spec.dim; ++j) {
        auto r = solver::mals_solve(neg, rhs[std::size_t(j)], std::nullopt, cfg);
        sol.phi.push_back(remove_nullspace(r.x, modes, round));
        sol.reports.push_back(std::move(r.report));
    }
    sol.solve_seconds = seconds_since(t0);
    return sol;
}

ConductivityTensor homogenized_kappa(const ThermalProblem& problem, const std::vector<tt::TTVector>& phi)
{
    const int d = problem.spec.dim;
    if (phi.size() != std::size_t(d))
        throw StructuralError("homogenized_kappa: need one solution per axis");
    const auto one = tt::ones(problem.spec.qtt_dims());
    // h^d * 2^(dn) = 1, so h^d <.,.> is a volume average
    const double vol = std::pow(problem.spec.spacing(), d);
    const double mean_kappa = vol * tt::inner(one, problem.kappa);
    ConductivityTensor k(d, d);
    for (int i = 0; i < d; ++i) {
        const auto di = fdm::central_diff_qtt(problem.spec, i);
        for (int j = 0; j < d; ++j) {
            const double flux = vol * tt::inner(problem.kappa, tt::apply_exact(di, phi[std::size_t(j)]));
            k(i, j) = (i == j ? mean_kappa : 0.0) - flux;
        }
    }
    return k;
}

ConductivityTensor analytic_layered_kappa(double kappa_a, double kappa_b)
{
    const double parallel = 0.5 * (kappa_a + kappa_b);
    const double normal = 1.0 / (0.5 / kappa_a + 0.5 / kappa_b);
    ConductivityTensor k(2, 2);
    k << parallel + normal, parallel - normal, parallel - normal, parallel + normal;
    return 0.5 * k;
}

double relative_frobenius(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b)
{
    return (a - b).norm() / b.norm();
}

} // namespace tthom::homog

#include "tthom/homog/elastic.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>

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

// d x d unit matrix E_(row, col) as a one-core operator.
tt::TTOperator unit_matrix(int d, int row, int col)
{
    tt::Core c(1, std::size_t(d * d), 1);
    c(0, std::size_t(row * d + col), 0) = 1.0;
    const std::vector<std::size_t> dims{std::size_t(d)};
    return tt::TTOperator({std::move(c)}, dims, dims);
}

tt::TTVector unit_vector(int d, int j, double value = 1.0)
{
    tt::Core c(1, std::size_t(d), 1);
    c(0, std::size_t(j), 0) = value;
    return tt::TTVector({std::move(c)});
}

// D_a diag(w) D_b, rounded.
tt::TTOperator sandwich(const tt::TTOperator& da, const tt::TTOperator& w, const tt::TTOperator& db,
                        const tt::TruncationPolicy& round, double& err)
{
    auto inner = tt::truncate(tt::compose_exact(w, db), round);
    auto outer = tt::truncate(tt::compose_exact(da, inner.train), round);
    err += inner.error + outer.error;
    return std::move(outer.train);
}

void accumulate(std::optional<tt::TTOperator>& acc, const tt::TTOperator& term, const tt::TruncationPolicy& round,
                double& err)
{
    if (!acc) {
        acc = term;
        return;
    }
    auto sum = tt::truncate(tt::add(1.0, *acc, 1.0, term), round);
    err += sum.error;
    acc = std::move(sum.train);
}

// -b, with roundoff-level right-hand sides (homogeneous cells) snapped to zero.
tt::TTVector negated_rhs(const tt::TTVector& b, double scale)
{
    if (tt::norm(b) <= 1e-13 * scale)
        return tt::constant_vector(b.phys_dims(), 0.0);
    return tt::scale(-1.0, b);
}

} // namespace

Lame lame_from_engineering(double young, double poisson)
{
    if (!(young > 0.0) || !(poisson > -1.0 && poisson < 0.5))
        throw std::invalid_argument("lame_from_engineering: need E > 0 and -1 < nu < 1/2");
    return {young * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson)), young / (2.0 * (1.0 + poisson))};
}

ElasticityTensor ElasticityTensor::isotropic(int dim, Lame lame)
{
    ElasticityTensor c(dim);
    auto delta = [](int a, int b) { return a == b ? 1.0 : 0.0; };
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j)
            for (int k = 0; k < dim; ++k)
                for (int l = 0; l < dim; ++l)
                    c(i, j, k, l) = lame.lambda * delta(i, j) * delta(k, l) +
                                    lame.mu * (delta(i, k) * delta(j, l) + delta(i, l) * delta(j, k));
    return c;
}

const std::vector<std::pair<int, int>>& ElasticityTensor::voigt_pairs(int dim)
{
    static const std::vector<std::pair<int, int>> two{{0, 0}, {1, 1}, {0, 1}};
    static const std::vector<std::pair<int, int>> three{{0, 0}, {1, 1}, {2, 2}, {1, 2}, {0, 2}, {0, 1}};
    if (dim == 2)
        return two;
    if (dim == 3)
        return three;
    throw std::invalid_argument("voigt_pairs: dimension must be 2 or 3");
}

Eigen::MatrixXd ElasticityTensor::voigt() const
{
    const auto& pairs = voigt_pairs(dim_);
    const auto n = Eigen::Index(pairs.size());
    Eigen::MatrixXd v(n, n);
    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = 0; b < n; ++b) {
            const auto [i, j] = pairs[std::size_t(a)];
            const auto [k, l] = pairs[std::size_t(b)];
            v(a, b) = (*this)(i, j, k, l);
        }
    return v;
}

double ElasticityTensor::frobenius() const
{
    double s = 0.0;
    for (double v : c_)
        s += v * v;
    return std::sqrt(s);
}

double ElasticityTensor::symmetry_defect() const
{
    double worst = 0.0;
    for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j)
            for (int k = 0; k < dim_; ++k)
                for (int l = 0; l < dim_; ++l) {
                    const double c = (*this)(i, j, k, l);
                    worst = std::max({worst, std::abs(c - (*this)(j, i, k, l)), std::abs(c - (*this)(i, j, l, k)),
                                      std::abs(c - (*this)(k, l, i, j))});
                }
    return worst;
}

ElasticityTensor ElasticityTensor::scaled(double s) const
{
    ElasticityTensor out = *this;
    for (double& v : out.c_)
        v *= s;
    return out;
}

double relative_frobenius(const ElasticityTensor& a, const ElasticityTensor& b)
{
    if (a.dim() != b.dim())
        throw StructuralError("relative_frobenius: dimension mismatch");
    double diff = 0.0;
    for (std::size_t k = 0; k < a.values().size(); ++k)
        diff += (a.values()[k] - b.values()[k]) * (a.values()[k] - b.values()[k]);
    return std::sqrt(diff) / b.frobenius();
}

ElasticProblem make_elastic_problem(const rve::VoxelGrid& grid, Lame phase_a, Lame phase_b,
                                    const tt::TruncationPolicy& policy)
{
    policy.validate();
    for (const Lame& l : {phase_a, phase_b})
        if (!(l.mu > 0.0) || !(l.lambda + 2.0 * l.mu / grid.spec.dim > 0.0))
            throw std::invalid_argument("elastic problem: unstable phase moduli");
    ElasticProblem p;
    p.spec = grid.spec;
    p.policy = policy;
    auto chi = rve::chi_to_qtt(grid, policy);
    p.encoding_error = chi.error;
    const auto round = eps_only(policy);
    p.lambda = tt::truncate(rve::material_field(chi.train, phase_a.lambda, phase_b.lambda), round).train;
    p.mu = tt::truncate(rve::material_field(chi.train, phase_a.mu, phase_b.mu), round).train;
    return p;
}

namespace {

tt::TTOperator elastic_block(const ElasticProblem& problem, int j, int jp, double& err)
{
    const auto& spec = problem.spec;
    spec.validate_axis(j);
    spec.validate_axis(jp);
    const auto round = operator_rounding(problem.policy, spec);
    const tt::TTOperator lam = tt::diag(problem.lambda);
    const tt::TTOperator mu = tt::diag(problem.mu);
    std::optional<tt::TTOperator> acc;
    const auto dj = fdm::central_diff_qtt(spec, j);
    const auto djp = fdm::central_diff_qtt(spec, jp);
    accumulate(acc, sandwich(dj, lam, djp, round, err), round, err);
    accumulate(acc, sandwich(djp, mu, dj, round, err), round, err);
    if (j == jp)
        for (int i = 0; i < spec.dim; ++i) {
            const auto di = fdm::central_diff_qtt(spec, i);
            accumulate(acc, sandwich(di, mu, di, round, err), round, err);
        }
    return std::move(*acc);
}

} // namespace

tt::TTOperator assemble_elastic_block(const ElasticProblem& problem, int j, int jp)
{
    double err = 0.0;
    return elastic_block(problem, j, jp, err);
}

Assembled<tt::TTOperator> assemble_elastic_operator(const ElasticProblem& problem)
{
    const int d = problem.spec.dim;
    const auto round = operator_rounding(problem.policy, problem.spec);
    Assembled<tt::TTOperator> out;
    std::optional<tt::TTOperator> acc;
    for (int j = 0; j < d; ++j)
        for (int jp = 0; jp < d; ++jp) {
            const auto block = elastic_block(problem, j, jp, out.truncation_error);
            accumulate(acc, tt::kron(block, unit_matrix(d, j, jp)), round, out.truncation_error);
        }
    out.train = std::move(*acc);
    return out;
}

tt::TTVector elastic_rhs_component(const ElasticProblem& problem, int k, int l, int j)
{
    const auto& spec = problem.spec;
    spec.validate_axis(k);
    spec.validate_axis(l);
    spec.validate_axis(j);
    tt::TTVector acc = tt::constant_vector(spec.qtt_dims(), 0.0);
    if (k == l)
        acc = tt::add(1.0, acc, 1.0, tt::apply_exact(fdm::central_diff_qtt(spec, j), problem.lambda));
    if (j == l)
        acc = tt::add(1.0, acc, 1.0, tt::apply_exact(fdm::central_diff_qtt(spec, k), problem.mu));
    if (j == k)
        acc = tt::add(1.0, acc, 1.0, tt::apply_exact(fdm::central_diff_qtt(spec, l), problem.mu));
    return tt::truncate(acc, eps_only(problem.policy)).train;
}

tt::TTVector assemble_elastic_rhs(const ElasticProblem& problem, int k, int l)
{
    const int d = problem.spec.dim;
    std::optional<tt::TTVector> acc;
    for (int j = 0; j < d; ++j) {
        auto term = tt::kron(elastic_rhs_component(problem, k, l, j), unit_vector(d, j));
        acc = acc ? tt::add(1.0, *acc, 1.0, term) : std::move(term);
    }
    return tt::truncate(*acc, eps_only(problem.policy)).train;
}

bool ElasticSolution::converged() const
{
    return std::all_of(reports.begin(), reports.end(), [](const auto& r) { return r.converged; });
}

const tt::TTVector& ElasticSolution::field(int k, int l) const
{
    if (k > l)
        std::swap(k, l);
    for (std::size_t p = 0; p < pairs.size(); ++p)
        if (pairs[p] == std::make_pair(k, l))
            return xi[p];
    throw std::out_of_range("ElasticSolution: no field for the requested pair");
}

ElasticSolution solve_cell_elastic(const ElasticProblem& problem, solver::MALSConfig cfg)
{
    const auto t0 = std::chrono::steady_clock::now();
    auto op = assemble_elastic_operator(problem);
    const double assemble = seconds_since(t0);
    ElasticSolution sol = solve_cell_elastic(problem, op.train, cfg);
    sol.assembly_error = op.truncation_error;
    sol.assemble_seconds += assemble;
    return sol;
}

ElasticSolution solve_cell_elastic(const ElasticProblem& problem, const tt::TTOperator& op, solver::MALSConfig cfg)
{
    cfg.policy = problem.policy;
    const auto& spec = problem.spec;
    const int d = spec.dim;
    const auto round = eps_only(problem.policy);
    ElasticSolution sol;
    auto t0 = std::chrono::steady_clock::now();
    const auto modes = nullspace_modes(spec, d);
    const auto one = tt::ones(spec.qtt_dims());
    const double mean_lambda = tt::inner(one, problem.lambda) / double(spec.num_nodes());
    const double mean_mu = tt::inner(one, problem.mu) / double(spec.num_nodes());
    const double n2 = double(spec.nodes_per_axis()) * double(spec.nodes_per_axis());
    const double weight = 0.5 * n2 * (mean_lambda + (d + 1) * mean_mu);
    const tt::TTOperator neg = tt::add(-1.0, op, 1.0, nullspace_penalty(modes, weight));
    const double scale = double(spec.nodes_per_axis()) * (tt::norm(problem.lambda) + 2.0 * tt::norm(problem.mu));
    std::vector<tt::TTVector> rhs;
    for (int k = 0; k < d; ++k)
        for (int l = k; l < d; ++l) {
            sol.pairs.emplace_back(k, l);
            rhs.push_back(negated_rhs(remove_nullspace(assemble_elastic_rhs(problem, k, l), modes, round), scale));
        }
    sol.assemble_seconds = seconds_since(t0);
    t0 = std::chrono::steady_clock::now();
    for (const auto& b : rhs) {
        auto r = solver::mals_solve(neg, b, std::nullopt, cfg);
        sol.xi.push_back(remove_nullspace(r.x, modes, round));
        sol.reports.push_back(std::move(r.report));
    }
    sol.solve_seconds = seconds_since(t0);
    return sol;
}

ElasticityTensor homogenized_C(const ElasticProblem& problem, const ElasticSolution& solution)
{
    const int d = problem.spec.dim;
    const auto one = tt::ones(problem.spec.qtt_dims());
    const double vol = std::pow(problem.spec.spacing(), d);
    const Lame mean{vol * tt::inner(one, problem.lambda), vol * tt::inner(one, problem.mu)};
    ElasticityTensor c = ElasticityTensor::isotropic(d, mean);
    std::vector<tt::TTOperator> diff;
    for (int i = 0; i < d; ++i)
        diff.push_back(fdm::central_diff_qtt(problem.spec, i));

    for (const auto& [k, l] : solution.pairs) {
        const tt::TTVector& xi = solution.field(k, l);
        std::vector<tt::TTVector> comp;
        for (int p = 0; p < d; ++p)
            comp.push_back(tt::fix_last_index(xi, std::size_t(p)));
        // grad[i][j] = <mu, D_j xi_i>; div = sum_p <lambda, D_p xi_p>
        Eigen::MatrixXd grad(d, d);
        double div = 0.0;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                const auto dxi = tt::apply_exact(diff[std::size_t(j)], comp[std::size_t(i)]);
                grad(i, j) = vol * tt::inner(problem.mu, dxi);
                if (i == j)
                    div += vol * tt::inner(problem.lambda, dxi);
            }
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                const double v = (i == j ? div : 0.0) + grad(i, j) + grad(j, i);
                c(i, j, k, l) -= v;
                if (k != l)
                    c(i, j, l, k) -= v;
            }
    }
    return c;
}

} // namespace tthom::homog

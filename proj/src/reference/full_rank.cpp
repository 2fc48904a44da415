#include "tthom/reference/full_rank.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "tthom/error.hpp"
#include "tthom/fdm/central_difference.hpp"
#include "tthom/simd/kernels.hpp"

namespace tthom::reference {

using linalg::SparseMatrix;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Eigen::Map<const Eigen::VectorXd> as_vec(std::span<const double> v)
{
    return {v.data(), Eigen::Index(v.size())};
}

void check_field(const fdm::LatticeSpec& spec, std::span<const double> v, const char* what)
{
    if (v.size() != spec.num_nodes())
        throw StructuralError(std::string(what) + ": field length does not match the lattice");
}

// D_a diag(w) D_b
SparseMatrix sandwich(const SparseMatrix& da, std::span<const double> w, const SparseMatrix& db)
{
    const SparseMatrix wd = as_vec(w).asDiagonal() * db;
    SparseMatrix out = da * wd;
    out.prune(0.0);
    return out;
}

void project_out(std::vector<double>& x, const std::vector<std::vector<double>>& basis)
{
    for (const auto& v : basis)
        simd::axpy(-simd::dot(v, x), v, x);
}

} // namespace

std::vector<std::vector<double>> parity_basis(const fdm::LatticeSpec& spec, int components)
{
    const std::size_t nodes = spec.num_nodes();
    const auto c = std::size_t(components);
    const double scale = 1.0 / std::sqrt(static_cast<double>(nodes));
    std::vector<std::vector<double>> basis;
    for (int comp = 0; comp < components; ++comp)
        for (unsigned mask = 0; mask < (1u << spec.dim); ++mask) {
            std::vector<double> v(nodes * c, 0.0);
            for (std::size_t g = 0; g < nodes; ++g) {
                const auto coords = spec.coords(g);
                int parity = 0;
                for (int a = 0; a < spec.dim; ++a)
                    if (mask & (1u << a))
                        parity += int(coords[std::size_t(a)] & 1);
                v[g * c + std::size_t(comp)] = (parity & 1) ? -scale : scale;
            }
            basis.push_back(std::move(v));
        }
    return basis;
}

std::vector<double> deflated_pcg(const linalg::CsrMatrix& a, std::span<const double> b,
                                 const std::vector<std::vector<double>>& nullspace, const PcgOptions& opt,
                                 solver::SolveReport& report)
{
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t n = a.rows();
    if (b.size() != n || a.cols() != n)
        throw StructuralError("deflated_pcg: dimension mismatch");
    const std::size_t max_iter = opt.max_iter ? opt.max_iter : 10 * n;
    std::vector<double> inv_diag = a.diagonal();
    for (double& d : inv_diag) {
        if (!(d > 0.0))
            throw SolverBreakdown("deflated_pcg: non-positive diagonal entry");
        d = 1.0 / d;
    }

    std::vector<double> r(b.begin(), b.end());
    project_out(r, nullspace);
    std::vector<double> x(n, 0.0), z(n), p(n), ap(n);
    const double bnorm = std::sqrt(simd::dot(r, r));
    report = {};
    if (bnorm == 0.0) {
        report.residual_history.push_back(0.0);
        report.converged = true;
        return x;
    }
    auto precondition = [&] {
        simd::hadamard(inv_diag, r, z);
        project_out(z, nullspace);
    };
    precondition();
    p = z;
    double rz = simd::dot(r, z);
    double res = 1.0;
    std::size_t it = 0;
    for (; it < max_iter; ++it) {
        a.multiply(p, ap);
        const double pap = simd::dot(p, ap);
        if (!std::isfinite(pap) || pap <= 0.0) {
            report.residual_history.push_back(res);
            throw SolverBreakdown("deflated_pcg: loss of positive definiteness at iteration " + std::to_string(it));
        }
        const double alpha = rz / pap;
        simd::axpy(alpha, p, x);
        simd::axpy(-alpha, ap, r);
        res = std::sqrt(simd::dot(r, r)) / bnorm;
        report.residual_history.push_back(res);
        if (res <= opt.rel_tol) {
            ++it;
            break;
        }
        precondition();
        const double rz_new = simd::dot(r, z);
        simd::xpby(z, rz_new / rz, p);
        rz = rz_new;
    }
    project_out(x, nullspace);
    report.sweeps = int(it);
    report.final_residual = res;
    report.converged = res <= opt.rel_tol;
    report.wall_seconds = seconds_since(t0);
    return x;
}

SparseMatrix thermal_operator_sparse(const fdm::LatticeSpec& spec, std::span<const double> kappa)
{
    check_field(spec, kappa, "thermal_operator_sparse");
    SparseMatrix a(Eigen::Index(spec.num_nodes()), Eigen::Index(spec.num_nodes()));
    for (int i = 0; i < spec.dim; ++i) {
        const SparseMatrix d = fdm::central_diff_dense(spec, i);
        a += sandwich(d, kappa, d);
    }
    return a;
}

std::vector<double> thermal_rhs_dense(const fdm::LatticeSpec& spec, std::span<const double> kappa, int axis)
{
    check_field(spec, kappa, "thermal_rhs_dense");
    const Eigen::VectorXd r = fdm::central_diff_dense(spec, axis) * as_vec(kappa);
    return {r.data(), r.data() + r.size()};
}

homog::ConductivityTensor kappa_from_fields(const fdm::LatticeSpec& spec, std::span<const double> kappa,
                                            const std::vector<std::vector<double>>& phi)
{
    const int d = spec.dim;
    const double vol = std::pow(spec.spacing(), d);
    const double mean = vol * as_vec(kappa).sum();
    homog::ConductivityTensor k(d, d);
    for (int i = 0; i < d; ++i) {
        const SparseMatrix di = fdm::central_diff_dense(spec, i);
        for (int j = 0; j < d; ++j) {
            const Eigen::VectorXd grad = di * as_vec(phi[std::size_t(j)]);
            k(i, j) = (i == j ? mean : 0.0) - vol * as_vec(kappa).dot(grad);
        }
    }
    return k;
}

bool FullThermalResult::converged() const
{
    return std::all_of(reports.begin(), reports.end(), [](const auto& r) { return r.converged; });
}

FullThermalResult solve_thermal_full(const fdm::LatticeSpec& spec, std::span<const double> kappa,
                                     const PcgOptions& opt)
{
    FullThermalResult out;
    auto t0 = std::chrono::steady_clock::now();
    // negated so that CG sees a positive semidefinite matrix
    const SparseMatrix neg = -thermal_operator_sparse(spec, kappa);
    const linalg::CsrMatrix a(neg);
    const auto basis = parity_basis(spec);
    out.assemble_seconds = seconds_since(t0);
    t0 = std::chrono::steady_clock::now();
    for (int j = 0; j < spec.dim; ++j) {
        auto rhs = thermal_rhs_dense(spec, kappa, j);
        for (double& v : rhs)
            v = -v;
        solver::SolveReport rep;
        out.phi.push_back(deflated_pcg(a, rhs, basis, opt, rep));
        out.reports.push_back(std::move(rep));
    }
    out.solve_seconds = seconds_since(t0);
    out.kappa = kappa_from_fields(spec, kappa, out.phi);
    return out;
}

FullThermalResult solve_thermal_full(const rve::VoxelGrid& grid, double kappa_a, double kappa_b,
                                     const PcgOptions& opt)
{
    if (!(kappa_a > 0.0) || !(kappa_b > 0.0))
        throw std::invalid_argument("solve_thermal_full: conductivities must be positive");
    const auto kappa = rve::material_values(grid, kappa_a, kappa_b);
    return solve_thermal_full(grid.spec, kappa, opt);
}

SparseMatrix elastic_operator_sparse(const fdm::LatticeSpec& spec, std::span<const double> lambda,
                                     std::span<const double> mu)
{
    check_field(spec, lambda, "elastic_operator_sparse");
    check_field(spec, mu, "elastic_operator_sparse");
    const int d = spec.dim;
    std::vector<SparseMatrix> diff;
    for (int i = 0; i < d; ++i)
        diff.push_back(fdm::central_diff_dense(spec, i));
    SparseMatrix shear(Eigen::Index(spec.num_nodes()), Eigen::Index(spec.num_nodes()));
    for (int i = 0; i < d; ++i)
        shear += sandwich(diff[std::size_t(i)], mu, diff[std::size_t(i)]);

    std::vector<Eigen::Triplet<double, std::int64_t>> trips;
    for (int j = 0; j < d; ++j)
        for (int jp = 0; jp < d; ++jp) {
            SparseMatrix block = sandwich(diff[std::size_t(j)], lambda, diff[std::size_t(jp)]) +
                                 sandwich(diff[std::size_t(jp)], mu, diff[std::size_t(j)]);
            if (j == jp)
                block += shear;
            for (Eigen::Index r = 0; r < block.outerSize(); ++r)
                for (SparseMatrix::InnerIterator it(block, r); it; ++it)
                    trips.emplace_back(it.row() * d + j, it.col() * d + jp, it.value());
        }
    const auto n = Eigen::Index(spec.num_nodes()) * d;
    SparseMatrix k(n, n);
    k.setFromTriplets(trips.begin(), trips.end());
    return k;
}

std::vector<double> elastic_rhs_dense(const fdm::LatticeSpec& spec, std::span<const double> lambda,
                                      std::span<const double> mu, int k, int l)
{
    const int d = spec.dim;
    spec.validate_axis(k);
    spec.validate_axis(l);
    std::vector<double> out(spec.num_nodes() * std::size_t(d), 0.0);
    for (int j = 0; j < d; ++j) {
        Eigen::VectorXd f = Eigen::VectorXd::Zero(Eigen::Index(spec.num_nodes()));
        if (k == l)
            f += fdm::central_diff_dense(spec, j) * as_vec(lambda);
        if (j == l)
            f += fdm::central_diff_dense(spec, k) * as_vec(mu);
        if (j == k)
            f += fdm::central_diff_dense(spec, l) * as_vec(mu);
        for (Eigen::Index g = 0; g < f.size(); ++g)
            out[std::size_t(g) * std::size_t(d) + std::size_t(j)] = f(g);
    }
    return out;
}

homog::ElasticityTensor C_from_fields(const fdm::LatticeSpec& spec, std::span<const double> lambda,
                                      std::span<const double> mu, const std::vector<std::vector<double>>& xi)
{
    const int d = spec.dim;
    const double vol = std::pow(spec.spacing(), d);
    homog::ElasticityTensor c =
        homog::ElasticityTensor::isotropic(d, {vol * as_vec(lambda).sum(), vol * as_vec(mu).sum()});
    std::vector<SparseMatrix> diff;
    for (int i = 0; i < d; ++i)
        diff.push_back(fdm::central_diff_dense(spec, i));
    const auto nodes = Eigen::Index(spec.num_nodes());
    std::size_t pair = 0;
    for (int k = 0; k < d; ++k)
        for (int l = k; l < d; ++l, ++pair) {
            const auto& field = xi.at(pair);
            // component p sits at stride d in the interleaved layout
            std::vector<Eigen::VectorXd> comp(static_cast<std::size_t>(d), Eigen::VectorXd(nodes));
            for (Eigen::Index g = 0; g < nodes; ++g)
                for (int p = 0; p < d; ++p)
                    comp[std::size_t(p)](g) = field[std::size_t(g) * std::size_t(d) + std::size_t(p)];
            Eigen::MatrixXd grad(d, d);
            double div = 0.0;
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) {
                    const Eigen::VectorXd dxi = diff[std::size_t(j)] * comp[std::size_t(i)];
                    grad(i, j) = vol * as_vec(mu).dot(dxi);
                    if (i == j)
                        div += vol * as_vec(lambda).dot(dxi);
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

bool FullElasticResult::converged() const
{
    return std::all_of(reports.begin(), reports.end(), [](const auto& r) { return r.converged; });
}

FullElasticResult solve_elastic_full(const fdm::LatticeSpec& spec, std::span<const double> lambda,
                                     std::span<const double> mu, const PcgOptions& opt)
{
    const int d = spec.dim;
    FullElasticResult out;
    auto t0 = std::chrono::steady_clock::now();
    const SparseMatrix neg = -elastic_operator_sparse(spec, lambda, mu);
    const linalg::CsrMatrix a(neg);
    const auto basis = parity_basis(spec, d);
    out.assemble_seconds = seconds_since(t0);
    t0 = std::chrono::steady_clock::now();
    for (int k = 0; k < d; ++k)
        for (int l = k; l < d; ++l) {
            auto rhs = elastic_rhs_dense(spec, lambda, mu, k, l);
            for (double& v : rhs)
                v = -v;
            solver::SolveReport rep;
            out.pairs.emplace_back(k, l);
            out.xi.push_back(deflated_pcg(a, rhs, basis, opt, rep));
            out.reports.push_back(std::move(rep));
        }
    out.solve_seconds = seconds_since(t0);
    out.C = C_from_fields(spec, lambda, mu, out.xi);
    return out;
}

FullElasticResult solve_elastic_full(const rve::VoxelGrid& grid, homog::Lame phase_a, homog::Lame phase_b,
                                     const PcgOptions& opt)
{
    const auto lambda = rve::material_values(grid, phase_a.lambda, phase_b.lambda);
    const auto mu = rve::material_values(grid, phase_a.mu, phase_b.mu);
    return solve_elastic_full(grid.spec, lambda, mu, opt);
}

} // namespace tthom::reference

#include "tthom/solver/mals.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <string>

#include <Eigen/Cholesky>

#include "tthom/error.hpp"
#include "tthom/simd/kernels.hpp"
#include "tthom/tt/orthogonalize.hpp"

namespace tthom::solver {

using tt::Core;
using tt::Matrix;

namespace {

// Past this many entries the TT route wins: its cost grows with the number
// of cores, the dense one with the number of entries.
constexpr std::size_t kDenseResidualLimit = std::size_t{1} << 12;
constexpr int kRefinementSteps = 3;

// Operator environment E[a, alpha, b]: a indexes the output-side bond of x,
// alpha the operator bond, b the input-side bond of x.
struct OpEnv {
    std::size_t rx = 1, ra = 1;
    std::vector<double> v{1.0};

    double& at(std::size_t a, std::size_t al, std::size_t b) { return v[(a * ra + al) * rx + b]; }
    double at(std::size_t a, std::size_t al, std::size_t b) const { return v[(a * ra + al) * rx + b]; }
};

bool all_finite(std::span<const double> v)
{
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// Environment of cores [0, k] from that of [0, k).
OpEnv extend_left(const OpEnv& env, const Core& x, const tt::TTOperator& a, std::size_t k)
{
    const Core& ac = a.core(k);
    const std::size_t rl = x.left(), p = x.phys(), rr = x.right();
    const std::size_t al = ac.left(), ar = ac.right(), pin = a.in(k);
    // T1[a, alpha, i, b'] = sum_b env[a, alpha, b] x[b, i, b']
    const tt::ConstMatrixMap emat(env.v.data(), Eigen::Index(rl * al), Eigen::Index(rl));
    const Matrix t1 = emat * x.right_unfolding();
    // T2[a, o, alpha', b'] = sum_{alpha, i} T1[a, alpha, i, b'] A[alpha, o, i, alpha']
    Matrix t2 = Matrix::Zero(Eigen::Index(rl * p), Eigen::Index(ar * rr));
    for (std::size_t ia = 0; ia < rl; ++ia)
        for (std::size_t alpha = 0; alpha < al; ++alpha)
            for (std::size_t i = 0; i < pin; ++i) {
                const double* trow = t1.data() + ((ia * al + alpha) * pin + i) * rr;
                for (std::size_t o = 0; o < p; ++o)
                    for (std::size_t beta = 0; beta < ar; ++beta) {
                        const double w = ac(alpha, o * pin + i, beta);
                        if (w == 0.0)
                            continue;
                        double* out = t2.data() + ((ia * p + o) * ar + beta) * rr;
                        for (std::size_t b = 0; b < rr; ++b)
                            out[b] += w * trow[b];
                    }
            }
    OpEnv next;
    next.rx = rr;
    next.ra = ar;
    next.v.resize(rr * ar * rr);
    tt::MatrixMap(next.v.data(), Eigen::Index(rr), Eigen::Index(ar * rr)).noalias() =
        x.left_unfolding().transpose() * t2;
    return next;
}

// Environment of cores [k, m) from that of (k, m).
OpEnv extend_right(const OpEnv& env, const Core& x, const tt::TTOperator& a, std::size_t k)
{
    const Core& ac = a.core(k);
    const std::size_t rl = x.left(), p = x.phys(), rr = x.right();
    const std::size_t al = ac.left(), ar = ac.right(), pin = a.in(k);
    // T1[b, i, a', alpha'] = sum_b' x[b, i, b'] env[a', alpha', b']
    const tt::ConstMatrixMap emat(env.v.data(), Eigen::Index(rr * ar), Eigen::Index(rr));
    const Matrix t1 = x.left_unfolding() * emat.transpose();
    // T2[(o, a'), (alpha, b)] = sum_{i, alpha'} T1[b, i, a', alpha'] A[alpha, o, i, alpha']
    Matrix t2 = Matrix::Zero(Eigen::Index(p * rr), Eigen::Index(al * rl));
    for (std::size_t b = 0; b < rl; ++b)
        for (std::size_t i = 0; i < pin; ++i)
            for (std::size_t ap = 0; ap < rr; ++ap) {
                const double* trow = t1.data() + ((b * pin + i) * rr + ap) * ar;
                for (std::size_t alpha = 0; alpha < al; ++alpha)
                    for (std::size_t o = 0; o < p; ++o) {
                        const double* acore = ac.values().data() + (alpha * ac.phys() + o * pin + i) * ar;
                        double s = 0.0;
                        for (std::size_t beta = 0; beta < ar; ++beta)
                            s += acore[beta] * trow[beta];
                        t2(Eigen::Index(o * rr + ap), Eigen::Index(alpha * rl + b)) += s;
                    }
            }
    OpEnv next;
    next.rx = rl;
    next.ra = al;
    next.v.resize(rl * al * rl);
    tt::MatrixMap(next.v.data(), Eigen::Index(rl), Eigen::Index(al * rl)).noalias() = x.right_unfolding() * t2;
    return next;
}

// Vector environments: Lb[a, beta] and Rb[a, beta].
Matrix extend_left_rhs(const Matrix& env, const Core& x, const Core& bc)
{
    const Matrix t = env * bc.right_unfolding(); // rl x (p * rb')
    const tt::ConstMatrixMap tm(t.data(), Eigen::Index(x.left() * x.phys()), Eigen::Index(bc.right()));
    return x.left_unfolding().transpose() * tm;
}

Matrix extend_right_rhs(const Matrix& env, const Core& x, const Core& bc)
{
    const Matrix t = bc.left_unfolding() * env.transpose(); // (rb * p) x rr
    const tt::ConstMatrixMap tm(t.data(), Eigen::Index(bc.left()), Eigen::Index(x.phys() * x.right()));
    return x.right_unfolding() * tm.transpose();
}

// Projected two-site operator sum_g WL[g] (x) WR[g].
struct LocalOperator {
    std::vector<Matrix> wl, wr;
    Eigen::Index rows_l = 0, rows_r = 0;

    Eigen::Index size() const { return rows_l * rows_r; }

    Eigen::VectorXd diagonal() const
    {
        Eigen::VectorXd d = Eigen::VectorXd::Zero(size());
        for (std::size_t g = 0; g < wl.size(); ++g)
            for (Eigen::Index i = 0; i < rows_l; ++i) {
                const double l = wl[g](i, i);
                if (l != 0.0)
                    d.segment(i * rows_r, rows_r) += l * wr[g].diagonal();
            }
        return d;
    }

    Matrix dense() const
    {
        Matrix m = Matrix::Zero(size(), size());
        for (std::size_t g = 0; g < wl.size(); ++g)
            for (Eigen::Index i = 0; i < rows_l; ++i)
                for (Eigen::Index j = 0; j < rows_l; ++j) {
                    const double l = wl[g](i, j);
                    if (l != 0.0)
                        m.block(i * rows_r, j * rows_r, rows_r, rows_r) += l * wr[g];
                }
        return m;
    }

    void apply(const Matrix& x, Matrix& y) const
    {
        y.setZero(rows_l, rows_r);
        for (std::size_t g = 0; g < wl.size(); ++g)
            y.noalias() += wl[g] * (x * wr[g].transpose());
    }
};

LocalOperator build_local(const OpEnv& left, const OpEnv& right, const tt::TTOperator& a, std::size_t k)
{
    const Core& a0 = a.core(k);
    const Core& a1 = a.core(k + 1);
    const std::size_t rl = left.rx, rr = right.rx;
    const std::size_t p1 = a.out(k), q1 = a.in(k), p2 = a.out(k + 1), q2 = a.in(k + 1);
    const std::size_t mid = a0.right();
    LocalOperator op;
    op.rows_l = Eigen::Index(rl * p1);
    op.rows_r = Eigen::Index(p2 * rr);
    op.wl.assign(mid, Matrix::Zero(op.rows_l, op.rows_l));
    op.wr.assign(mid, Matrix::Zero(op.rows_r, op.rows_r));
    for (std::size_t g = 0; g < mid; ++g) {
        Matrix& wl = op.wl[g];
        for (std::size_t alpha = 0; alpha < a0.left(); ++alpha)
            for (std::size_t i = 0; i < p1; ++i)
                for (std::size_t j = 0; j < q1; ++j) {
                    const double w = a0(alpha, i * q1 + j, g);
                    if (w == 0.0)
                        continue;
                    for (std::size_t x = 0; x < rl; ++x)
                        for (std::size_t y = 0; y < rl; ++y)
                            wl(Eigen::Index(x * p1 + i), Eigen::Index(y * q1 + j)) += w * left.at(x, alpha, y);
                }
        Matrix& wr = op.wr[g];
        for (std::size_t beta = 0; beta < a1.right(); ++beta)
            for (std::size_t i = 0; i < p2; ++i)
                for (std::size_t j = 0; j < q2; ++j) {
                    const double w = a1(g, i * q2 + j, beta);
                    if (w == 0.0)
                        continue;
                    for (std::size_t x = 0; x < rr; ++x)
                        for (std::size_t y = 0; y < rr; ++y)
                            wr(Eigen::Index(i * rr + x), Eigen::Index(j * rr + y)) += w * right.at(x, beta, y);
                }
    }
    return op;
}

Matrix build_local_rhs(const Matrix& lb, const Matrix& rb, const Core& b0, const Core& b1)
{
    const Matrix g1 = lb * b0.right_unfolding(); // rl x (p1 * rb1)
    const tt::ConstMatrixMap g1m(g1.data(), Eigen::Index(lb.rows() * b0.phys()), Eigen::Index(b0.right()));
    const Matrix g2 = b1.left_unfolding() * rb.transpose(); // (rb1 * p2) x rr
    const tt::ConstMatrixMap g2m(g2.data(), Eigen::Index(b1.left()), Eigen::Index(b1.phys() * rb.rows()));
    return g1m * g2m;
}

// Jacobi-preconditioned CG on (M + shift I) y = f, warm-started from y.
void local_cg(const LocalOperator& op, double shift, const Matrix& f, Matrix& y, double tol)
{
    const Eigen::VectorXd diag = op.diagonal().array() + shift;
    const auto n = op.size();
    auto vec = [n](Matrix& m) { return Eigen::Map<Eigen::VectorXd>(m.data(), n); };
    auto cvec = [n](const Matrix& m) { return Eigen::Map<const Eigen::VectorXd>(m.data(), n); };
    Matrix ay;
    op.apply(y, ay);
    Matrix r = f - ay - shift * y;
    const double fnorm = cvec(f).norm();
    if (fnorm == 0.0) {
        y.setZero();
        return;
    }
    Matrix z(r.rows(), r.cols());
    vec(z) = cvec(r).cwiseQuotient(diag);
    Matrix p = z, ap;
    double rz = cvec(r).dot(cvec(z));
    const Eigen::Index max_iter = std::max<Eigen::Index>(2 * n, 50);
    for (Eigen::Index it = 0; it < max_iter && cvec(r).norm() > tol * fnorm; ++it) {
        op.apply(p, ap);
        ap += shift * p;
        const double pap = cvec(p).dot(cvec(ap));
        if (!(pap > 0.0))
            break;
        const double alpha = rz / pap;
        y += alpha * p;
        r -= alpha * ap;
        vec(z) = cvec(r).cwiseQuotient(diag);
        const double rz_new = cvec(r).dot(cvec(z));
        p = z + (rz_new / rz) * p;
        rz = rz_new;
    }
}

} // namespace

void MALSConfig::validate() const
{
    if (max_sweeps < 1)
        throw std::invalid_argument("MALSConfig: max_sweeps must be positive");
    if (!(rel_residual_tol > 0.0) || !(local_solver_tol > 0.0))
        throw std::invalid_argument("MALSConfig: tolerances must be positive");
    if (!(regularization >= 0.0))
        throw std::invalid_argument("MALSConfig: regularization must be nonnegative");
    if (stall_sweeps < 0 || !(stall_ratio > 0.0 && stall_ratio <= 1.0))
        throw std::invalid_argument("MALSConfig: invalid stall criterion");
    policy.validate();
}

tt::TTVector default_initial_guess(std::span<const std::size_t> dims, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, 1.0);
    std::vector<Core> cores;
    double mean = 1.0;
    for (std::size_t p : dims) {
        Core c(1, p, 1);
        double s = 0.0;
        for (auto& v : c.values()) {
            v = dist(rng);
            s += v;
        }
        mean *= s / static_cast<double>(p);
        cores.push_back(std::move(c));
    }
    const tt::TTVector r(std::move(cores));
    return tt::add(1.0, r, -mean, tt::ones(dims));
}

Diagnostics diagnose(const tt::TTOperator& a, const tt::TTVector& x, const tt::TTVector& b)
{
    if (x.dense_size() <= std::min(kDenseResidualLimit, tt::dense_cap())) {
        const auto xd = tt::to_dense(x);
        auto ax = tt::apply_to_dense(a, xd);
        const auto bd = tt::to_dense(b);
        const double energy = 0.5 * simd::dot(xd, ax) - simd::dot(bd, xd);
        simd::axpy(-1.0, bd, ax);
        return {std::sqrt(simd::dot(ax, ax)), energy};
    }
    const tt::TTVector ax = tt::apply_exact(a, x);
    return {tt::norm(tt::add(1.0, ax, -1.0, b)), 0.5 * tt::inner(x, ax) - tt::inner(b, x)};
}

double residual_norm(const tt::TTOperator& a, const tt::TTVector& x, const tt::TTVector& b)
{
    return diagnose(a, x, b).residual;
}

MALSResult mals_solve(const tt::TTOperator& a, const tt::TTVector& b, const std::optional<tt::TTVector>& x0,
                      const MALSConfig& cfg)
{
    cfg.validate();
    const auto start = std::chrono::steady_clock::now();
    const std::size_t m = b.num_cores();
    const auto dims = b.phys_dims();
    if (a.num_cores() != m || a.out_dims() != dims || a.in_dims() != dims)
        throw StructuralError("mals_solve: operator must be square on the right-hand side's index space");
    if (x0 && x0->phys_dims() != dims)
        throw StructuralError("mals_solve: initial guess does not match the right-hand side");

    MALSResult result;
    SolveReport& rep = result.report;
    auto finish = [&] {
        rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };

    const double bnorm = tt::norm(b);
    if (bnorm == 0.0) {
        result.x = tt::constant_vector(dims, 0.0);
        rep.residual_history.push_back(0.0);
        rep.converged = true;
        finish();
        return result;
    }

    std::vector<Core> x = (x0 ? *x0 : default_initial_guess(dims, cfg.seed)).cores();
    if (m == 1) {
        // a single core is its own local system
        Matrix dense = tt::to_dense(a);
        const auto bd = tt::to_dense(b);
        const double shift = cfg.regularization * dense.diagonal().cwiseAbs().maxCoeff();
        dense.diagonal().array() += shift;
        const Eigen::VectorXd sol = dense.ldlt().solve(Eigen::Map<const Eigen::VectorXd>(bd.data(), Eigen::Index(bd.size())));
        x = {Core(1, dims[0], 1, std::vector<double>(sol.data(), sol.data() + sol.size()))};
        result.x = tt::TTVector(x, 0);
        rep.final_residual = residual_norm(a, result.x, b) / bnorm;
        rep.residual_history.push_back(rep.final_residual);
        rep.converged = rep.final_residual <= cfg.rel_residual_tol;
        rep.sweeps = 1;
        finish();
        return result;
    }

    tt::right_orthogonalize(x, 0);
    std::vector<OpEnv> lenv(m + 1), renv(m + 1);
    std::vector<Matrix> lb(m + 1), rb(m + 1);
    lb[0] = Matrix::Ones(1, 1);
    rb[m] = Matrix::Ones(1, 1);
    for (std::size_t k = m; k-- > 2;) {
        renv[k] = extend_right(renv[k + 1], x[k], a, k);
        rb[k] = extend_right_rhs(rb[k + 1], x[k], b.core(k));
    }

    auto local_step = [&](std::size_t k, bool forward) {
        const LocalOperator op = build_local(lenv[k], renv[k + 2], a, k);
        const Matrix f = build_local_rhs(lb[k], rb[k + 2], b.core(k), b.core(k + 1));
        Matrix y = tt::merge_pair(x[k], x[k + 1]);
        const auto n = static_cast<std::size_t>(op.size());
        rep.largest_local_system = std::max(rep.largest_local_system, n);
        const Eigen::VectorXd diag = op.diagonal();
        const double shift = cfg.regularization * diag.cwiseAbs().maxCoeff();
        if (n <= cfg.dense_local_limit) {
            Matrix dense = op.dense();
            dense.diagonal().array() += shift;
            const Eigen::LDLT<Eigen::MatrixXd> ldlt{Eigen::MatrixXd(dense)};
            const Eigen::Map<const Eigen::VectorXd> fv(f.data(), Eigen::Index(n));
            Eigen::VectorXd sol = ldlt.solve(fv);
            // Refinement against the unshifted operator removes the bias of
            // the shift on the range; a compatible right-hand side keeps the
            // nullspace component from growing.
            for (int it = 0; it < kRefinementSteps && shift > 0.0; ++it) {
                Eigen::VectorXd r = fv - dense * sol + shift * sol;
                sol += ldlt.solve(r);
            }
            Eigen::Map<Eigen::VectorXd>(y.data(), Eigen::Index(n)) = sol;
        } else {
            local_cg(op, shift, f, y, cfg.local_solver_tol);
            for (int it = 0; it < kRefinementSteps && shift > 0.0; ++it) {
                Matrix r;
                op.apply(y, r);
                r = f - r;
                Matrix dy = Matrix::Zero(y.rows(), y.cols());
                local_cg(op, shift, r, dy, cfg.local_solver_tol);
                y += dy;
            }
        }
        if (!all_finite(std::span<const double>(y.data(), n)))
            throw SolverBreakdown("mals_solve: non-finite local solution at bond " + std::to_string(k));

        const double budget = cfg.policy.rel_eps * y.norm();
        tt::Split s = tt::svd_split(y, budget, cfg.policy.max_rank, forward);
        x[k] = Core::from_left_unfolding(s.left, x[k].phys());
        x[k + 1] = Core::from_right_unfolding(s.right, x[k + 1].phys());
        if (forward) {
            lenv[k + 1] = extend_left(lenv[k], x[k], a, k);
            lb[k + 1] = extend_left_rhs(lb[k], x[k], b.core(k));
        } else {
            renv[k + 1] = extend_right(renv[k + 2], x[k + 1], a, k + 1);
            rb[k + 1] = extend_right_rhs(rb[k + 2], x[k + 1], b.core(k + 1));
        }
    };

    double best = INFINITY;
    double best_energy = INFINITY;
    double selected_residual = INFINITY;
    tt::TTVector selected;
    int half_sweeps = 0;
    std::vector<double> best_after_sweep;
    for (int sweep = 0; sweep < cfg.max_sweeps && !rep.converged && !rep.stalled; ++sweep) {
        for (int dir = 0; dir < 2 && !rep.converged; ++dir) {
            const bool forward = dir == 0;
            if (forward)
                for (std::size_t k = 0; k + 1 < m; ++k)
                    local_step(k, true);
            else
                for (std::size_t k = m - 1; k-- > 0;)
                    local_step(k, false);
            ++half_sweeps;
            tt::TTVector current(x, forward ? m - 1 : 0);
            const Diagnostics diag = diagnose(a, current, b);
            const double res = diag.residual / bnorm;
            rep.residual_history.push_back(res);
            rep.energy_history.push_back(diag.energy);
            rep.rank_profiles.push_back(current.ranks());
            best = std::min(best, res);
            rep.converged = res <= cfg.rel_residual_tol;
            if (rep.converged || diag.energy < best_energy) {
                best_energy = diag.energy;
                selected_residual = res;
                selected = std::move(current);
            }
        }
        best_after_sweep.push_back(best);
        const auto s = static_cast<std::size_t>(cfg.stall_sweeps);
        if (cfg.stall_sweeps > 0 && best_after_sweep.size() > s &&
            best > cfg.stall_ratio * best_after_sweep[best_after_sweep.size() - 1 - s])
            rep.stalled = true;
    }
    rep.sweeps = (half_sweeps + 1) / 2;
    rep.final_residual = selected_residual;
    result.x = std::move(selected);
    finish();
    return result;
}

} // namespace tthom::solver

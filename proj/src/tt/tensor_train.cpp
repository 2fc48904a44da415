#include "tthom/tt/tensor_train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <string>

#include "tthom/tt/orthogonalize.hpp"

namespace tthom::tt {

namespace {

std::size_t saturating_product(std::span<const std::size_t> dims)
{
    std::size_t total = 1;
    for (std::size_t d : dims) {
        if (d != 0 && total > std::numeric_limits<std::size_t>::max() / d)
            return std::numeric_limits<std::size_t>::max();
        total *= d;
    }
    return total;
}

void validate_chain(const std::vector<Core>& cores)
{
    if (cores.empty())
        throw StructuralError("tensor train needs at least one core");
    if (cores.front().left() != 1 || cores.back().right() != 1)
        throw StructuralError("tensor train boundary ranks must be 1");
    for (std::size_t k = 0; k < cores.size(); ++k) {
        if (cores[k].phys() == 0 || cores[k].left() == 0 || cores[k].right() == 0)
            throw StructuralError("tensor train core " + std::to_string(k) + " has an empty mode");
        if (k + 1 < cores.size() && cores[k].right() != cores[k + 1].left())
            throw StructuralError("tensor train rank mismatch at bond " + std::to_string(k));
    }
}

std::vector<std::size_t> chain_ranks(const std::vector<Core>& cores)
{
    std::vector<std::size_t> r;
    for (std::size_t k = 0; k + 1 < cores.size(); ++k)
        r.push_back(cores[k].right());
    return r;
}

std::vector<double> chain_to_dense(const std::vector<Core>& cores, std::size_t cap)
{
    std::vector<std::size_t> dims;
    for (const auto& c : cores)
        dims.push_back(c.phys());
    const std::size_t total = saturating_product(dims);
    if (total > cap)
        throw SizeCapError("to_dense: " + std::to_string(total) + " elements exceed the cap of " +
                           std::to_string(cap));
    // acc: (prefix) x rank
    Matrix acc = Matrix::Ones(1, 1);
    for (const auto& c : cores) {
        const Matrix next = acc * c.right_unfolding(); // prefix x (phys*right)
        acc = ConstMatrixMap(next.data(), next.rows() * Eigen::Index(c.phys()), Eigen::Index(c.right()));
    }
    return {acc.data(), acc.data() + acc.size()};
}

std::vector<Core> chain_from_dense(std::span<const double> values, std::span<const std::size_t> dims,
                                   const TruncationPolicy& policy, double& error)
{
    policy.validate();
    if (dims.empty())
        throw StructuralError("from_dense: no modes given");
    if (std::any_of(dims.begin(), dims.end(), [](std::size_t d) { return d == 0; }))
        throw StructuralError("from_dense: every mode needs dimension >= 1");
    if (saturating_product(dims) != values.size())
        throw StructuralError("from_dense: dense size does not match the requested core layout");

    const std::size_t m = dims.size();
    std::vector<Core> cores;
    cores.reserve(m);
    double total_sq = 0.0;
    for (double v : values)
        total_sq += v * v;
    const double bond_budget =
        m > 1 ? policy.rel_eps * std::sqrt(total_sq) / std::sqrt(static_cast<double>(m - 1)) : 0.0;

    Matrix rest = ConstMatrixMap(values.data(), 1, Eigen::Index(values.size()));
    double discarded_sq = 0.0;
    std::size_t r = 1;
    for (std::size_t k = 0; k + 1 < m; ++k) {
        const auto rows = Eigen::Index(r * dims[k]);
        const Matrix unfolded = ConstMatrixMap(rest.data(), rows, rest.size() / rows);
        Split s = svd_split(unfolded, bond_budget, policy.max_rank, true);
        discarded_sq += s.discarded_sq;
        cores.push_back(Core::from_left_unfolding(s.left, dims[k]));
        rest = std::move(s.right);
        r = s.rank;
    }
    cores.push_back(Core(r, dims[m - 1], 1, std::vector<double>(rest.data(), rest.data() + rest.size())));
    error = std::sqrt(discarded_sq);
    return cores;
}

std::vector<Core> chain_add(double a, const std::vector<Core>& x, double b, const std::vector<Core>& y)
{
    if (x.size() != y.size())
        throw StructuralError("add: core counts differ");
    const std::size_t m = x.size();
    std::vector<Core> out;
    out.reserve(m);
    for (std::size_t k = 0; k < m; ++k) {
        const Core& cx = x[k];
        const Core& cy = y[k];
        if (cx.phys() != cy.phys())
            throw StructuralError("add: physical dimensions differ at core " + std::to_string(k));
        const bool first = k == 0;
        const bool last = k + 1 == m;
        const std::size_t l = first ? 1 : cx.left() + cy.left();
        const std::size_t r = last ? 1 : cx.right() + cy.right();
        Core c(l, cx.phys(), r);
        const double sx = first ? a : 1.0;
        const double sy = first ? b : 1.0;
        const std::size_t ly0 = first ? 0 : cx.left();
        const std::size_t ry0 = last ? 0 : cx.right();
        for (std::size_t p = 0; p < cx.phys(); ++p) {
            for (std::size_t i = 0; i < cx.left(); ++i)
                for (std::size_t j = 0; j < cx.right(); ++j)
                    c(i, p, j) += sx * cx(i, p, j);
            for (std::size_t i = 0; i < cy.left(); ++i)
                for (std::size_t j = 0; j < cy.right(); ++j)
                    c(ly0 + i, p, ry0 + j) += sy * cy(i, p, j);
        }
        out.push_back(std::move(c));
    }
    return out;
}

Matrix chain_env_step(const Matrix& env, const Core& cx, const Core& cy)
{
    // env: rx x ry  ->  sum_p cx_p^T env cy_p
    Matrix next = Matrix::Zero(Eigen::Index(cx.right()), Eigen::Index(cy.right()));
    const ConstMatrixMap xr = cx.right_unfolding();
    const ConstMatrixMap yr = cy.right_unfolding();
    const Matrix t = env * yr; // rx x (p*ry')
    for (std::size_t p = 0; p < cx.phys(); ++p) {
        const auto xs = xr.middleCols(Eigen::Index(p * cx.right()), Eigen::Index(cx.right()));
        const auto ts = t.middleCols(Eigen::Index(p * cy.right()), Eigen::Index(cy.right()));
        next.noalias() += xs.transpose() * ts;
    }
    return next;
}

double chain_inner(const std::vector<Core>& x, const std::vector<Core>& y)
{
    if (x.size() != y.size())
        throw StructuralError("inner: core counts differ");
    Matrix env = Matrix::Ones(1, 1);
    for (std::size_t k = 0; k < x.size(); ++k) {
        if (x[k].phys() != y[k].phys())
            throw StructuralError("inner: physical dimensions differ at core " + std::to_string(k));
        env = chain_env_step(env, x[k], y[k]);
    }
    return env(0, 0);
}

// Position of fused operator index (rows, cols) in the chain's C-order layout.
std::vector<std::size_t> operator_chain_dims(std::span<const std::size_t> out, std::span<const std::size_t> in)
{
    std::vector<std::size_t> dims(out.size());
    for (std::size_t k = 0; k < out.size(); ++k)
        dims[k] = out[k] * in[k];
    return dims;
}

template <class F>
void for_each_operator_entry(std::span<const std::size_t> out, std::span<const std::size_t> in, F&& f)
{
    const std::size_t m = out.size();
    const std::size_t rows = saturating_product(out);
    const std::size_t cols = saturating_product(in);
    std::vector<std::size_t> od(m), id(m);
    for (std::size_t r = 0; r < rows; ++r) {
        std::size_t rem = r;
        for (std::size_t k = m; k-- > 0;) {
            od[k] = rem % out[k];
            rem /= out[k];
        }
        for (std::size_t c = 0; c < cols; ++c) {
            std::size_t crem = c;
            for (std::size_t k = m; k-- > 0;) {
                id[k] = crem % in[k];
                crem /= in[k];
            }
            std::size_t flat = 0;
            for (std::size_t k = 0; k < m; ++k)
                flat = flat * (out[k] * in[k]) + od[k] * in[k] + id[k];
            f(r, c, flat);
        }
    }
}

} // namespace

// --- TruncationPolicy / Core -------------------------------------------------

void TruncationPolicy::validate() const
{
    if (!(rel_eps >= 0.0) || !std::isfinite(rel_eps))
        throw std::invalid_argument("truncation threshold must be a finite value >= 0");
    if (max_rank < 1)
        throw std::invalid_argument("maximum rank must be >= 1");
}

Core::Core(std::size_t left, std::size_t phys, std::size_t right)
    : left_(left), phys_(phys), right_(right), data_(left * phys * right, 0.0)
{
}

Core::Core(std::size_t left, std::size_t phys, std::size_t right, std::vector<double> values)
    : left_(left), phys_(phys), right_(right), data_(std::move(values))
{
    if (data_.size() != left * phys * right)
        throw StructuralError("core value count does not match its shape");
}

Core Core::from_left_unfolding(const Matrix& m, std::size_t phys)
{
    const auto rows = static_cast<std::size_t>(m.rows());
    if (phys == 0 || rows % phys != 0)
        throw StructuralError("left unfolding rows not divisible by the physical dimension");
    return Core(rows / phys, phys, static_cast<std::size_t>(m.cols()),
                std::vector<double>(m.data(), m.data() + m.size()));
}

Core Core::from_right_unfolding(const Matrix& m, std::size_t phys)
{
    const auto cols = static_cast<std::size_t>(m.cols());
    if (phys == 0 || cols % phys != 0)
        throw StructuralError("right unfolding columns not divisible by the physical dimension");
    return Core(static_cast<std::size_t>(m.rows()), phys, cols / phys,
                std::vector<double>(m.data(), m.data() + m.size()));
}

// --- TTVector / TTOperator ------------------------------------------------------

TTVector::TTVector(std::vector<Core> cores, std::optional<std::size_t> ortho_center)
    : cores_(std::move(cores)), center_(ortho_center)
{
    validate_chain(cores_);
    if (center_ && *center_ >= cores_.size())
        throw StructuralError("orthogonality center out of range");
}

std::vector<std::size_t> TTVector::phys_dims() const
{
    std::vector<std::size_t> d;
    for (const auto& c : cores_)
        d.push_back(c.phys());
    return d;
}

std::vector<std::size_t> TTVector::ranks() const { return chain_ranks(cores_); }

std::size_t TTVector::max_rank() const
{
    const auto r = ranks();
    return r.empty() ? 1 : *std::max_element(r.begin(), r.end());
}

std::size_t TTVector::dense_size() const
{
    const auto d = phys_dims();
    return saturating_product(d);
}

TTOperator::TTOperator(std::vector<Core> cores, std::vector<std::size_t> out_dims, std::vector<std::size_t> in_dims)
    : cores_(std::move(cores)), out_(std::move(out_dims)), in_(std::move(in_dims))
{
    validate_chain(cores_);
    if (out_.size() != cores_.size() || in_.size() != cores_.size())
        throw StructuralError("operator dimension lists do not match the core count");
    for (std::size_t k = 0; k < cores_.size(); ++k)
        if (cores_[k].phys() != out_[k] * in_[k])
            throw StructuralError("operator core " + std::to_string(k) + " does not match out x in dims");
}

std::vector<std::size_t> TTOperator::ranks() const { return chain_ranks(cores_); }

std::size_t TTOperator::max_rank() const
{
    const auto r = ranks();
    return r.empty() ? 1 : *std::max_element(r.begin(), r.end());
}

std::size_t TTOperator::rows() const { return saturating_product(out_); }
std::size_t TTOperator::cols() const { return saturating_product(in_); }

// --- construction ---------------------------------------------------------

std::size_t dense_cap()
{
    if (const char* env = std::getenv("TTHOM_DENSE_CAP")) {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (end != env && v > 0)
            return static_cast<std::size_t>(v);
    }
    return std::size_t{1} << 24;
}

TTVector constant_vector(std::span<const std::size_t> dims, double value)
{
    std::vector<Core> cores;
    for (std::size_t k = 0; k < dims.size(); ++k) {
        Core c(1, dims[k], 1);
        for (std::size_t p = 0; p < dims[k]; ++p)
            c(0, p, 0) = k == 0 ? value : 1.0;
        cores.push_back(std::move(c));
    }
    return TTVector(std::move(cores));
}

TTVector ones(std::span<const std::size_t> dims) { return constant_vector(dims, 1.0); }

TTOperator identity_operator(std::span<const std::size_t> dims)
{
    std::vector<Core> cores;
    std::vector<std::size_t> d(dims.begin(), dims.end());
    for (std::size_t n : d) {
        Core c(1, n * n, 1);
        for (std::size_t p = 0; p < n; ++p)
            c(0, p * n + p, 0) = 1.0;
        cores.push_back(std::move(c));
    }
    return TTOperator(std::move(cores), d, d);
}

Rounded<TTVector> vector_from_dense(std::span<const double> values, std::span<const std::size_t> dims,
                                    const TruncationPolicy& policy)
{
    double err = 0.0;
    auto cores = chain_from_dense(values, dims, policy, err);
    const std::size_t center = cores.size() - 1;
    return {TTVector(std::move(cores), center), err};
}

Rounded<TTOperator> operator_from_dense(const Matrix& m, std::span<const std::size_t> out_dims,
                                        std::span<const std::size_t> in_dims, const TruncationPolicy& policy)
{
    if (out_dims.size() != in_dims.size())
        throw StructuralError("operator_from_dense: out/in mode counts differ");
    if (saturating_product(out_dims) != static_cast<std::size_t>(m.rows()) ||
        saturating_product(in_dims) != static_cast<std::size_t>(m.cols()))
        throw StructuralError("operator_from_dense: matrix shape does not match the requested layout");
    std::vector<double> flat(static_cast<std::size_t>(m.size()));
    for_each_operator_entry(out_dims, in_dims,
                            [&](std::size_t r, std::size_t c, std::size_t f) { flat[f] = m(Eigen::Index(r), Eigen::Index(c)); });
    const auto dims = operator_chain_dims(out_dims, in_dims);
    double err = 0.0;
    auto cores = chain_from_dense(flat, dims, policy, err);
    return {TTOperator(std::move(cores), {out_dims.begin(), out_dims.end()}, {in_dims.begin(), in_dims.end()}), err};
}

std::vector<double> to_dense(const TTVector& x, std::size_t cap) { return chain_to_dense(x.cores(), cap); }

Matrix to_dense(const TTOperator& a, std::size_t cap)
{
    const auto flat = chain_to_dense(a.cores(), cap);
    Matrix m(Eigen::Index(a.rows()), Eigen::Index(a.cols()));
    for_each_operator_entry(a.out_dims(), a.in_dims(),
                            [&](std::size_t r, std::size_t c, std::size_t f) { m(Eigen::Index(r), Eigen::Index(c)) = flat[f]; });
    return m;
}

// --- arithmetic -------------------------------------------------------------

TTVector add(double a, const TTVector& x, double b, const TTVector& y)
{
    return TTVector(chain_add(a, x.cores(), b, y.cores()));
}

TTOperator add(double a, const TTOperator& x, double b, const TTOperator& y)
{
    if (x.out_dims() != y.out_dims() || x.in_dims() != y.in_dims())
        throw StructuralError("add: operator dimensions differ");
    return TTOperator(chain_add(a, x.cores(), b, y.cores()), x.out_dims(), x.in_dims());
}

TTVector scale(double c, const TTVector& x)
{
    auto cores = x.cores();
    const std::size_t k = x.ortho_center().value_or(0);
    for (double& v : cores[k].values())
        v *= c;
    return TTVector(std::move(cores), x.ortho_center());
}

TTOperator scale(double c, const TTOperator& x)
{
    auto cores = x.cores();
    for (double& v : cores[0].values())
        v *= c;
    return TTOperator(std::move(cores), x.out_dims(), x.in_dims());
}

Rounded<TTVector> truncate(const TTVector& x, const TruncationPolicy& policy)
{
    auto cores = x.cores();
    const double err = round_chain(cores, policy);
    const std::size_t center = cores.size() - 1;
    return {TTVector(std::move(cores), center), err};
}

Rounded<TTOperator> truncate(const TTOperator& x, const TruncationPolicy& policy)
{
    auto cores = x.cores();
    const double err = round_chain(cores, policy);
    return {TTOperator(std::move(cores), x.out_dims(), x.in_dims()), err};
}

TTOperator diag(const TTVector& v)
{
    std::vector<Core> cores;
    std::vector<std::size_t> dims;
    for (const auto& c : v.cores()) {
        const std::size_t n = c.phys();
        Core d(c.left(), n * n, c.right());
        for (std::size_t a = 0; a < c.left(); ++a)
            for (std::size_t p = 0; p < n; ++p)
                for (std::size_t b = 0; b < c.right(); ++b)
                    d(a, p * n + p, b) = c(a, p, b);
        cores.push_back(std::move(d));
        dims.push_back(n);
    }
    return TTOperator(std::move(cores), dims, dims);
}

TTOperator transpose(const TTOperator& a)
{
    std::vector<Core> cores;
    for (std::size_t k = 0; k < a.num_cores(); ++k) {
        const Core& c = a.core(k);
        const std::size_t no = a.out(k), ni = a.in(k);
        Core t(c.left(), c.phys(), c.right());
        for (std::size_t l = 0; l < c.left(); ++l)
            for (std::size_t o = 0; o < no; ++o)
                for (std::size_t i = 0; i < ni; ++i)
                    for (std::size_t r = 0; r < c.right(); ++r)
                        t(l, i * no + o, r) = c(l, o * ni + i, r);
        cores.push_back(std::move(t));
    }
    return TTOperator(std::move(cores), a.in_dims(), a.out_dims());
}

TTVector apply_exact(const TTOperator& a, const TTVector& x)
{
    if (a.num_cores() != x.num_cores())
        throw StructuralError("apply: core counts differ");
    std::vector<Core> cores;
    for (std::size_t k = 0; k < a.num_cores(); ++k) {
        const Core& ca = a.core(k);
        const Core& cx = x.core(k);
        const std::size_t no = a.out(k), ni = a.in(k);
        if (ni != cx.phys())
            throw StructuralError("apply: operator input dim differs from vector dim at core " + std::to_string(k));
        const std::size_t la = ca.left(), ra = ca.right(), lx = cx.left(), rx = cx.right();
        Core y(la * lx, no, ra * rx);
        for (std::size_t al = 0; al < la; ++al)
            for (std::size_t o = 0; o < no; ++o)
                for (std::size_t i = 0; i < ni; ++i)
                    for (std::size_t ar = 0; ar < ra; ++ar) {
                        const double av = ca(al, o * ni + i, ar);
                        if (av == 0.0)
                            continue;
                        for (std::size_t xl = 0; xl < lx; ++xl)
                            for (std::size_t xr = 0; xr < rx; ++xr)
                                y(al * lx + xl, o, ar * rx + xr) += av * cx(xl, i, xr);
                    }
        cores.push_back(std::move(y));
    }
    return TTVector(std::move(cores));
}

TTVector apply(const TTOperator& a, const TTVector& x, const TruncationPolicy& policy)
{
    return truncate(apply_exact(a, x), policy).train;
}

TTOperator compose_exact(const TTOperator& a, const TTOperator& b)
{
    if (a.num_cores() != b.num_cores())
        throw StructuralError("compose: core counts differ");
    std::vector<Core> cores;
    for (std::size_t k = 0; k < a.num_cores(); ++k) {
        if (a.in(k) != b.out(k))
            throw StructuralError("compose: inner dimensions differ at core " + std::to_string(k));
        const Core& ca = a.core(k);
        const Core& cb = b.core(k);
        const std::size_t no = a.out(k), nt = a.in(k), ni = b.in(k);
        const std::size_t la = ca.left(), ra = ca.right(), lb = cb.left(), rb = cb.right();
        Core c(la * lb, no * ni, ra * rb);
        for (std::size_t al = 0; al < la; ++al)
            for (std::size_t o = 0; o < no; ++o)
                for (std::size_t t = 0; t < nt; ++t)
                    for (std::size_t ar = 0; ar < ra; ++ar) {
                        const double av = ca(al, o * nt + t, ar);
                        if (av == 0.0)
                            continue;
                        for (std::size_t bl = 0; bl < lb; ++bl)
                            for (std::size_t i = 0; i < ni; ++i)
                                for (std::size_t br = 0; br < rb; ++br)
                                    c(al * lb + bl, o * ni + i, ar * rb + br) += av * cb(bl, t * ni + i, br);
                    }
        cores.push_back(std::move(c));
    }
    return TTOperator(std::move(cores), a.out_dims(), b.in_dims());
}

TTOperator compose(const TTOperator& a, const TTOperator& b, const TruncationPolicy& policy)
{
    return truncate(compose_exact(a, b), policy).train;
}

TTVector kron(const TTVector& lhs, const TTVector& rhs)
{
    auto cores = lhs.cores();
    for (const auto& c : rhs.cores())
        cores.push_back(c);
    return TTVector(std::move(cores));
}

TTOperator kron(const TTOperator& lhs, const TTOperator& rhs)
{
    auto cores = lhs.cores();
    auto out = lhs.out_dims();
    auto in = lhs.in_dims();
    for (std::size_t k = 0; k < rhs.num_cores(); ++k) {
        cores.push_back(rhs.core(k));
        out.push_back(rhs.out(k));
        in.push_back(rhs.in(k));
    }
    return TTOperator(std::move(cores), std::move(out), std::move(in));
}

TTVector fix_last_index(const TTVector& x, std::size_t index)
{
    const std::size_t m = x.num_cores();
    if (m < 2)
        throw StructuralError("fix_last_index: needs at least two cores");
    const Core& last = x.core(m - 1);
    if (index >= last.phys())
        throw StructuralError("fix_last_index: index out of range");
    auto cores = x.cores();
    cores.pop_back();
    Eigen::VectorXd v(Eigen::Index(last.left()));
    for (std::size_t a = 0; a < last.left(); ++a)
        v(Eigen::Index(a)) = last(a, index, 0);
    const Matrix merged = cores.back().left_unfolding() * v;
    cores.back() = Core::from_left_unfolding(merged, cores.back().phys());
    return TTVector(std::move(cores));
}

double inner(const TTVector& x, const TTVector& y) { return chain_inner(x.cores(), y.cores()); }

double norm(const TTVector& x)
{
    if (auto c = x.ortho_center())
        return x.core(*c).left_unfolding().norm();
    // The Gram route loses half the digits near zero; QR sweeps do not.
    std::vector<Core> cores = x.cores();
    right_orthogonalize(cores, 0);
    return cores.front().left_unfolding().norm();
}

double norm(const TTOperator& a)
{
    std::vector<Core> cores = a.cores();
    right_orthogonalize(cores, 0);
    return cores.front().left_unfolding().norm();
}

std::vector<double> apply_to_dense(const TTOperator& a, std::span<const double> x)
{
    if (x.size() != a.cols())
        throw StructuralError("apply_to_dense: vector length does not match operator columns");
    const std::size_t m = a.num_cores();
    // state(done_out_prefix, rank, remaining_in_suffix), contracted core by core
    std::size_t prefix = 1;
    std::size_t rank = 1;
    std::size_t suffix = x.size();
    std::vector<double> state(x.begin(), x.end());
    for (std::size_t k = 0; k < m; ++k) {
        const Core& c = a.core(k);
        const std::size_t no = a.out(k), ni = a.in(k), ra = c.right();
        const std::size_t rest = suffix / ni;
        std::vector<double> next(prefix * no * ra * rest, 0.0);
        for (std::size_t pre = 0; pre < prefix; ++pre)
            for (std::size_t al = 0; al < rank; ++al)
                for (std::size_t o = 0; o < no; ++o)
                    for (std::size_t i = 0; i < ni; ++i)
                        for (std::size_t ar = 0; ar < ra; ++ar) {
                            const double av = c(al, o * ni + i, ar);
                            if (av == 0.0)
                                continue;
                            const double* src = &state[((pre * rank + al) * suffix) + i * rest];
                            double* dst = &next[(((pre * no + o) * ra + ar) * rest)];
                            for (std::size_t s = 0; s < rest; ++s)
                                dst[s] += av * src[s];
                        }
        state = std::move(next);
        prefix *= no;
        rank = ra;
        suffix = rest;
    }
    return state;
}

} // namespace tthom::tt

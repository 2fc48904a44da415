#include "tthom/tt/orthogonalize.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/QR>
#include <Eigen/SVD>

namespace tthom::tt {

namespace {

constexpr double kSvdCheckTol = 1e-10;

} // namespace

std::size_t choose_rank(const std::vector<double>& s, double abs_budget, std::size_t max_rank)
{
    if (s.empty() || s.front() <= 0.0)
        return 1;
    const double floor = kSingularFloor * s.front();
    std::size_t r_floor = 0;
    while (r_floor < s.size() && s[r_floor] > floor)
        ++r_floor;

    // smallest r with sum_{i>=r} s_i^2 <= budget^2
    const double budget_sq = abs_budget * abs_budget;
    double tail = 0.0;
    std::size_t r_eps = s.size();
    for (std::size_t r = s.size(); r > 0; --r) {
        tail += s[r - 1] * s[r - 1];
        if (tail > budget_sq)
            break;
        r_eps = r - 1;
    }
    std::size_t r = std::min({r_eps, r_floor, max_rank});
    return std::max<std::size_t>(r, 1);
}

Split svd_split(const Matrix& m, double abs_budget, std::size_t max_rank, bool absorb_right)
{
    Split out;
    const Eigen::MatrixXd mc = m;
    if (!mc.allFinite())
        throw SolverBreakdown("svd_split: non-finite input");
    auto finite = [](const Eigen::VectorXd& v) { return v.allFinite(); };
    Eigen::MatrixXd u_full, v_full;
    Eigen::VectorXd sv;
    Eigen::BDCSVD<Eigen::MatrixXd> bdc(mc, Eigen::ComputeThinU | Eigen::ComputeThinV);
    // Divide and conquer occasionally fails on clustered spectra, sometimes
    // silently, so the factorization is checked against the input.
    auto reconstructs = [&] {
        if (bdc.info() != Eigen::Success || !finite(bdc.singularValues()) || !bdc.matrixU().allFinite() ||
            !bdc.matrixV().allFinite())
            return false;
        const Eigen::MatrixXd back = bdc.matrixU() * bdc.singularValues().asDiagonal() * bdc.matrixV().transpose();
        return (back - mc).norm() <= kSvdCheckTol * mc.norm();
    };
    if (reconstructs()) {
        sv = bdc.singularValues();
        u_full = bdc.matrixU();
        v_full = bdc.matrixV();
    } else {
        Eigen::JacobiSVD<Eigen::MatrixXd> jac(mc, Eigen::ComputeThinU | Eigen::ComputeThinV);
        sv = jac.singularValues();
        u_full = jac.matrixU();
        v_full = jac.matrixV();
    }
    out.singular_values.assign(sv.data(), sv.data() + sv.size());
    if (!finite(sv))
        throw SolverBreakdown("svd_split: non-finite singular values");
    const std::size_t r = choose_rank(out.singular_values, abs_budget, max_rank);
    out.rank = r;
    for (std::size_t i = r; i < out.singular_values.size(); ++i)
        out.discarded_sq += out.singular_values[i] * out.singular_values[i];

    const auto ri = static_cast<Eigen::Index>(r);
    const Eigen::Index avail = std::min<Eigen::Index>(ri, sv.size());
    Matrix u = Matrix::Zero(m.rows(), ri);
    Matrix vt = Matrix::Zero(ri, m.cols());
    u.leftCols(avail) = u_full.leftCols(avail);
    vt.topRows(avail) = v_full.leftCols(avail).transpose();
    if (absorb_right) {
        for (Eigen::Index i = 0; i < avail; ++i)
            vt.row(i) *= sv(i);
        if (avail == 0 && m.rows() > 0)
            u(0, 0) = 1.0; // zero matrix: keep an orthonormal left factor
    } else {
        for (Eigen::Index i = 0; i < avail; ++i)
            u.col(i) *= sv(i);
        if (avail == 0 && m.cols() > 0)
            vt(0, 0) = 1.0;
    }
    out.left = std::move(u);
    out.right = std::move(vt);
    return out;
}

void left_orthogonalize_core(std::vector<Core>& cores, std::size_t k)
{
    Core& c = cores.at(k);
    Core& next = cores.at(k + 1);
    const Eigen::MatrixXd m = c.left_unfolding();
    const Eigen::Index kk = std::min(m.rows(), m.cols());
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
    const Matrix q = qr.householderQ() * Eigen::MatrixXd::Identity(m.rows(), kk);
    const Matrix r = qr.matrixQR().topRows(kk).triangularView<Eigen::Upper>();
    const Matrix next_m = r * next.right_unfolding();
    c = Core::from_left_unfolding(q, c.phys());
    next = Core::from_right_unfolding(next_m, next.phys());
}

void right_orthogonalize_core(std::vector<Core>& cores, std::size_t k)
{
    Core& c = cores.at(k);
    Core& prev = cores.at(k - 1);
    const Eigen::MatrixXd mt = c.right_unfolding().transpose();
    const Eigen::Index kk = std::min(mt.rows(), mt.cols());
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(mt);
    const Matrix q = qr.householderQ() * Eigen::MatrixXd::Identity(mt.rows(), kk);
    const Matrix r = qr.matrixQR().topRows(kk).triangularView<Eigen::Upper>();
    const Matrix prev_m = prev.left_unfolding() * r.transpose();
    c = Core::from_right_unfolding(q.transpose(), c.phys());
    prev = Core::from_left_unfolding(prev_m, prev.phys());
}

void right_orthogonalize(std::vector<Core>& cores, std::size_t k)
{
    for (std::size_t j = cores.size(); j-- > k + 1;)
        right_orthogonalize_core(cores, j);
}

void left_orthogonalize(std::vector<Core>& cores, std::size_t k)
{
    for (std::size_t j = 0; j < k; ++j)
        left_orthogonalize_core(cores, j);
}

Matrix merge_pair(const Core& a, const Core& b)
{
    const Matrix prod = a.left_unfolding() * b.right_unfolding();
    // (left*p1) x (p2*right) is exactly prod's layout
    return prod;
}

double round_chain(std::vector<Core>& cores, const TruncationPolicy& policy)
{
    policy.validate();
    const std::size_t m = cores.size();
    if (m <= 1)
        return 0.0;
    right_orthogonalize(cores, 0);
    const double total = cores.front().left_unfolding().norm();
    if (total == 0.0) {
        for (auto& c : cores)
            c = Core(1, c.phys(), 1);
        return 0.0;
    }
    const double bond_budget = policy.rel_eps * total / std::sqrt(static_cast<double>(m - 1));
    double discarded_sq = 0.0;
    for (std::size_t k = 0; k + 1 < m; ++k) {
        Split s = svd_split(cores[k].left_unfolding(), bond_budget, policy.max_rank, true);
        discarded_sq += s.discarded_sq;
        const Matrix next = s.right * cores[k + 1].right_unfolding();
        cores[k] = Core::from_left_unfolding(s.left, cores[k].phys());
        cores[k + 1] = Core::from_right_unfolding(next, cores[k + 1].phys());
    }
    return std::sqrt(discarded_sq);
}

} // namespace tthom::tt

#include "tthom/fdm/central_difference.hpp"

#include <vector>

namespace tthom::fdm {

namespace {

constexpr std::size_t kRank = 5;

// 2x2 building blocks indexed (row bit, column bit).
double delta(std::size_t p, std::size_t q) { return p == q ? 1.0 : 0.0; }
double sigma01(std::size_t p, std::size_t q) { return (p == 0 && q == 1) ? 1.0 : 0.0; }
double sigma10(std::size_t p, std::size_t q) { return (p == 1 && q == 0) ? 1.0 : 0.0; }

// 5x5 block core of an axis bit. Row 0 propagates the carry-free part,
// rows 1-4 track borrow/carry chains; the lower-right blocks close the wrap.
tt::Core difference_core()
{
    tt::Core c(kRank, 4, kRank);
    for (std::size_t p = 0; p < 2; ++p)
        for (std::size_t q = 0; q < 2; ++q) {
            const std::size_t f = p * 2 + q;
            c(0, f, 0) = delta(p, q);
            c(0, f, 1) = sigma01(p, q);
            c(0, f, 2) = sigma10(p, q);
            c(1, f, 1) = sigma10(p, q);
            c(2, f, 2) = sigma01(p, q);
            c(3, f, 3) = sigma10(p, q);
            c(4, f, 4) = sigma01(p, q);
        }
    return c;
}

tt::Core pass_through_core()
{
    tt::Core c(kRank, 4, kRank);
    for (std::size_t a = 0; a < kRank; ++a)
        for (std::size_t p = 0; p < 2; ++p)
            c(a, p * 2 + p, a) = 1.0;
    return c;
}

} // namespace

linalg::SparseMatrix central_diff_dense(const LatticeSpec& spec, int axis)
{
    spec.validate_axis(axis);
    const std::size_t n = spec.num_nodes();
    const double w = 1.0 / (2.0 * spec.spacing());
    std::vector<Eigen::Triplet<double, std::int64_t>> trips;
    trips.reserve(2 * n);
    for (std::size_t g = 0; g < n; ++g) {
        trips.emplace_back(std::int64_t(g), std::int64_t(spec.shift(g, axis, +1)), w);
        trips.emplace_back(std::int64_t(g), std::int64_t(spec.shift(g, axis, -1)), -w);
    }
    linalg::SparseMatrix m{Eigen::Index(n), Eigen::Index(n)};
    m.setFromTriplets(trips.begin(), trips.end());
    return m;
}

tt::TTOperator central_diff_qtt(const LatticeSpec& spec, int axis)
{
    spec.validate_axis(axis);
    const std::size_t m = spec.num_cores();
    const auto n = static_cast<std::size_t>(spec.bits);
    const auto j = static_cast<std::size_t>(axis);
    const double boundary_row[kRank] = {1.0, 0.0, 0.0, 1.0, 1.0};
    const double boundary_col[kRank] = {0.0, 1.0, -1.0, 1.0, -1.0};
    const double scale = 1.0 / (2.0 * spec.spacing());

    std::vector<tt::Core> cores;
    cores.reserve(m);
    for (std::size_t k = 0; k < m; ++k) {
        const std::size_t bit = m - 1 - k;
        cores.push_back((bit >= j * n && bit < (j + 1) * n) ? difference_core() : pass_through_core());
    }

    // absorb the boundary row into the leftmost core, the column into the rightmost
    auto close_left = [&](const tt::Core& c) {
        tt::Core out(1, c.phys(), c.right());
        for (std::size_t a = 0; a < kRank; ++a)
            for (std::size_t f = 0; f < c.phys(); ++f)
                for (std::size_t b = 0; b < c.right(); ++b)
                    out(0, f, b) += scale * boundary_row[a] * c(a, f, b);
        return out;
    };
    auto close_right = [&](const tt::Core& c) {
        tt::Core out(c.left(), c.phys(), 1);
        for (std::size_t a = 0; a < c.left(); ++a)
            for (std::size_t f = 0; f < c.phys(); ++f)
                for (std::size_t b = 0; b < kRank; ++b)
                    out(a, f, 0) += c(a, f, b) * boundary_col[b];
        return out;
    };
    cores.front() = close_left(cores.front());
    cores.back() = close_right(cores.back());

    const auto dims = spec.qtt_dims();
    return tt::TTOperator(std::move(cores), dims, dims);
}

tt::TTOperator identity_qtt(const LatticeSpec& spec)
{
    const auto dims = spec.qtt_dims();
    return tt::identity_operator(dims);
}

} // namespace tthom::fdm

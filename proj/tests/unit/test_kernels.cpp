#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "tthom/linalg/csr.hpp"
#include "tthom/simd/kernels.hpp"

using namespace tthom;

namespace {

// Every available variant, scalar first.
std::vector<const simd::KernelTable*> variants()
{
    std::vector<const simd::KernelTable*> v{&simd::scalar_kernels()};
    if (const auto* a = simd::avx2_kernels())
        v.push_back(a);
    return v;
}

std::vector<double> randv(std::size_t n, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v)
        x = d(rng);
    return v;
}

} // namespace

TEST(Kernels, ArithmeticVariantsAgree)
{
    std::mt19937_64 rng(1);
    for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 9u, 31u, 1000u, 4099u}) {
        const auto x = randv(n, rng);
        const auto y0 = randv(n, rng);
        const auto& ref = simd::scalar_kernels();
        const double dref = ref.dot(x.data(), y0.data(), n);
        auto yref = y0;
        ref.axpy(0.37, x.data(), yref.data(), n);
        auto zref = y0;
        ref.xpby(x.data(), -1.25, zref.data(), n);
        std::vector<double> href(n);
        ref.hadamard(x.data(), y0.data(), href.data(), n);
        for (const auto* k : variants()) {
            EXPECT_NEAR(k->dot(x.data(), y0.data(), n), dref, 1e-13 * (1.0 + double(n))) << simd::isa_name(k->isa);
            auto y = y0;
            k->axpy(0.37, x.data(), y.data(), n);
            auto z = y0;
            k->xpby(x.data(), -1.25, z.data(), n);
            std::vector<double> hv(n);
            k->hadamard(x.data(), y0.data(), hv.data(), n);
            for (std::size_t i = 0; i < n; ++i) {
                EXPECT_NEAR(y[i], yref[i], 1e-15);
                EXPECT_NEAR(z[i], zref[i], 1e-15);
                EXPECT_EQ(hv[i], href[i]);
            }
        }
    }
}

TEST(Kernels, SpmvVariantsAgree)
{
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<int> col(0, 199);
    std::uniform_int_distribution<int> len(0, 13);
    std::vector<Eigen::Triplet<double, std::int64_t>> trips;
    for (int r = 0; r < 150; ++r) {
        const int l = len(rng);
        for (int k = 0; k < l; ++k)
            trips.emplace_back(r, col(rng), randv(1, rng)[0]);
    }
    linalg::SparseMatrix s(150, 200);
    s.setFromTriplets(trips.begin(), trips.end());
    const linalg::CsrMatrix m(s);
    const auto x = randv(200, rng);
    const Eigen::VectorXd expect = s * Eigen::Map<const Eigen::VectorXd>(x.data(), 200);
    for (const auto* k : variants()) {
        std::vector<double> y(150);
        k->csr_spmv(m.row_ptr().data(), m.col().data(), m.val().data(), 150, x.data(), y.data());
        for (int r = 0; r < 150; ++r)
            EXPECT_NEAR(y[std::size_t(r)], expect(r), 1e-13) << simd::isa_name(k->isa);
    }
}

TEST(Kernels, NearestPointIsBitIdenticalAcrossVariants)
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 2.0);
    for (std::size_t dim = 1; dim <= 3; ++dim)
        for (std::size_t count : {1u, 3u, 4u, 5u, 17u, 900u}) {
            std::vector<std::vector<double>> coords(dim, std::vector<double>(count));
            for (auto& c : coords)
                for (auto& v : c)
                    v = u(rng);
            std::vector<const double*> ptrs;
            for (auto& c : coords)
                ptrs.push_back(c.data());
            for (int q = 0; q < 200; ++q) {
                double query[3] = {u(rng), u(rng), u(rng)};
                const std::size_t ref = simd::scalar_kernels().nearest_point(ptrs.data(), dim, count, query);
                // brute-force oracle
                std::size_t best = 0;
                double bd = INFINITY;
                for (std::size_t i = 0; i < count; ++i) {
                    double d2 = 0.0;
                    for (std::size_t a = 0; a < dim; ++a)
                        d2 += (coords[a][i] - query[a]) * (coords[a][i] - query[a]);
                    if (d2 < bd) {
                        bd = d2;
                        best = i;
                    }
                }
                EXPECT_EQ(ref, best);
                for (const auto* k : variants())
                    EXPECT_EQ(k->nearest_point(ptrs.data(), dim, count, query), ref) << simd::isa_name(k->isa);
            }
        }
}

TEST(Kernels, NearestPointTiesPickLowestIndex)
{
    // points 1, 5 and 6 are all at squared distance 1 from the origin
    std::vector<double> x{3.0, 1.0, 2.0, 2.0, 2.0, 0.0, -1.0, 4.0, 5.0};
    std::vector<double> y{0.0, 0.0, 2.0, 2.0, 2.0, 1.0, 0.0, 4.0, 5.0};
    const double* ptrs[2] = {x.data(), y.data()};
    const double q[2] = {0.0, 0.0};
    for (const auto* k : variants())
        EXPECT_EQ(k->nearest_point(ptrs, 2, x.size(), q), 1u) << simd::isa_name(k->isa);
}

TEST(Kernels, DispatchOverride)
{
    const auto before = simd::active().isa;
    simd::set_active(simd::Isa::scalar);
    EXPECT_EQ(simd::active().isa, simd::Isa::scalar);
    if (simd::isa_available(simd::Isa::avx2)) {
        simd::set_active(simd::Isa::avx2);
        EXPECT_EQ(simd::active().isa, simd::Isa::avx2);
    } else {
        EXPECT_THROW(simd::set_active(simd::Isa::avx2), std::runtime_error);
    }
    simd::set_active(before);
}

TEST(Kernels, WrapperLengthChecks)
{
    std::vector<double> a(3), b(4);
    EXPECT_THROW(simd::dot(a, b), std::invalid_argument);
}

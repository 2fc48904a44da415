#include "tthom/simd/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>
#define TTHOM_HAVE_AVX2_TU 1
#endif

namespace tthom::simd {

#ifdef TTHOM_HAVE_AVX2_TU
namespace {

#define TTHOM_AVX2 __attribute__((target("avx2,fma")))

TTHOM_AVX2 double hsum(__m256d v)
{
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

TTHOM_AVX2 double dot_avx2(const double* x, const double* y, std::size_t n)
{
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4)
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i)
        s += x[i] * y[i];
    return s;
}

TTHOM_AVX2 void axpy_avx2(double a, const double* x, double* y, std::size_t n)
{
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    for (; i < n; ++i)
        y[i] += a * x[i];
}

TTHOM_AVX2 void xpby_avx2(const double* x, double b, double* y, std::size_t n)
{
    const __m256d vb = _mm256_set1_pd(b);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(vb, _mm256_loadu_pd(y + i), _mm256_loadu_pd(x + i)));
    for (; i < n; ++i)
        y[i] = x[i] + b * y[i];
}

TTHOM_AVX2 void hadamard_avx2(const double* x, const double* y, double* z, std::size_t n)
{
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(z + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    for (; i < n; ++i)
        z[i] = x[i] * y[i];
}

TTHOM_AVX2 void csr_spmv_avx2(const std::int64_t* row_ptr, const std::int32_t* col,
                              const double* val, std::size_t nrows, const double* x, double* y)
{
    for (std::size_t r = 0; r < nrows; ++r) {
        std::int64_t k = row_ptr[r];
        const std::int64_t end = row_ptr[r + 1];
        __m256d acc = _mm256_setzero_pd();
        for (; k + 4 <= end; k += 4) {
            const __m128i idx = _mm_loadu_si128(reinterpret_cast<const __m128i*>(col + k));
            const __m256d xv = _mm256_i32gather_pd(x, idx, 8);
            acc = _mm256_fmadd_pd(_mm256_loadu_pd(val + k), xv, acc);
        }
        double s = hsum(acc);
        for (; k < end; ++k)
            s += val[k] * x[col[k]];
        y[r] = s;
    }
}

// Squared distances are accumulated as ((d0*d0) + d1*d1) + d2*d2 without
// fused multiply-add, the same sequence the scalar kernel performs, so
// both variants select the same point.
TTHOM_AVX2 std::size_t nearest_point_avx2(const double* const* coords, std::size_t dim,
                                          std::size_t count, const double* query)
{
    if (count < 4 || dim == 0)
        return scalar_kernels().nearest_point(coords, dim, count, query);

    __m256d best_d2 = _mm256_set1_pd(__builtin_inf());
    __m256d best_idx = _mm256_set1_pd(-1.0);
    __m256d lane_idx = _mm256_setr_pd(0.0, 1.0, 2.0, 3.0);
    const __m256d four = _mm256_set1_pd(4.0);

    std::size_t i = 0;
    for (; i + 4 <= count; i += 4) {
        __m256d d2 = _mm256_setzero_pd();
        for (std::size_t a = 0; a < dim; ++a) {
            const __m256d diff = _mm256_sub_pd(_mm256_loadu_pd(coords[a] + i), _mm256_set1_pd(query[a]));
            d2 = _mm256_add_pd(d2, _mm256_mul_pd(diff, diff));
        }
        const __m256d better = _mm256_cmp_pd(d2, best_d2, _CMP_LT_OQ);
        best_d2 = _mm256_blendv_pd(best_d2, d2, better);
        best_idx = _mm256_blendv_pd(best_idx, lane_idx, better);
        lane_idx = _mm256_add_pd(lane_idx, four);
    }

    alignas(32) double d2s[4];
    alignas(32) double ids[4];
    _mm256_store_pd(d2s, best_d2);
    _mm256_store_pd(ids, best_idx);
    std::size_t best = static_cast<std::size_t>(ids[0]);
    double bd = d2s[0];
    for (int l = 1; l < 4; ++l) {
        const auto id = static_cast<std::size_t>(ids[l]);
        if (d2s[l] < bd || (d2s[l] == bd && id < best)) {
            bd = d2s[l];
            best = id;
        }
    }
    for (; i < count; ++i) {
        double d2 = 0.0;
        for (std::size_t a = 0; a < dim; ++a) {
            const double diff = coords[a][i] - query[a];
            const double sq = diff * diff;
            d2 = d2 + sq;
        }
        if (d2 < bd) {
            bd = d2;
            best = i;
        }
    }
    return best;
}

constexpr KernelTable kAvx2{Isa::avx2,    dot_avx2,      axpy_avx2,         xpby_avx2,
                            hadamard_avx2, csr_spmv_avx2, nearest_point_avx2};

} // namespace

const KernelTable* avx2_kernels() noexcept
{
    static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    return supported ? &kAvx2 : nullptr;
}

#else

const KernelTable* avx2_kernels() noexcept { return nullptr; }

#endif

} // namespace tthom::simd

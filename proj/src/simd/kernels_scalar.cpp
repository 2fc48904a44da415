#include "tthom/simd/kernels.hpp"

namespace tthom::simd {
namespace {

double dot_scalar(const double* x, const double* y, std::size_t n)
{
    // four partial sums so the reduction order resembles the vector path
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += x[i] * y[i];
        s1 += x[i + 1] * y[i + 1];
        s2 += x[i + 2] * y[i + 2];
        s3 += x[i + 3] * y[i + 3];
    }
    for (; i < n; ++i)
        s0 += x[i] * y[i];
    return (s0 + s1) + (s2 + s3);
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n)
{
    for (std::size_t i = 0; i < n; ++i)
        y[i] += a * x[i];
}

void xpby_scalar(const double* x, double b, double* y, std::size_t n)
{
    for (std::size_t i = 0; i < n; ++i)
        y[i] = x[i] + b * y[i];
}

void hadamard_scalar(const double* x, const double* y, double* z, std::size_t n)
{
    for (std::size_t i = 0; i < n; ++i)
        z[i] = x[i] * y[i];
}

void csr_spmv_scalar(const std::int64_t* row_ptr, const std::int32_t* col, const double* val,
                     std::size_t nrows, const double* x, double* y)
{
    for (std::size_t r = 0; r < nrows; ++r) {
        double s = 0.0;
        for (std::int64_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k)
            s += val[k] * x[col[k]];
        y[r] = s;
    }
}

std::size_t nearest_point_scalar(const double* const* coords, std::size_t dim, std::size_t count,
                                 const double* query)
{
    std::size_t best = 0;
    double best_d2 = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        double d2 = 0.0;
        for (std::size_t a = 0; a < dim; ++a) {
            const double diff = coords[a][i] - query[a];
            const double sq = diff * diff;
            d2 = d2 + sq;
        }
        if (i == 0 || d2 < best_d2) {
            best_d2 = d2;
            best = i;
        }
    }
    return best;
}

constexpr KernelTable kScalar{Isa::scalar,        dot_scalar,      axpy_scalar,
                              xpby_scalar,        hadamard_scalar, csr_spmv_scalar,
                              nearest_point_scalar};

} // namespace

const KernelTable& scalar_kernels() noexcept { return kScalar; }

} // namespace tthom::simd

#include "tthom/simd/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace tthom::simd {
namespace {

const KernelTable* initial_table()
{
    const KernelTable* avx = avx2_kernels();
    if (const char* env = std::getenv("TTHOM_SIMD")) {
        const std::string want = env;
        if (want == "scalar")
            return &scalar_kernels();
        if (want == "avx2" && avx)
            return avx;
    }
    return avx ? avx : &scalar_kernels();
}

std::atomic<const KernelTable*>& slot()
{
    static std::atomic<const KernelTable*> table{initial_table()};
    return table;
}

void check_sizes(std::size_t a, std::size_t b)
{
    if (a != b)
        throw std::invalid_argument("simd kernel: operand lengths differ");
}

} // namespace

std::string_view isa_name(Isa isa) noexcept
{
    switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    }
    return "unknown";
}

bool isa_available(Isa isa) noexcept
{
    return isa == Isa::scalar || (isa == Isa::avx2 && avx2_kernels() != nullptr);
}

const KernelTable& active() noexcept { return *slot().load(std::memory_order_relaxed); }

void set_active(Isa isa)
{
    if (!isa_available(isa))
        throw std::runtime_error("requested SIMD variant is not available on this CPU");
    slot().store(isa == Isa::scalar ? &scalar_kernels() : avx2_kernels());
}

double dot(std::span<const double> x, std::span<const double> y)
{
    check_sizes(x.size(), y.size());
    return active().dot(x.data(), y.data(), x.size());
}

void axpy(double a, std::span<const double> x, std::span<double> y)
{
    check_sizes(x.size(), y.size());
    active().axpy(a, x.data(), y.data(), x.size());
}

void xpby(std::span<const double> x, double b, std::span<double> y)
{
    check_sizes(x.size(), y.size());
    active().xpby(x.data(), b, y.data(), x.size());
}

void hadamard(std::span<const double> x, std::span<const double> y, std::span<double> z)
{
    check_sizes(x.size(), y.size());
    check_sizes(x.size(), z.size());
    active().hadamard(x.data(), y.data(), z.data(), x.size());
}

void csr_spmv(const CsrView& a, std::span<const double> x, std::span<double> y)
{
    const std::size_t nrows = a.row_ptr.empty() ? 0 : a.row_ptr.size() - 1;
    check_sizes(nrows, y.size());
    active().csr_spmv(a.row_ptr.data(), a.col.data(), a.val.data(), nrows, x.data(), y.data());
}

std::size_t nearest_point(std::span<const double* const> coords, std::size_t count,
                          std::span<const double> query)
{
    check_sizes(coords.size(), query.size());
    if (count == 0)
        throw std::invalid_argument("nearest_point: empty point set");
    return active().nearest_point(coords.data(), coords.size(), count, query.data());
}

} // namespace tthom::simd

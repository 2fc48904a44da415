#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

// Data-parallel inner loops shared by the full-rank solver and the
// microstructure generator. Every kernel has a portable scalar reference
// and, where the target supports it, an AVX2 variant chosen at runtime.

namespace tthom::simd {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa) noexcept;

// Compressed-row view used by csr_spmv. Column indices are 32-bit, which
// covers every lattice the full-rank path is meant for (< 2^31 unknowns).
struct CsrView {
    std::span<const std::int64_t> row_ptr;
    std::span<const std::int32_t> col;
    std::span<const double> val;
};

struct KernelTable {
    Isa isa;
    double (*dot)(const double* x, const double* y, std::size_t n);
    // y <- y + a x
    void (*axpy)(double a, const double* x, double* y, std::size_t n);
    // y <- x + b y
    void (*xpby)(const double* x, double b, double* y, std::size_t n);
    // z <- x .* y
    void (*hadamard)(const double* x, const double* y, double* z, std::size_t n);
    // y <- A x for CSR matrix A with nrows = row_ptr.size() - 1
    void (*csr_spmv)(const std::int64_t* row_ptr, const std::int32_t* col, const double* val,
                     std::size_t nrows, const double* x, double* y);
    // Index of the point (structure-of-arrays, `dim` coordinate arrays of
    // length `count`) with the smallest squared distance to `query`.
    // Ties resolve to the lowest index; results are bit-identical across ISAs.
    std::size_t (*nearest_point)(const double* const* coords, std::size_t dim, std::size_t count,
                                 const double* query);
};

const KernelTable& scalar_kernels() noexcept;
// Returns nullptr when the binary or the CPU lacks AVX2+FMA.
const KernelTable* avx2_kernels() noexcept;

bool isa_available(Isa isa) noexcept;

// Kernel table in use. Defaults to the widest available ISA; the
// TTHOM_SIMD environment variable ("scalar" or "avx2") overrides it.
const KernelTable& active() noexcept;
void set_active(Isa isa);

// Convenience wrappers over active().
double dot(std::span<const double> x, std::span<const double> y);
void axpy(double a, std::span<const double> x, std::span<double> y);
void xpby(std::span<const double> x, double b, std::span<double> y);
void hadamard(std::span<const double> x, std::span<const double> y, std::span<double> z);
void csr_spmv(const CsrView& a, std::span<const double> x, std::span<double> y);
std::size_t nearest_point(std::span<const double* const> coords, std::size_t count,
                          std::span<const double> query);

} // namespace tthom::simd

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace tthom::fdm {

// Periodic lattice of N = 2^n nodes per axis on the unit cell, d in {2, 3}
// (d = 1 is accepted for operator tests). Node g = sum_j N^j g_j, so axis j
// occupies bits [j*n, (j+1)*n) of g and the quantized cores run from the
// most significant bit of the last axis down to bit 0 of axis 0.
struct LatticeSpec {
    int dim = 2;
    int bits = 1;

    LatticeSpec() = default;
    LatticeSpec(int d, int n);

    std::size_t nodes_per_axis() const noexcept { return std::size_t{1} << bits; }
    std::size_t num_nodes() const noexcept { return std::size_t{1} << (dim * bits); }
    std::size_t num_cores() const noexcept { return static_cast<std::size_t>(dim * bits); }
    double spacing() const noexcept { return 1.0 / static_cast<double>(nodes_per_axis()); }

    std::vector<std::size_t> qtt_dims() const { return std::vector<std::size_t>(num_cores(), 2); }

    std::size_t node(const std::array<std::size_t, 3>& coords) const noexcept;
    std::array<std::size_t, 3> coords(std::size_t g) const noexcept;
    // Neighbour of g shifted by `offset` along `axis`, periodically wrapped.
    std::size_t shift(std::size_t g, int axis, long offset) const noexcept;

    void validate_axis(int axis) const;

    bool operator==(const LatticeSpec&) const = default;
};

} // namespace tthom::fdm

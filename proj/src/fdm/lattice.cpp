#include "tthom/fdm/lattice.hpp"

#include <stdexcept>
#include <string>

namespace tthom::fdm {

LatticeSpec::LatticeSpec(int d, int n) : dim(d), bits(n)
{
    if (d < 1 || d > 3)
        throw std::invalid_argument("lattice dimension must be 1, 2 or 3");
    if (n < 1 || d * n > 40)
        throw std::invalid_argument("bits per axis must be >= 1 with d*n <= 40");
}

std::size_t LatticeSpec::node(const std::array<std::size_t, 3>& c) const noexcept
{
    std::size_t g = 0;
    for (int j = dim; j-- > 0;)
        g = (g << bits) | c[static_cast<std::size_t>(j)];
    return g;
}

std::array<std::size_t, 3> LatticeSpec::coords(std::size_t g) const noexcept
{
    std::array<std::size_t, 3> c{0, 0, 0};
    const std::size_t mask = nodes_per_axis() - 1;
    for (int j = 0; j < dim; ++j)
        c[static_cast<std::size_t>(j)] = (g >> (j * bits)) & mask;
    return c;
}

std::size_t LatticeSpec::shift(std::size_t g, int axis, long offset) const noexcept
{
    const auto n = static_cast<long>(nodes_per_axis());
    auto c = coords(g);
    long v = (static_cast<long>(c[static_cast<std::size_t>(axis)]) + offset) % n;
    if (v < 0)
        v += n;
    c[static_cast<std::size_t>(axis)] = static_cast<std::size_t>(v);
    return node(c);
}

void LatticeSpec::validate_axis(int axis) const
{
    if (axis < 0 || axis >= dim)
        throw std::out_of_range("axis " + std::to_string(axis) + " out of range for d = " + std::to_string(dim));
}

} // namespace tthom::fdm

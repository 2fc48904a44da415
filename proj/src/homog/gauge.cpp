#include "tthom/homog/gauge.hpp"

#include <cmath>

namespace tthom::homog {

std::vector<tt::TTVector> nullspace_modes(const fdm::LatticeSpec& spec, int components)
{
    const std::size_t m = spec.num_cores();
    const double w = 1.0 / std::sqrt(2.0);
    std::vector<tt::TTVector> modes;
    for (int comp = 0; comp < components; ++comp)
        for (unsigned mask = 0; mask < (1u << spec.dim); ++mask) {
            std::vector<tt::Core> cores;
            for (std::size_t pos = 0; pos < m; ++pos) {
                // core pos carries bit m - 1 - pos of g; axis a starts at bit a * n
                const std::size_t bit = m - 1 - pos;
                const bool lsb = bit % std::size_t(spec.bits) == 0;
                const bool flip = lsb && (mask & (1u << (bit / std::size_t(spec.bits))));
                cores.emplace_back(1, 2, 1, std::vector<double>{w, flip ? -w : w});
            }
            if (components > 1) {
                std::vector<double> unit(std::size_t(components), 0.0);
                unit[std::size_t(comp)] = 1.0;
                cores.emplace_back(1, std::size_t(components), 1, std::move(unit));
            }
            modes.emplace_back(std::move(cores));
        }
    return modes;
}

tt::TTOperator nullspace_penalty(const std::vector<tt::TTVector>& modes, double weight)
{
    tt::TTOperator acc;
    bool first = true;
    for (const auto& v : modes) {
        std::vector<tt::Core> cores;
        for (std::size_t k = 0; k < v.num_cores(); ++k) {
            const auto& c = v.core(k);
            const std::size_t p = c.phys();
            std::vector<double> outer(p * p);
            for (std::size_t o = 0; o < p; ++o)
                for (std::size_t i = 0; i < p; ++i)
                    outer[o * p + i] = c(0, o, 0) * c(0, i, 0);
            cores.emplace_back(1, p * p, 1, std::move(outer));
        }
        const auto dims = v.phys_dims();
        tt::TTOperator term(std::move(cores), dims, dims);
        acc = first ? tt::scale(weight, term) : tt::add(1.0, acc, weight, term);
        first = false;
    }
    return acc;
}

tt::TTVector remove_nullspace(const tt::TTVector& x, const std::vector<tt::TTVector>& modes,
                              const tt::TruncationPolicy& policy)
{
    tt::TTVector out = x;
    for (const auto& v : modes)
        out = tt::add(1.0, out, -tt::inner(v, x), v);
    return tt::truncate(out, policy).train;
}

} // namespace tthom::homog

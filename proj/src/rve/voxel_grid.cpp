#include "tthom/rve/voxel_grid.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "tthom/error.hpp"
#include "tthom/simd/kernels.hpp"

namespace tthom::rve {

namespace {

constexpr int kFormatVersion = 1;

double unit_draw(std::mt19937_64& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

} // namespace

VoxelGrid::VoxelGrid(fdm::LatticeSpec s, std::vector<std::uint8_t> values, GridMetadata m)
    : spec(s), chi(std::move(values)), meta(std::move(m))
{
    if (chi.size() != spec.num_nodes())
        throw StructuralError("VoxelGrid: value count does not match the lattice");
    for (auto v : chi)
        if (v > 1)
            throw FormatError("VoxelGrid: phase values must be 0 or 1");
}

VoxelGrid VoxelGrid::uniform(const fdm::LatticeSpec& spec, std::uint8_t value)
{
    GridMetadata m;
    m.generator = "uniform";
    return VoxelGrid(spec, std::vector<std::uint8_t>(spec.num_nodes(), value), m);
}

double VoxelGrid::phase_a_fraction() const noexcept
{
    std::size_t count = 0;
    for (auto v : chi)
        count += v;
    return chi.empty() ? 0.0 : static_cast<double>(count) / static_cast<double>(chi.size());
}

VoxelGrid VoxelGrid::complement() const
{
    VoxelGrid out = *this;
    for (auto& v : out.chi)
        v = static_cast<std::uint8_t>(1 - v);
    return out;
}

void VoronoiConfig::validate() const
{
    if (n_point < 1)
        throw std::invalid_argument("VoronoiConfig: n_point must be positive");
    if (!(v_f >= 0.0 && v_f <= 1.0))
        throw std::invalid_argument("VoronoiConfig: v_f must lie in [0, 1]");
}

VoxelGrid generate_voronoi_rve(const fdm::LatticeSpec& spec, const VoronoiConfig& config)
{
    config.validate();
    const auto d = static_cast<std::size_t>(spec.dim);
    const std::size_t np = config.n_point;
    std::mt19937_64 rng(config.seed);

    std::vector<std::array<double, 3>> points(np);
    for (auto& p : points)
        for (std::size_t a = 0; a < d; ++a)
            p[a] = unit_draw(rng);
    std::vector<std::uint8_t> labels(np);
    for (auto& l : labels)
        l = unit_draw(rng) < config.v_f ? 0 : 1;

    // Copies indexed image-major, images in lexicographic order of the
    // offset vector in {-1, 0, 1}^d with axis 0 varying slowest.
    std::size_t images = 1;
    for (std::size_t a = 0; a < d; ++a)
        images *= 3;
    const std::size_t total = images * np;
    std::vector<std::vector<double>> coords(d, std::vector<double>(total));
    for (std::size_t img = 0; img < images; ++img) {
        std::size_t code = img;
        std::array<double, 3> offset{};
        for (std::size_t a = d; a-- > 0;) {
            offset[a] = static_cast<double>(code % 3) - 1.0;
            code /= 3;
        }
        for (std::size_t i = 0; i < np; ++i)
            for (std::size_t a = 0; a < d; ++a)
                coords[a][img * np + i] = points[i][a] + offset[a];
    }
    std::vector<const double*> soa(d);
    for (std::size_t a = 0; a < d; ++a)
        soa[a] = coords[a].data();

    const double h = spec.spacing();
    std::vector<std::uint8_t> chi(spec.num_nodes());
    std::array<double, 3> query{};
    for (std::size_t g = 0; g < chi.size(); ++g) {
        const auto c = spec.coords(g);
        for (std::size_t a = 0; a < d; ++a)
            query[a] = h * static_cast<double>(c[a]);
        const std::size_t nearest = simd::nearest_point(soa, total, std::span<const double>(query.data(), d));
        chi[g] = labels[nearest % np];
    }

    GridMetadata meta;
    meta.generator = kVoronoiGenerator;
    meta.seed = config.seed;
    meta.v_f = config.v_f;
    meta.n_point = np;
    return VoxelGrid(spec, std::move(chi), meta);
}

VoxelGrid layered_rve_45(const fdm::LatticeSpec& spec)
{
    if (spec.dim != 2)
        throw StructuralError("layered_rve_45: only d = 2 is supported");
    const std::size_t n = spec.nodes_per_axis();
    if (n % 2 != 0)
        throw StructuralError("layered_rve_45: N must be even");
    std::vector<std::uint8_t> chi(spec.num_nodes());
    for (std::size_t g = 0; g < chi.size(); ++g) {
        const auto c = spec.coords(g);
        const std::size_t diff = (c[0] + n - c[1]) % n;
        chi[g] = diff < n / 2 ? 1 : 0;
    }
    GridMetadata meta;
    meta.generator = kLayeredGenerator;
    meta.v_f = 0.5;
    return VoxelGrid(spec, std::move(chi), meta);
}

std::string voxel_bytes(const VoxelGrid& grid)
{
    nlohmann::json header = {
        {"format_version", kFormatVersion},
        {"d", grid.spec.dim},
        {"n", grid.spec.bits},
        {"N", grid.spec.nodes_per_axis()},
        {"generator", grid.meta.generator},
        {"seed", grid.meta.seed},
        {"v_f", grid.meta.v_f},
        {"n_point", grid.meta.n_point},
    };
    std::string out = header.dump();
    out += '\n';
    out.append(reinterpret_cast<const char*>(grid.chi.data()), grid.chi.size());
    return out;
}

void write_voxel_file(const std::filesystem::path& path, const VoxelGrid& grid)
{
    const std::string bytes = voxel_bytes(grid);
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw FormatError("cannot open " + tmp.string() + " for writing");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out)
            throw FormatError("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

VoxelGrid read_voxel_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw FormatError("cannot open voxel file " + path.string());
    std::string line;
    if (!std::getline(in, line))
        throw FormatError("voxel file has no header: " + path.string());
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(line);
        if (header.at("format_version").get<int>() != kFormatVersion)
            throw FormatError("unsupported voxel format version");
        const fdm::LatticeSpec spec(header.at("d").get<int>(), header.at("n").get<int>());
        if (header.at("N").get<std::size_t>() != spec.nodes_per_axis())
            throw FormatError("voxel header: N does not equal 2^n");
        GridMetadata meta;
        meta.generator = header.value("generator", std::string("unknown"));
        meta.seed = header.value("seed", std::uint64_t{0});
        meta.v_f = header.value("v_f", 0.0);
        meta.n_point = header.value("n_point", std::size_t{0});
        std::vector<std::uint8_t> chi(spec.num_nodes());
        in.read(reinterpret_cast<char*>(chi.data()), static_cast<std::streamsize>(chi.size()));
        if (static_cast<std::size_t>(in.gcount()) != chi.size())
            throw FormatError("voxel file truncated: " + path.string());
        if (in.peek() != std::char_traits<char>::eof())
            throw FormatError("voxel file has trailing bytes: " + path.string());
        return VoxelGrid(spec, std::move(chi), meta);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("voxel header: ") + e.what());
    } catch (const StructuralError& e) {
        throw FormatError(std::string("voxel file: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("voxel header: ") + e.what());
    }
}

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

void fnv_update(std::uint64_t& h, const char* data, std::size_t size)
{
    for (std::size_t i = 0; i < size; ++i) {
        h ^= static_cast<unsigned char>(data[i]);
        h *= kFnvPrime;
    }
}

std::string hex64(std::uint64_t h)
{
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
    return hex;
}

} // namespace

std::string file_hash(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw FormatError("cannot open " + path.string());
    std::uint64_t h = kFnvOffset;
    char buf[1 << 14];
    while (in) {
        in.read(buf, sizeof buf);
        fnv_update(h, buf, static_cast<std::size_t>(in.gcount()));
    }
    return hex64(h);
}

std::string grid_hash(const VoxelGrid& grid)
{
    const std::string bytes = voxel_bytes(grid);
    std::uint64_t h = kFnvOffset;
    fnv_update(h, bytes.data(), bytes.size());
    return hex64(h);
}

tt::Rounded<tt::TTVector> chi_to_qtt(const VoxelGrid& grid, const tt::TruncationPolicy& policy)
{
    const std::vector<double> values(grid.chi.begin(), grid.chi.end());
    const auto dims = grid.spec.qtt_dims();
    return tt::vector_from_dense(values, dims, policy);
}

tt::TTVector material_field(const tt::TTVector& chi, double value_a, double value_b)
{
    return tt::add(value_a - value_b, chi, value_b, tt::ones(chi.phys_dims()));
}

std::vector<double> material_values(const VoxelGrid& grid, double value_a, double value_b)
{
    std::vector<double> out(grid.chi.size());
    for (std::size_t g = 0; g < out.size(); ++g)
        out[g] = grid.chi[g] ? value_a : value_b;
    return out;
}

} // namespace tthom::rve

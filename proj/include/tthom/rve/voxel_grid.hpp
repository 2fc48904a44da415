#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tthom/fdm/lattice.hpp"
#include "tthom/tt/tensor_train.hpp"

namespace tthom::rve {

struct GridMetadata {
    std::string generator = "none";
    std::uint64_t seed = 0;
    double v_f = 0.0;
    std::size_t n_point = 0;
};

// Binary phase indicator on the periodic lattice: chi[g] == 1 marks phase A.
struct VoxelGrid {
    fdm::LatticeSpec spec;
    std::vector<std::uint8_t> chi;
    GridMetadata meta;

    VoxelGrid() = default;
    VoxelGrid(fdm::LatticeSpec s, std::vector<std::uint8_t> values, GridMetadata m = {});

    static VoxelGrid uniform(const fdm::LatticeSpec& spec, std::uint8_t value);

    // Fraction of nodes with chi == 1.
    double phase_a_fraction() const noexcept;
    VoxelGrid complement() const;
    bool operator==(const VoxelGrid& o) const { return spec == o.spec && chi == o.chi; }
};

struct VoronoiConfig {
    std::size_t n_point = 100;
    // Probability that a seed point is labelled 0.
    double v_f = 0.5;
    std::uint64_t seed = 0;

    void validate() const;
};

inline constexpr const char* kVoronoiGenerator = "voronoi/mt19937_64";
inline constexpr const char* kLayeredGenerator = "layered45";

// Seeds are drawn with std::mt19937_64: d coordinates per point, then one
// label per point, each as (draw >> 11) * 2^-53. Seeds are replicated into the
// 3^d neighbouring cells and every node takes the label of its nearest copy.
VoxelGrid generate_voronoi_rve(const fdm::LatticeSpec& spec, const VoronoiConfig& config);

// Two stripes per period running at 45 degrees: chi = 1 where
// (g_0 - g_1) mod N < N/2. Requires d == 2.
VoxelGrid layered_rve_45(const fdm::LatticeSpec& spec);

// Voxel file: one line of JSON header, then N^d bytes in node order.
std::string voxel_bytes(const VoxelGrid& grid);
void write_voxel_file(const std::filesystem::path& path, const VoxelGrid& grid);
VoxelGrid read_voxel_file(const std::filesystem::path& path);
// FNV-1a 64-bit hash of the file contents, as 16 hex digits.
std::string file_hash(const std::filesystem::path& path);
// Hash the grid's voxel file would have.
std::string grid_hash(const VoxelGrid& grid);

tt::Rounded<tt::TTVector> chi_to_qtt(const VoxelGrid& grid, const tt::TruncationPolicy& policy);

// (value_a - value_b) chi + value_b, exact rank chi + 1 before any rounding.
tt::TTVector material_field(const tt::TTVector& chi, double value_a, double value_b);
std::vector<double> material_values(const VoxelGrid& grid, double value_a, double value_b);

} // namespace tthom::rve

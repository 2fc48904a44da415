#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "support/oracles.hpp"
#include "tthom/error.hpp"
#include "tthom/rve/voxel_grid.hpp"
#include "tthom/simd/kernels.hpp"

using namespace tthom;

namespace {

std::filesystem::path temp_path(const std::string& name)
{
    return std::filesystem::temp_directory_path() / ("tthom_test_" + name);
}

// Brute-force periodic Voronoi labelling from explicit points, using the
// minimum-image distance instead of replicated copies.
std::vector<std::uint8_t> brute_voronoi(const fdm::LatticeSpec& spec, const std::vector<std::array<double, 3>>& pts,
                                        const std::vector<std::uint8_t>& labels)
{
    std::vector<std::uint8_t> chi(spec.num_nodes());
    const double h = spec.spacing();
    for (std::size_t g = 0; g < chi.size(); ++g) {
        const auto c = spec.coords(g);
        double best = INFINITY;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            double d2 = 0.0;
            for (int a = 0; a < spec.dim; ++a) {
                double diff = std::abs(h * double(c[std::size_t(a)]) - pts[i][std::size_t(a)]);
                diff = std::min(diff, 1.0 - diff);
                d2 += diff * diff;
            }
            if (d2 < best) {
                best = d2;
                chi[g] = labels[i];
            }
        }
    }
    return chi;
}

} // namespace

TEST(Voronoi, SinglePointGivesUniformGrid)
{
    const fdm::LatticeSpec spec(2, 4);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto g = rve::generate_voronoi_rve(spec, {1, 0.5, seed});
        const double f = g.phase_a_fraction();
        EXPECT_TRUE(f == 0.0 || f == 1.0);
    }
}

TEST(Voronoi, FullVolumeFractionGivesAllZero)
{
    const fdm::LatticeSpec spec(2, 4);
    const auto g = rve::generate_voronoi_rve(spec, {30, 1.0, 9});
    EXPECT_EQ(g.phase_a_fraction(), 0.0);
    const auto g0 = rve::generate_voronoi_rve(spec, {30, 0.0, 9});
    EXPECT_EQ(g0.phase_a_fraction(), 1.0);
}

TEST(Voronoi, MeanZeroFractionOverSeeds)
{
    const fdm::LatticeSpec spec(2, 5);
    double sum = 0.0;
    for (std::uint64_t seed = 0; seed < 50; ++seed)
        sum += 1.0 - rve::generate_voronoi_rve(spec, {100, 0.7, seed}).phase_a_fraction();
    EXPECT_NEAR(sum / 50.0, 0.7, 0.05);
}

TEST(Voronoi, Deterministic)
{
    const fdm::LatticeSpec spec(3, 3);
    const auto a = rve::generate_voronoi_rve(spec, {20, 0.4, 123});
    const auto b = rve::generate_voronoi_rve(spec, {20, 0.4, 123});
    EXPECT_EQ(a.chi, b.chi);
    const auto c = rve::generate_voronoi_rve(spec, {20, 0.4, 124});
    EXPECT_NE(a.chi, c.chi);
}

TEST(Voronoi, MatchesMinimumImageOracle)
{
    // Reproduce the documented draw order to obtain the seed points.
    for (int d = 2; d <= 3; ++d) {
        const fdm::LatticeSpec spec(d, 3);
        const rve::VoronoiConfig cfg{12, 0.5, 77};
        std::mt19937_64 rng(cfg.seed);
        auto draw = [&] { return double(rng() >> 11) * 0x1.0p-53; };
        std::vector<std::array<double, 3>> pts(cfg.n_point);
        for (auto& p : pts)
            for (int a = 0; a < d; ++a)
                p[std::size_t(a)] = draw();
        std::vector<std::uint8_t> labels(cfg.n_point);
        for (auto& l : labels)
            l = draw() < cfg.v_f ? 0 : 1;
        const auto got = rve::generate_voronoi_rve(spec, cfg);
        EXPECT_EQ(got.chi, brute_voronoi(spec, pts, labels)) << "d=" << d;
    }
}

TEST(Voronoi, ScalarAndSimdGridsIdentical)
{
    const fdm::LatticeSpec spec(2, 5);
    const auto before = simd::active().isa;
    simd::set_active(simd::Isa::scalar);
    const auto a = rve::generate_voronoi_rve(spec, {100, 0.5, 5});
    simd::set_active(before);
    const auto b = rve::generate_voronoi_rve(spec, {100, 0.5, 5});
    EXPECT_EQ(a.chi, b.chi);
}

TEST(Voronoi, RejectsBadConfig)
{
    const fdm::LatticeSpec spec(2, 2);
    EXPECT_THROW(rve::generate_voronoi_rve(spec, {0, 0.5, 1}), std::invalid_argument);
    EXPECT_THROW(rve::generate_voronoi_rve(spec, {5, 1.5, 1}), std::invalid_argument);
}

TEST(Layered, HalfFractionAndDiagonalInvariance)
{
    for (int n = 2; n <= 7; ++n) {
        const fdm::LatticeSpec spec(2, n);
        const auto g = rve::layered_rve_45(spec);
        EXPECT_EQ(g.phase_a_fraction(), 0.5);
        const std::size_t half = spec.nodes_per_axis() / 2;
        for (std::size_t k = 0; k < g.chi.size(); ++k) {
            const std::size_t shifted = spec.shift(spec.shift(k, 0, long(half)), 1, long(half));
            EXPECT_EQ(g.chi[k], g.chi[shifted]);
            // interfaces at 45 degrees: constant along the (1,1) diagonal
            EXPECT_EQ(g.chi[k], g.chi[spec.shift(spec.shift(k, 0, 1), 1, 1)]);
        }
    }
}

TEST(Layered, RejectsThreeDimensions)
{
    EXPECT_THROW(rve::layered_rve_45(fdm::LatticeSpec(3, 2)), StructuralError);
}

TEST(VoxelFile, RoundTripAndStableHash)
{
    const fdm::LatticeSpec spec(2, 4);
    const auto g = rve::generate_voronoi_rve(spec, {10, 0.3, 4});
    const auto p1 = temp_path("a.vox"), p2 = temp_path("b.vox");
    rve::write_voxel_file(p1, g);
    rve::write_voxel_file(p2, rve::generate_voronoi_rve(spec, {10, 0.3, 4}));
    const auto back = rve::read_voxel_file(p1);
    EXPECT_EQ(back.chi, g.chi);
    EXPECT_EQ(back.spec, g.spec);
    EXPECT_EQ(back.meta.seed, 4u);
    EXPECT_EQ(back.meta.n_point, 10u);
    EXPECT_EQ(back.meta.generator, rve::kVoronoiGenerator);
    EXPECT_EQ(rve::file_hash(p1), rve::file_hash(p2));
    EXPECT_EQ(rve::file_hash(p1).size(), 16u);
    std::filesystem::remove(p1);
    std::filesystem::remove(p2);
}

TEST(VoxelFile, MalformedInputsAreFormatErrors)
{
    const auto p = temp_path("bad.vox");
    {
        std::ofstream out(p, std::ios::binary);
        out << "{\"format_version\":1,\"d\":2,\"n\":2,\"N\":4}\n" << std::string(10, '\0');
    }
    EXPECT_THROW(rve::read_voxel_file(p), FormatError);
    {
        std::ofstream out(p, std::ios::binary);
        out << "not json\n";
    }
    EXPECT_THROW(rve::read_voxel_file(p), FormatError);
    {
        std::ofstream out(p, std::ios::binary);
        out << "{\"format_version\":1,\"d\":2,\"n\":1,\"N\":2}\n" << std::string(4, '\x02');
    }
    EXPECT_THROW(rve::read_voxel_file(p), FormatError);
    std::filesystem::remove(p);
    EXPECT_THROW(rve::read_voxel_file(p), FormatError);
}

TEST(ChiQtt, HomogeneousIsRankOne)
{
    const fdm::LatticeSpec spec(2, 4);
    const auto enc = rve::chi_to_qtt(rve::VoxelGrid::uniform(spec, 1), tt::TruncationPolicy::exact());
    EXPECT_EQ(enc.train.max_rank(), 1u);
}

TEST(ChiQtt, ExactRoundTrip)
{
    const fdm::LatticeSpec spec(2, 5);
    const auto g = rve::generate_voronoi_rve(spec, {40, 0.5, 2});
    const auto enc = rve::chi_to_qtt(g, tt::TruncationPolicy::exact());
    const auto back = tt::to_dense(enc.train);
    for (std::size_t k = 0; k < back.size(); ++k)
        EXPECT_NEAR(back[k], double(g.chi[k]), 1e-12);
}

TEST(ChiQtt, LayeredCapAndReportedError)
{
    const fdm::LatticeSpec spec(2, 6);
    const auto g = rve::layered_rve_45(spec);
    // the stripe pattern has exact rank N/2 + 1 at the middle bond
    const auto exact = rve::chi_to_qtt(g, tt::TruncationPolicy::exact());
    EXPECT_EQ(exact.train.max_rank(), spec.nodes_per_axis() / 2 + 1);
    const auto capped = rve::chi_to_qtt(g, tt::TruncationPolicy::capped(1e-5, 5));
    EXPECT_LE(capped.train.max_rank(), 5u);
    const auto dense = tt::to_dense(capped.train);
    double diff = 0.0;
    for (std::size_t k = 0; k < dense.size(); ++k)
        diff += (dense[k] - g.chi[k]) * (dense[k] - g.chi[k]);
    EXPECT_NEAR(capped.error, std::sqrt(diff), 1e-9);
}

TEST(MaterialField, MapsPhasesAndRankLaw)
{
    const fdm::LatticeSpec spec(2, 4);
    const auto g = rve::generate_voronoi_rve(spec, {8, 0.5, 3});
    const auto chi = rve::chi_to_qtt(g, tt::TruncationPolicy::exact()).train;
    const auto field = rve::material_field(chi, 1.0, 0.5);
    const auto dense = tt::to_dense(field);
    const auto expect = rve::material_values(g, 1.0, 0.5);
    EXPECT_LE(oracle::max_abs_diff(dense, expect), 1e-12);
    const auto rc = chi.ranks(), rf = field.ranks();
    for (std::size_t k = 0; k < rf.size(); ++k)
        EXPECT_EQ(rf[k], rc[k] + 1);
}

TEST(MaterialField, EqualValuesGiveConstant)
{
    const fdm::LatticeSpec spec(2, 3);
    const auto g = rve::generate_voronoi_rve(spec, {8, 0.5, 3});
    const auto chi = rve::chi_to_qtt(g, tt::TruncationPolicy::exact()).train;
    for (double v : tt::to_dense(rve::material_field(chi, 2.5, 2.5)))
        EXPECT_NEAR(v, 2.5, 1e-12);
}

TEST(VoxelFile, GridHashMatchesWrittenFile)
{
    const auto grid = rve::generate_voronoi_rve(fdm::LatticeSpec(2, 4), {10, 0.5, 5});
    const auto path = temp_path("grid_hash.vox");
    rve::write_voxel_file(path, grid);
    EXPECT_EQ(rve::grid_hash(grid), rve::file_hash(path));
    EXPECT_EQ(rve::voxel_bytes(grid).size(), std::filesystem::file_size(path));
    std::filesystem::remove(path);
}

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tthom/homog/elastic.hpp"
#include "tthom/rve/voxel_grid.hpp"

// Command implementations behind the tthom executable. Each returns plain
// data (a JSON run record or benchmark rows); writing and exit codes are the
// caller's business.
namespace tthom::app {

using Json = nlohmann::json;

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kRecordSchemaVersion = 1;

enum ExitCode : int { kExitOk = 0, kExitNotConverged = 2, kExitInputError = 3 };

enum class Physics { thermal, elastic };
enum class Method { tt, full };

Physics parse_physics(const std::string& s);
Method parse_method(const std::string& s);
std::string to_string(Physics p);
std::string to_string(Method m);

struct RveOptions {
    std::optional<std::filesystem::path> file; // read instead of generating
    int dim = 2;
    int bits = 6;
    std::size_t n_point = 100;
    double v_f = 0.5;
    std::uint64_t seed = 0;
    bool layered45 = false;
};

struct Rve {
    rve::VoxelGrid grid;
    std::string hash;   // FNV-1a of the voxel file bytes
    std::string source; // file path or "generated"
};

rve::VoxelGrid generate_rve(const RveOptions& opt);
Rve load_rve(const RveOptions& opt);

struct Phases {
    double kappa_a = 1.0;
    double kappa_b = 0.5;
    double young_a = 1.0;
    double young_b = 0.5;
    double poisson = 0.3;

    homog::Lame lame_a() const { return homog::lame_from_engineering(young_a, poisson); }
    homog::Lame lame_b() const { return homog::lame_from_engineering(young_b, poisson); }
};

struct SolveOptions {
    Method method = Method::tt;
    std::size_t max_rank = tt::unbounded_rank;
    double eps = 0.0;
    double tol = 1e-8;
    int max_sweeps = 30;

    tt::TruncationPolicy policy() const { return {eps, max_rank}; }
};

// Runs one homogenization and returns its record. The effective tensor is
// under outputs.kappa (thermal, d x d rows) or outputs.C (elastic, flat d^4)
// with outputs.voigt.
Json homogenize(Physics physics, const Rve& rve, const Phases& phases, const SolveOptions& opt);

// 0 when every solve converged; a rank-capped TT run that plateaus is not a
// failure because the tolerance is unreachable by construction.
int exit_status(const Json& record);

struct RankSearchOptions {
    double eps = 1e-5;
    double target = 0.01;
    std::size_t rank_limit = 64;
    double tol = 1e-8;
    int max_sweeps = 30;
};

// Raises the common rank cap of the phase indicator and the solution from 1
// until the relative Frobenius error against the reference (analytic for the
// layered thermal cell, full-rank otherwise) is within the target.
Json rank_search(Physics physics, const Rve& rve, const Phases& phases, const RankSearchOptions& opt);

struct BenchmarkOptions {
    int dim = 2;
    std::vector<int> bits{5, 6, 7, 8};
    std::size_t max_rank = 5;
    double eps = 1e-5;
    std::size_t n_point = 100;
    double v_f = 0.5;
    std::uint64_t seed = 1;
    int max_sweeps = 30;
};

struct BenchmarkRow {
    int bits = 0;
    std::size_t dof = 0;
    double tt_solve_seconds = 0.0;
    double tt_total_seconds = 0.0;
    double full_solve_seconds = 0.0;
    double full_total_seconds = 0.0;
    double relative_error = 0.0; // TT against full-rank

    bool operator==(const BenchmarkRow&) const = default;
};

std::vector<BenchmarkRow> benchmark(Physics physics, const Phases& phases, const BenchmarkOptions& opt);
// Comment lines (#) carry machine metadata; values use round-trip precision.
std::string benchmark_csv(const std::vector<BenchmarkRow>& rows, const Json& meta);
std::vector<BenchmarkRow> parse_benchmark_csv(const std::string& text);

Json machine_metadata();

// Writes through a sibling temporary and renames it into place.
void write_atomic(const std::filesystem::path& path, const std::string& contents);

} // namespace tthom::app

#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "tthom/app/commands.hpp"
#include "tthom/error.hpp"

using namespace tthom;
using app::Json;

namespace {

void add_rve_flags(CLI::App* cmd, app::RveOptions& opt, bool allow_file)
{
    if (allow_file)
        cmd->add_option("--rve", opt.file, "Voxel file to read instead of generating")->check(CLI::ExistingFile);
    cmd->add_option("--dim", opt.dim, "Spatial dimension")->check(CLI::Range(1, 3));
    cmd->add_option("--bits", opt.bits, "Bits per axis (N = 2^bits)")->check(CLI::Range(1, 20));
    cmd->add_option("--npoint", opt.n_point, "Voronoi seed points")->check(CLI::PositiveNumber);
    cmd->add_option("--vf", opt.v_f, "Probability of a seed labelled 0")->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--seed", opt.seed, "Generator seed");
    cmd->add_flag("--layered45", opt.layered45, "Two stripes at 45 degrees instead of Voronoi (d = 2)");
}

void add_phase_flags(CLI::App* cmd, app::Phases& p)
{
    cmd->add_option("--kappa-a", p.kappa_a, "Conductivity of phase A");
    cmd->add_option("--kappa-b", p.kappa_b, "Conductivity of phase B");
    cmd->add_option("--young-a", p.young_a, "Young's modulus of phase A");
    cmd->add_option("--young-b", p.young_b, "Young's modulus of phase B");
    cmd->add_option("--poisson", p.poisson, "Poisson ratio of both phases");
}

void emit(const std::string& text, const std::optional<std::filesystem::path>& out)
{
    if (out)
        app::write_atomic(*out, text);
    else
        std::cout << text;
}

app::Physics physics_of(const std::string& s) { return app::parse_physics(s); }

} // namespace

int main(int argc, char** argv)
{
    CLI::App cli{"Homogenization of two-phase periodic media in quantized tensor-train format"};
    cli.require_subcommand(1);
    cli.set_version_flag("--version", app::kToolVersion);

    std::optional<std::filesystem::path> out;

    app::RveOptions rve_opt;
    app::Phases phases;

    auto* rve_cmd = cli.add_subcommand("rve", "Generate or inspect a voxel file");
    rve_cmd->require_subcommand(1);
    auto* gen_cmd = rve_cmd->add_subcommand("generate", "Write a generated voxel file");
    add_rve_flags(gen_cmd, rve_opt, false);
    gen_cmd->add_option("--out", out, "Voxel file path")->required();
    std::filesystem::path inspect_path;
    auto* inspect_cmd = rve_cmd->add_subcommand("inspect", "Print the header and statistics of a voxel file");
    inspect_cmd->add_option("file", inspect_path, "Voxel file")->required()->check(CLI::ExistingFile);

    std::string physics = "thermal";
    std::string method = "tt";
    app::SolveOptions solve_opt;
    std::size_t max_rank = 0;
    auto* hom_cmd = cli.add_subcommand("homogenize", "Compute the effective tensor of one cell");
    hom_cmd->add_option("physics", physics, "thermal or elastic")->required()->check(CLI::IsMember({"thermal", "elastic"}));
    add_rve_flags(hom_cmd, rve_opt, true);
    add_phase_flags(hom_cmd, phases);
    hom_cmd->add_option("--method", method, "tt or full")->check(CLI::IsMember({"tt", "full"}));
    hom_cmd->add_option("--max-rank", max_rank, "TT rank cap (0 = none)");
    hom_cmd->add_option("--eps", solve_opt.eps, "Relative rounding threshold")->check(CLI::Range(0.0, 1.0));
    hom_cmd->add_option("--tol", solve_opt.tol, "Relative residual tolerance of the TT solver")->check(CLI::PositiveNumber);
    hom_cmd->add_option("--max-sweeps", solve_opt.max_sweeps, "TT solver sweep limit")->check(CLI::PositiveNumber);
    hom_cmd->add_option("--out", out, "Record path (default stdout)");

    app::RankSearchOptions search_opt;
    auto* search_cmd = cli.add_subcommand("rank-search", "Find the lowest rank meeting a target error");
    search_cmd->add_option("physics", physics, "thermal or elastic")->required()->check(CLI::IsMember({"thermal", "elastic"}));
    add_rve_flags(search_cmd, rve_opt, true);
    add_phase_flags(search_cmd, phases);
    search_cmd->add_option("--eps", search_opt.eps, "Relative rounding threshold")->check(CLI::Range(0.0, 1.0));
    search_cmd->add_option("--target", search_opt.target, "Relative Frobenius error target")->check(CLI::PositiveNumber);
    search_cmd->add_option("--rank-limit", search_opt.rank_limit, "Largest rank tried")->check(CLI::PositiveNumber);
    search_cmd->add_option("--tol", search_opt.tol, "Relative residual tolerance")->check(CLI::PositiveNumber);
    search_cmd->add_option("--max-sweeps", search_opt.max_sweeps, "Sweep limit")->check(CLI::PositiveNumber);
    search_cmd->add_option("--out", out, "Record path (default stdout)");

    app::BenchmarkOptions bench_opt;
    auto* bench_cmd = cli.add_subcommand("benchmark", "Time TT against full-rank over a range of lattice sizes");
    bench_cmd->add_option("physics", physics, "thermal or elastic")->check(CLI::IsMember({"thermal", "elastic"}));
    bench_cmd->add_option("--dim", bench_opt.dim, "Spatial dimension")->check(CLI::Range(1, 3));
    bench_cmd->add_option("--bits", bench_opt.bits, "Bits per axis, one run each")->delimiter(',');
    bench_cmd->add_option("--max-rank", bench_opt.max_rank, "TT rank cap")->check(CLI::PositiveNumber);
    bench_cmd->add_option("--eps", bench_opt.eps, "Relative rounding threshold")->check(CLI::Range(0.0, 1.0));
    bench_cmd->add_option("--npoint", bench_opt.n_point, "Voronoi seed points")->check(CLI::PositiveNumber);
    bench_cmd->add_option("--vf", bench_opt.v_f, "Probability of a seed labelled 0")->check(CLI::Range(0.0, 1.0));
    bench_cmd->add_option("--seed", bench_opt.seed, "Generator seed");
    bench_cmd->add_option("--max-sweeps", bench_opt.max_sweeps, "Sweep limit")->check(CLI::PositiveNumber);
    add_phase_flags(bench_cmd, phases);
    bench_cmd->add_option("--out", out, "CSV path (default stdout)");

    try {
        cli.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = cli.exit(e);
        return code == 0 ? app::kExitOk : app::kExitInputError;
    }

    try {
        if (gen_cmd->parsed()) {
            const auto grid = app::generate_rve(rve_opt);
            rve::write_voxel_file(*out, grid);
            std::cout << rve::file_hash(*out) << '\n';
            return app::kExitOk;
        }
        if (inspect_cmd->parsed()) {
            const auto grid = rve::read_voxel_file(inspect_path);
            const Json info = {
                {"hash", rve::file_hash(inspect_path)},
                {"d", grid.spec.dim},
                {"n", grid.spec.bits},
                {"N", grid.spec.nodes_per_axis()},
                {"generator", grid.meta.generator},
                {"seed", grid.meta.seed},
                {"v_f", grid.meta.v_f},
                {"n_point", grid.meta.n_point},
                {"phase_a_fraction", grid.phase_a_fraction()},
            };
            std::cout << info.dump(2) << '\n';
            return app::kExitOk;
        }
        if (hom_cmd->parsed()) {
            solve_opt.method = app::parse_method(method);
            if (max_rank > 0)
                solve_opt.max_rank = max_rank;
            const auto rve = app::load_rve(rve_opt);
            const Json record = app::homogenize(physics_of(physics), rve, phases, solve_opt);
            emit(record.dump(2) + "\n", out);
            return app::exit_status(record);
        }
        if (search_cmd->parsed()) {
            const auto rve = app::load_rve(rve_opt);
            const Json record = app::rank_search(physics_of(physics), rve, phases, search_opt);
            emit(record.dump(2) + "\n", out);
            return app::exit_status(record);
        }
        if (bench_cmd->parsed()) {
            const auto rows = app::benchmark(physics_of(physics), phases, bench_opt);
            Json meta = app::machine_metadata();
            meta["physics"] = physics;
            meta["max_rank"] = bench_opt.max_rank;
            meta["eps"] = bench_opt.eps;
            meta["seed"] = bench_opt.seed;
            meta["tool_version"] = app::kToolVersion;
            emit(app::benchmark_csv(rows, meta), out);
            return app::kExitOk;
        }
    } catch (const SolverBreakdown& e) {
        std::cerr << "solver breakdown: " << e.what() << '\n';
        return app::kExitNotConverged;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return app::kExitInputError;
    }
    return app::kExitInputError;
}

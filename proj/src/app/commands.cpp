#include "tthom/app/commands.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "tthom/error.hpp"
#include "tthom/homog/thermal.hpp"
#include "tthom/reference/full_rank.hpp"
#include "tthom/simd/kernels.hpp"

namespace tthom::app {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Json matrix_json(const Eigen::MatrixXd& m)
{
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Json report_json(const solver::SolveReport& r, const std::optional<tt::TTVector>& x)
{
    Json j = {
        {"converged", r.converged},
        {"stalled", r.stalled},
        {"final_residual", r.final_residual},
        {"residual_history", r.residual_history},
        {"iterations", r.sweeps},
        {"wall_seconds", r.wall_seconds},
    };
    if (x) {
        j["energy_history"] = r.energy_history;
        j["ranks"] = x->ranks();
        j["max_rank"] = x->max_rank();
        j["largest_local_system"] = r.largest_local_system;
    }
    return j;
}

Json rve_json(const Rve& rve)
{
    const auto& g = rve.grid;
    return {
        {"source", rve.source},
        {"hash", rve.hash},
        {"d", g.spec.dim},
        {"n", g.spec.bits},
        {"N", g.spec.nodes_per_axis()},
        {"generator", g.meta.generator},
        {"seed", g.meta.seed},
        {"v_f", g.meta.v_f},
        {"n_point", g.meta.n_point},
        {"phase_a_fraction", g.phase_a_fraction()},
    };
}

Json phases_json(Physics physics, const Phases& p)
{
    if (physics == Physics::thermal)
        return {{"kappa_a", p.kappa_a}, {"kappa_b", p.kappa_b}};
    const auto a = p.lame_a();
    const auto b = p.lame_b();
    return {
        {"young_a", p.young_a},
        {"young_b", p.young_b},
        {"poisson", p.poisson},
        {"lambda_a", a.lambda},
        {"mu_a", a.mu},
        {"lambda_b", b.lambda},
        {"mu_b", b.mu},
    };
}

Json policy_json(const tt::TruncationPolicy& p)
{
    return {{"eps", p.rel_eps}, {"max_rank", p.bounded() ? Json(p.max_rank) : Json(nullptr)}};
}

// One homogenization with its tensor kept in numeric form.
struct Outcome {
    Json record;
    Eigen::MatrixXd kappa;
    homog::ElasticityTensor C;
    bool converged = false;
};

struct Timings {
    double encode = 0.0, assemble = 0.0, solve = 0.0, evaluate = 0.0;

    Json json() const { return {{"encode", encode}, {"assemble", assemble}, {"solve", solve}, {"evaluate", evaluate}}; }
    double total() const { return encode + assemble + solve + evaluate; }
};

solver::MALSConfig mals_config(const SolveOptions& opt)
{
    solver::MALSConfig cfg;
    cfg.max_sweeps = opt.max_sweeps;
    cfg.rel_residual_tol = opt.tol;
    cfg.policy = opt.policy();
    return cfg;
}

constexpr double kFullRankTol = 1e-10;

Outcome run(Physics physics, const Rve& rve, const Phases& phases, const SolveOptions& opt)
{
    Outcome out;
    Timings t;
    Json solves = Json::array();
    Json diagnostics = Json::object();
    Json outputs = Json::object();
    const auto& grid = rve.grid;

    if (opt.method == Method::tt) {
        const auto policy = opt.policy();
        const auto cfg = mals_config(opt);
        if (physics == Physics::thermal) {
            auto t0 = Clock::now();
            const auto problem = homog::make_thermal_problem(grid, phases.kappa_a, phases.kappa_b, policy);
            t.encode = seconds_since(t0);
            t0 = Clock::now();
            const auto op = homog::assemble_thermal_operator(problem);
            t.assemble = seconds_since(t0);
            const auto sol = homog::solve_cell_thermal(problem, op.train, cfg);
            t.assemble += sol.assemble_seconds;
            t.solve = sol.solve_seconds;
            t0 = Clock::now();
            out.kappa = homog::homogenized_kappa(problem, sol.phi);
            t.evaluate = seconds_since(t0);
            for (std::size_t j = 0; j < sol.phi.size(); ++j)
                solves.push_back(report_json(sol.reports[j], sol.phi[j]));
            out.converged = sol.converged();
            diagnostics["encoding_error"] = problem.encoding_error;
            diagnostics["assembly_error"] = op.truncation_error;
            diagnostics["operator_ranks"] = op.train.ranks();
            diagnostics["kappa_ranks"] = problem.kappa.ranks();
        } else {
            auto t0 = Clock::now();
            const auto problem = homog::make_elastic_problem(grid, phases.lame_a(), phases.lame_b(), policy);
            t.encode = seconds_since(t0);
            t0 = Clock::now();
            const auto op = homog::assemble_elastic_operator(problem);
            t.assemble = seconds_since(t0);
            const auto sol = homog::solve_cell_elastic(problem, op.train, cfg);
            t.assemble += sol.assemble_seconds;
            t.solve = sol.solve_seconds;
            t0 = Clock::now();
            out.C = homog::homogenized_C(problem, sol);
            t.evaluate = seconds_since(t0);
            for (std::size_t p = 0; p < sol.xi.size(); ++p) {
                Json s = report_json(sol.reports[p], sol.xi[p]);
                s["pair"] = {sol.pairs[p].first, sol.pairs[p].second};
                solves.push_back(std::move(s));
            }
            out.converged = sol.converged();
            diagnostics["encoding_error"] = problem.encoding_error;
            diagnostics["assembly_error"] = op.truncation_error;
            diagnostics["operator_ranks"] = op.train.ranks();
        }
    } else {
        const reference::PcgOptions pcg{kFullRankTol, 0};
        const auto t0 = Clock::now();
        if (physics == Physics::thermal) {
            const auto full = reference::solve_thermal_full(grid, phases.kappa_a, phases.kappa_b, pcg);
            t.assemble = full.assemble_seconds;
            t.solve = full.solve_seconds;
            out.kappa = full.kappa;
            for (const auto& r : full.reports)
                solves.push_back(report_json(r, std::nullopt));
            out.converged = full.converged();
        } else {
            const auto full = reference::solve_elastic_full(grid, phases.lame_a(), phases.lame_b(), pcg);
            t.assemble = full.assemble_seconds;
            t.solve = full.solve_seconds;
            out.C = full.C;
            for (std::size_t p = 0; p < full.reports.size(); ++p) {
                Json s = report_json(full.reports[p], std::nullopt);
                s["pair"] = {full.pairs[p].first, full.pairs[p].second};
                solves.push_back(std::move(s));
            }
            out.converged = full.converged();
        }
        // evaluation happens inside the full-rank solve
        t.evaluate = std::max(0.0, seconds_since(t0) - t.assemble - t.solve);
    }

    if (physics == Physics::thermal) {
        outputs["kappa"] = matrix_json(out.kappa);
    } else {
        outputs["C"] = out.C.values();
        outputs["voigt"] = matrix_json(out.C.voigt());
        outputs["symmetry_defect"] = out.C.symmetry_defect();
    }

    const bool capped = opt.method == Method::tt && opt.policy().bounded();
    std::string status = out.converged ? "converged" : (capped ? "plateau" : "not_converged");
    diagnostics["solves"] = std::move(solves);
    diagnostics["seconds"] = t.json();
    diagnostics["total_seconds"] = t.total();

    Json config = {{"method", to_string(opt.method)}};
    if (opt.method == Method::tt) {
        config["policy"] = policy_json(opt.policy());
        const solver::MALSConfig cfg = mals_config(opt);
        config["mals"] = {
            {"max_sweeps", cfg.max_sweeps},
            {"rel_residual_tol", cfg.rel_residual_tol},
            {"local_solver_tol", cfg.local_solver_tol},
            {"regularization", cfg.regularization},
            {"dense_local_limit", cfg.dense_local_limit},
            {"stall_sweeps", cfg.stall_sweeps},
            {"stall_ratio", cfg.stall_ratio},
            {"seed", cfg.seed},
        };
    } else {
        config["pcg"] = {{"rel_tol", kFullRankTol}, {"preconditioner", "jacobi"}, {"deflation", "parity modes"}};
    }

    out.record = {
        {"schema_version", kRecordSchemaVersion},
        {"tool", {{"name", "tthom"}, {"version", kToolVersion}}},
        {"command", "homogenize"},
        {"physics", to_string(physics)},
        {"method", to_string(opt.method)},
        {"input", {{"rve", rve_json(rve)}, {"phases", phases_json(physics, phases)}}},
        {"config", std::move(config)},
        {"outputs", std::move(outputs)},
        {"diagnostics", std::move(diagnostics)},
        {"status", status},
        {"machine", machine_metadata()},
    };
    return out;
}

double tensor_error(Physics physics, const Outcome& got, const Outcome& ref)
{
    return physics == Physics::thermal ? homog::relative_frobenius(got.kappa, ref.kappa)
                                       : homog::relative_frobenius(got.C, ref.C);
}

std::vector<std::string> split(const std::string& line, char sep)
{
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, sep))
        out.push_back(item);
    return out;
}

} // namespace

Physics parse_physics(const std::string& s)
{
    if (s == "thermal")
        return Physics::thermal;
    if (s == "elastic")
        return Physics::elastic;
    throw std::invalid_argument("unknown physics '" + s + "' (thermal or elastic)");
}

Method parse_method(const std::string& s)
{
    if (s == "tt")
        return Method::tt;
    if (s == "full")
        return Method::full;
    throw std::invalid_argument("unknown method '" + s + "' (tt or full)");
}

std::string to_string(Physics p) { return p == Physics::thermal ? "thermal" : "elastic"; }
std::string to_string(Method m) { return m == Method::tt ? "tt" : "full"; }

rve::VoxelGrid generate_rve(const RveOptions& opt)
{
    const fdm::LatticeSpec spec(opt.dim, opt.bits);
    if (opt.layered45)
        return rve::layered_rve_45(spec);
    return rve::generate_voronoi_rve(spec, {opt.n_point, opt.v_f, opt.seed});
}

Rve load_rve(const RveOptions& opt)
{
    Rve out;
    if (opt.file) {
        out.grid = rve::read_voxel_file(*opt.file);
        out.hash = rve::file_hash(*opt.file);
        out.source = opt.file->string();
    } else {
        out.grid = generate_rve(opt);
        out.hash = rve::grid_hash(out.grid);
        out.source = "generated";
    }
    return out;
}

Json homogenize(Physics physics, const Rve& rve, const Phases& phases, const SolveOptions& opt)
{
    return run(physics, rve, phases, opt).record;
}

int exit_status(const Json& record)
{
    if (record.value("command", "") == "rank-search")
        return record.at("lowest_rank").is_null() ? kExitNotConverged : kExitOk;
    return record.value("status", "") == "not_converged" ? kExitNotConverged : kExitOk;
}

Json rank_search(Physics physics, const Rve& rve, const Phases& phases, const RankSearchOptions& opt)
{
    const auto t0 = Clock::now();
    Outcome ref;
    std::string ref_kind;
    if (physics == Physics::thermal && rve.grid.meta.generator == rve::kLayeredGenerator) {
        ref.kappa = homog::analytic_layered_kappa(phases.kappa_a, phases.kappa_b);
        ref_kind = "analytic";
    } else {
        SolveOptions full;
        full.method = Method::full;
        ref = run(physics, rve, phases, full);
        ref_kind = "full";
        if (!ref.converged)
            throw SolverBreakdown("rank search: the full-rank reference did not converge");
    }

    Json curve = Json::array();
    Json lowest = nullptr;
    for (std::size_t r = 1; r <= opt.rank_limit; ++r) {
        SolveOptions so;
        so.max_rank = r;
        so.eps = opt.eps;
        so.tol = opt.tol;
        so.max_sweeps = opt.max_sweeps;
        const Outcome got = run(physics, rve, phases, so);
        const double err = tensor_error(physics, got, ref);
        curve.push_back({
            {"rank", r},
            {"error", err},
            {"status", got.record.at("status")},
            {"seconds", got.record.at("diagnostics").at("total_seconds")},
        });
        if (err <= opt.target) {
            lowest = r;
            break;
        }
    }

    Json reference = {{"kind", ref_kind}};
    if (physics == Physics::thermal)
        reference["kappa"] = matrix_json(ref.kappa);
    else
        reference["C"] = ref.C.values();
    return {
        {"schema_version", kRecordSchemaVersion},
        {"tool", {{"name", "tthom"}, {"version", kToolVersion}}},
        {"command", "rank-search"},
        {"physics", to_string(physics)},
        {"input", {{"rve", rve_json(rve)}, {"phases", phases_json(physics, phases)}}},
        {"config",
         {{"eps", opt.eps},
          {"target_error", opt.target},
          {"rank_limit", opt.rank_limit},
          {"tol", opt.tol},
          {"max_sweeps", opt.max_sweeps},
          {"error_norm", "relative Frobenius"}}},
        {"reference", std::move(reference)},
        {"curve", std::move(curve)},
        {"lowest_rank", lowest},
        {"seconds", seconds_since(t0)},
        {"machine", machine_metadata()},
    };
}

std::vector<BenchmarkRow> benchmark(Physics physics, const Phases& phases, const BenchmarkOptions& opt)
{
    std::vector<BenchmarkRow> rows;
    for (int bits : opt.bits) {
        RveOptions ro;
        ro.dim = opt.dim;
        ro.bits = bits;
        ro.n_point = opt.n_point;
        ro.v_f = opt.v_f;
        ro.seed = opt.seed;
        const Rve rve = load_rve(ro);

        SolveOptions tt_opt;
        tt_opt.max_rank = opt.max_rank;
        tt_opt.eps = opt.eps;
        tt_opt.max_sweeps = opt.max_sweeps;
        const Outcome tt_run = run(physics, rve, phases, tt_opt);
        SolveOptions full_opt;
        full_opt.method = Method::full;
        const Outcome full_run = run(physics, rve, phases, full_opt);

        BenchmarkRow row;
        row.bits = bits;
        row.dof = rve.grid.spec.num_nodes() * (physics == Physics::elastic ? std::size_t(opt.dim) : 1);
        const auto& tt_sec = tt_run.record.at("diagnostics").at("seconds");
        const auto& full_sec = full_run.record.at("diagnostics").at("seconds");
        row.tt_solve_seconds = tt_sec.at("solve");
        row.tt_total_seconds = tt_run.record.at("diagnostics").at("total_seconds");
        row.full_solve_seconds = full_sec.at("solve");
        row.full_total_seconds = full_run.record.at("diagnostics").at("total_seconds");
        row.relative_error = tensor_error(physics, tt_run, full_run);
        rows.push_back(row);
    }
    return rows;
}

std::string benchmark_csv(const std::vector<BenchmarkRow>& rows, const Json& meta)
{
    std::ostringstream out;
    for (const auto& [key, value] : meta.items())
        out << "# " << key << '=' << (value.is_string() ? value.get<std::string>() : value.dump()) << '\n';
    out << "bits,dof,tt_solve_seconds,tt_total_seconds,full_solve_seconds,full_total_seconds,relative_error\n";
    char buf[512];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%d,%zu,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.bits, r.dof, r.tt_solve_seconds,
                      r.tt_total_seconds, r.full_solve_seconds, r.full_total_seconds, r.relative_error);
        out << buf;
    }
    return out.str();
}

std::vector<BenchmarkRow> parse_benchmark_csv(const std::string& text)
{
    std::vector<BenchmarkRow> rows;
    std::istringstream in(text);
    std::string line;
    bool header = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#')
            continue;
        if (!header) {
            header = true;
            continue;
        }
        const auto f = split(line, ',');
        if (f.size() != 7)
            throw FormatError("benchmark csv: expected 7 fields, got " + std::to_string(f.size()));
        try {
            BenchmarkRow r;
            r.bits = std::stoi(f[0]);
            r.dof = std::stoull(f[1]);
            r.tt_solve_seconds = std::stod(f[2]);
            r.tt_total_seconds = std::stod(f[3]);
            r.full_solve_seconds = std::stod(f[4]);
            r.full_total_seconds = std::stod(f[5]);
            r.relative_error = std::stod(f[6]);
            rows.push_back(r);
        } catch (const std::logic_error&) {
            throw FormatError("benchmark csv: malformed row '" + line + "'");
        }
    }
    return rows;
}

Json machine_metadata()
{
    return {
        {"simd", std::string(simd::isa_name(simd::active().isa))},
        {"hardware_threads", std::thread::hardware_concurrency()},
        {"compiler", __VERSION__},
    };
}

void write_atomic(const std::filesystem::path& path, const std::string& contents)
{
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw FormatError("cannot open " + tmp.string() + " for writing");
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out)
            throw FormatError("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

} // namespace tthom::app

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "topoforge/experiment.hpp"
#include "topoforge/kkt_oracle.hpp"

using namespace topoforge;
namespace fs = std::filesystem;

namespace {

ExperimentConfig load_or_default(const std::string& path) {
    if (path.empty()) {
        ExperimentConfig config;
        config.validate();
        return config;
    }
    return load_config(path);
}

EvalContext make_context(const ExperimentConfig& c) {
    return EvalContext(c.nx, c.ny, c.material, c.filter_radius, c.local_radius, c.alpha, c.p,
                       c.beta_target);
}

// --angle/--ix/--iy into a load setting; region-centered node by default
ProblemSetting build_setting(const ExperimentConfig& config, const Mesh& mesh, double angle,
                             int ix, int iy) {
    if (config.case_kind == CaseKind::TipAngle)
        return ProblemSetting{CaseKind::TipAngle, angle, mesh.node_id(mesh.nx(), mesh.ny() / 2)};
    const LoadRegion region = config.region(mesh);
    if (ix < 0) ix = static_cast<int>(std::lround(0.5 * (region.x0 + region.x1)));
    if (iy < 0) iy = static_cast<int>(std::lround(0.5 * (region.y0 + region.y1)));
    return ProblemSetting{CaseKind::RegionAngle, angle, mesh.node_id(ix, iy)};
}

void warn_extrapolation(const ExperimentConfig& config, const Mesh& mesh,
                        const ProblemSetting& s) {
    const double hi = config.case_kind == CaseKind::TipAngle ? std::numbers::pi
                                                             : 2.0 * std::numbers::pi;
    if (s.angle < 0.0 || s.angle > hi)
        std::fprintf(stderr, "warning: angle %g outside the sampled support [0, %g]\n", s.angle,
                     hi);
    if (config.case_kind == CaseKind::RegionAngle && !config.region(mesh).contains(mesh, s.node))
        std::fprintf(stderr, "warning: load node outside the sampled region\n");
}

void print_summary(const ExperimentConfig& config, Strategy strategy,
                   const CampaignSummary& summary) {
    std::printf("%-22s %22s %22s %22s\n", "variant", "median_gap", "failure_rate",
                "test_metric");
    std::printf("%-22s %10.4g (%8.3g) %10.4g (%8.3g) %10.4g (%8.3g)\n",
                variant_tag(config, strategy).c_str(), summary.median_gap.mean,
                summary.median_gap.stddev, summary.failure_rate.mean,
                summary.failure_rate.stddev, summary.test_metric.mean,
                summary.test_metric.stddev);
    std::printf("failures: %d over %d seeds\n", summary.total_failures, config.seeds);
}

int cmd_solve(const ExperimentConfig& config, double angle, int ix, int iy,
              const std::string& out_dir, bool pgm) {
    EvalContext ctx = make_context(config);
    const ProblemSetting setting = build_setting(config, ctx.mesh(), angle, ix, iy);
    const DataRecord rec = caching_oracle(ctx, config)(setting, Provenance::Static);
    fs::create_directories(out_dir);
    const fs::path record_path = fs::path(out_dir) / "solve.tdto";
    write_records(record_path.string(), {to_solve_record(rec, ctx.mesh())});
    if (pgm) {
        const fs::path pgm_path = fs::path(out_dir) / "solve.pgm";
        write_pgm(pgm_path.string(), ctx.mesh(), physical_density(ctx, rec.x));
        std::printf("density image: %s\n", pgm_path.string().c_str());
    }
    std::printf("record: %s\ncompliance: %.10g\nequilibrium solves: %lld\n",
                record_path.string().c_str(), rec.f, static_cast<long long>(rec.cost));
    return 0;
}

int cmd_score(const ExperimentConfig& config, const std::string& model_path, double angle,
              int ix, int iy) {
    EvalContext ctx = make_context(config);
    const GeneratorParams model = read_model(model_path);
    const ProblemSetting setting = build_setting(config, ctx.mesh(), angle, ix, iy);
    if (model.arch.input_dim() != ProblemSetting::input_dim(config.case_kind))
        throw std::runtime_error("model input dimension does not match the configured case");
    if (model.arch.output_dim() != ctx.mesh().n_elements())
        throw std::runtime_error("model output dimension does not match the mesh");
    const Eigen::VectorXd x = forward(model, setting.encode(ctx.mesh()));
    BudgetLedger meter;
    const DeviationScore score = deviation(ctx, setting, x, config.kkt, meter);
    std::printf("deviation: %.10g\n", score.d);
    std::printf("stationarity |grad L|^2: %.10g\n", score.grad_l_squared);
    std::printf("g0: %.10g\ng1: %.10g\n", score.g0, score.g1);
    std::printf("mu0: %.10g\nmu1: %.10g\n", score.multipliers.mu0, score.multipliers.mu1);
    std::printf("equilibrium solves: %lld\n", static_cast<long long>(score.fea_cost));
    return 0;
}

int cmd_run(const ExperimentConfig& config, const std::string& out_dir) {
    EvalContext ctx = make_context(config);
    const CampaignSummary summary = run_campaign(ctx, config, config.strategy, out_dir);
    print_summary(config, config.strategy, summary);
    return 0;
}

int cmd_eval(const ExperimentConfig& config, const std::string& model_path,
             const std::string& truth_path) {
    EvalContext ctx = make_context(config);
    const GeneratorParams model = read_model(model_path);
    const std::vector<SolveRecord> raw = read_records(truth_path);
    std::vector<DataRecord> truth;
    int skipped = 0;
    for (const SolveRecord& rec : raw) {
        if (rec.x.size() != ctx.mesh().n_elements() ||
            rec.setting.size() != static_cast<std::size_t>(
                                      ProblemSetting::raw_dim(config.case_kind))) {
            ++skipped;
            continue;
        }
        truth.push_back(from_solve_record(rec, config.case_kind, ctx.mesh(),
                                          Provenance::Static));
    }
    if (skipped)
        std::fprintf(stderr, "warning: skipped %d record(s) not matching the config\n", skipped);
    const MetricsReport report = evaluate_model(ctx, model, truth);
    double test_sum = 0.0;
    for (const PointEval& pt : report.points) test_sum += pt.f_gen;
    std::printf("test points: %zu (skipped %d)\n", report.points.size(), skipped);
    std::printf("test metric (sum of generated compliance): %.10g\n", test_sum);
    std::printf("median gap: %.10g\nmean gap: %.10g\n", report.median_gap, report.mean_gap);
    std::printf("failure rate (gap > %g): %.6g\n", report.failure_threshold,
                report.failure_rate);
    std::printf("mean g0 violation (violating cases): generated %.6g (%d), truth %.6g (%d)\n",
                report.gen_g0_violation, report.gen_g0_violations, report.true_g0_violation,
                report.true_g0_violations);
    std::printf("mean g1 violation (violating cases): generated %.6g (%d), truth %.6g (%d)\n",
                report.gen_g1_violation, report.gen_g1_violations, report.true_g1_violation,
                report.true_g1_violations);
    return 0;
}

int cmd_generate(const ExperimentConfig& config, const std::string& model_path, double angle,
                 int ix, int iy, const std::string& out_dir) {
    EvalContext ctx = make_context(config);
    const GeneratorParams model = read_model(model_path);
    if (model.arch.input_dim() != ProblemSetting::input_dim(config.case_kind))
        throw std::runtime_error("model input dimension does not match the configured case");
    if (model.arch.output_dim() != ctx.mesh().n_elements())
        throw std::runtime_error("model output dimension does not match the mesh");
    const ProblemSetting setting = build_setting(config, ctx.mesh(), angle, ix, iy);
    warn_extrapolation(config, ctx.mesh(), setting);
    const Eigen::VectorXd input = setting.encode(ctx.mesh());
    const Eigen::VectorXd x = forward(model, input);
    const double latency = forward_latency_seconds(model, input);
    fs::create_directories(out_dir);
    const fs::path pgm_path = fs::path(out_dir) / "generated.pgm";
    write_pgm(pgm_path.string(), ctx.mesh(), physical_density(ctx, x));
    std::printf("design: %s\n", pgm_path.string().c_str());
    std::printf("latency: %.6f s (median of 100 after 10 warmup)\n", latency);
    return 0;
}

int cmd_export_pgm(const ExperimentConfig& config, const std::string& records_path, int index,
                   const std::string& out_path) {
    EvalContext ctx = make_context(config);
    const std::vector<SolveRecord> records = read_records(records_path);
    if (index < 0 || static_cast<std::size_t>(index) >= records.size())
        throw std::runtime_error("record index " + std::to_string(index) + " out of range (" +
                                 std::to_string(records.size()) + " records)");
    const SolveRecord& rec = records[static_cast<std::size_t>(index)];
    if (rec.x.size() != ctx.mesh().n_elements())
        throw std::runtime_error("record design size does not match the configured mesh");
    write_pgm(out_path, ctx.mesh(), physical_density(ctx, rec.x));
    std::printf("density image: %s\n", out_path.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"one-shot topology generator: solvers, scoring, and learning campaigns"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out", model_path, truth_path, records_path;
    std::string out_image = "out.pgm", strategy_name, weighted;
    double angle = std::numbers::pi / 2;
    int ix = -1, iy = -1, index = 0;
    long long seed = -1, seeds = -1;
    bool pgm = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "configuration file");
        cmd->add_option("--seed", seed, "base random seed (overrides config)");
    };
    auto add_setting = [&](CLI::App* cmd) {
        cmd->add_option("--angle", angle, "load angle in radians");
        cmd->add_option("--ix", ix, "load node x index (positioned case)");
        cmd->add_option("--iy", iy, "load node y index (positioned case)");
    };

    CLI::App* solve = app.add_subcommand("solve", "optimize one load setting");
    add_common(solve);
    add_setting(solve);
    solve->add_option("--out", out_dir, "output directory");
    solve->add_flag("--pgm", pgm, "also export the density image");

    CLI::App* score = app.add_subcommand("score", "optimality deviation of a generated design");
    add_common(score);
    add_setting(score);
    score->add_option("--model", model_path, "generator model file")->required();

    CLI::App* run = app.add_subcommand("run", "learning campaign over seeds");
    add_common(run);
    run->add_option("--seeds", seeds, "number of seeds (overrides config)");
    run->add_option("--strategy", strategy_name, "static | heuristic | theory")
        ->check(CLI::IsMember({"static", "heuristic", "theory"}));
    run->add_option("--weighted-loss", weighted, "on | off")
        ->check(CLI::IsMember({"on", "off"}));
    run->add_option("--out", out_dir, "output directory");

    CLI::App* eval = app.add_subcommand("eval", "score a model against ground-truth records");
    add_common(eval);
    eval->add_option("--model", model_path, "generator model file")->required();
    eval->add_option("--truth", truth_path, "ground-truth record file")->required();

    CLI::App* generate = app.add_subcommand("generate", "one forward pass to a density image");
    add_common(generate);
    add_setting(generate);
    generate->add_option("--model", model_path, "generator model file")->required();
    generate->add_option("--out", out_dir, "output directory");

    CLI::App* export_pgm = app.add_subcommand("export-pgm", "record file to density image");
    add_common(export_pgm);
    export_pgm->add_option("--records", records_path, "record file")->required();
    export_pgm->add_option("--index", index, "record index within the file");
    export_pgm->add_option("--out", out_image, "output image path");

    CLI11_PARSE(app, argc, argv);

    try {
        ExperimentConfig config = load_or_default(config_path);
        if (seed >= 0) config.seed = static_cast<std::uint64_t>(seed);
        if (seeds >= 0) config.seeds = static_cast<int>(seeds);
        if (!strategy_name.empty()) config.strategy = strategy_from_string(strategy_name);
        if (!weighted.empty()) config.weighted_loss = weighted == "on";
        config.validate();

        if (app.got_subcommand(solve)) return cmd_solve(config, angle, ix, iy, out_dir, pgm);
        if (app.got_subcommand(score)) return cmd_score(config, model_path, angle, ix, iy);
        if (app.got_subcommand(run)) return cmd_run(config, out_dir);
        if (app.got_subcommand(eval)) return cmd_eval(config, model_path, truth_path);
        if (app.got_subcommand(generate))
            return cmd_generate(config, model_path, angle, ix, iy, out_dir);
        if (app.got_subcommand(export_pgm))
            return cmd_export_pgm(config, records_path, index, out_image);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}

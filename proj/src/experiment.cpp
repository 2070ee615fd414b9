#include "topoforge/experiment.hpp"

#include <bit>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "topoforge/rng.hpp"

namespace fs = std::filesystem;

namespace topoforge {

namespace {

std::string hex16(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
    return buf;
}

std::uint64_t hash_doubles(std::uint64_t h, const std::vector<double>& values) {
    for (double v : values) {
        const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
        for (int i = 0; i < 8; ++i) {
            h ^= (bits >> (8 * i)) & 0xff;
            h *= 0x100000001b3ull;
        }
    }
    return h;
}

}  // namespace

std::uint64_t setting_hash(const ProblemSetting& setting, const Mesh& mesh) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    h ^= static_cast<std::uint64_t>(setting.kind);
    h *= 0x100000001b3ull;
    return hash_doubles(h, setting.raw(mesh));
}

SolveRecord to_solve_record(const DataRecord& rec, const Mesh& mesh) {
    SolveRecord out;
    out.setting = rec.setting.raw(mesh);
    out.x = rec.x;
    out.f = rec.f;
    out.grad_f = rec.grad_f;
    out.fea_count = rec.cost;
    return out;
}

DataRecord from_solve_record(const SolveRecord& rec, CaseKind kind, const Mesh& mesh,
                             Provenance provenance) {
    DataRecord out;
    out.setting = setting_from_raw(kind, mesh, rec.setting);
    out.x = rec.x;
    out.f = rec.f;
    out.grad_f = rec.grad_f;
    out.cost = rec.fea_count;
    out.provenance = provenance;
    return out;
}

SolveOracle caching_oracle(EvalContext& ctx, const ExperimentConfig& config) {
    const fs::path scope_dir =
        fs::path(config.cache_dir) / ("scope_" + hex16(solver_scope_hash(config)));
    fs::create_directories(scope_dir);
    const SolveOracle inner = direct_oracle(ctx, config);
    const CaseKind kind = config.case_kind;
    const Mesh& mesh = ctx.mesh();
    return [scope_dir, inner, kind, &mesh](const ProblemSetting& setting,
                                           Provenance provenance) {
        const fs::path file = scope_dir / (hex16(setting_hash(setting, mesh)) + ".tdto");
        if (fs::exists(file)) {
            const std::vector<SolveRecord> cached = read_records(file.string());
            if (cached.size() != 1 || cached[0].setting != setting.raw(mesh))
                throw std::runtime_error("ground-truth cache corrupt: " + file.string());
            return from_solve_record(cached[0], kind, mesh, provenance);
        }
        DataRecord rec = inner(setting, provenance);
        const fs::path tmp = file.string() + ".tmp";
        write_records(tmp.string(), {to_solve_record(rec, mesh)});
        fs::rename(tmp, file);
        return rec;
    };
}

Eigen::VectorXd physical_density(const EvalContext& ctx, const Eigen::VectorXd& x) {
    return project(ctx.kernel().apply_filter(x), ctx.beta_target());
}

std::vector<DataRecord> ground_truth_test_set(EvalContext& ctx, const ExperimentConfig& config,
                                              std::uint64_t seed, const SolveOracle& oracle) {
    const std::vector<ProblemSetting> st = draw_settings(
        config.case_kind, ctx.mesh(), config.region(ctx.mesh()), seed, "st", config.n_test);
    std::vector<DataRecord> out;
    out.reserve(st.size());
    for (const ProblemSetting& s : st) out.push_back(oracle(s, Provenance::Static));
    return out;
}

std::string variant_tag(const ExperimentConfig& config, Strategy strategy) {
    std::string tag = to_string(strategy);
    if (!config.weighted_loss) tag += "_unweighted";
    return tag;
}

SeedOutcome run_seed(EvalContext& ctx, const ExperimentConfig& config, Strategy strategy,
                     std::uint64_t seed, const fs::path& out_dir) {
    const SolveOracle oracle = caching_oracle(ctx, config);
    const std::string stem = variant_tag(config, strategy) + "_seed" + std::to_string(seed);
    std::unique_ptr<HistoryWriter> history;
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        history = std::make_unique<HistoryWriter>((out_dir / (stem + "_history.csv")).string());
    }

    SeedOutcome outcome;
    outcome.seed = seed;
    outcome.run = run_strategy(ctx, config, strategy, seed, oracle, history.get());

    const std::vector<DataRecord> truth = ground_truth_test_set(ctx, config, seed, oracle);
    outcome.report = evaluate_model(ctx, outcome.run.model, truth);

    if (!out_dir.empty()) {
        write_model((out_dir / (stem + "_model.bin")).string(), outcome.run.model);
        std::vector<SolveRecord> dataset;
        dataset.reserve(outcome.run.dataset.records.size());
        for (const DataRecord& rec : outcome.run.dataset.records)
            dataset.push_back(to_solve_record(rec, ctx.mesh()));
        write_records((out_dir / (stem + "_dataset.tdto")).string(), dataset);

        const fs::path truth_file =
            out_dir / ("test_gt_seed" + std::to_string(seed) + ".tdto");
        if (!fs::exists(truth_file)) {
            std::vector<SolveRecord> gt;
            gt.reserve(truth.size());
            for (const DataRecord& rec : truth) gt.push_back(to_solve_record(rec, ctx.mesh()));
            write_records(truth_file.string(), gt);
        }
    }
    return outcome;
}

CampaignSummary run_campaign(EvalContext& ctx, const ExperimentConfig& config,
                             Strategy strategy, const fs::path& out_dir) {
    CampaignSummary summary;
    summary.strategy = strategy;

    std::ofstream rows;
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        const fs::path path = out_dir / ("summary_" + variant_tag(config, strategy) + ".csv");
        rows.open(path);
        if (!rows) throw std::runtime_error("cannot write " + path.string());
        rows << "seed,median_gap,mean_gap,failure_rate,n_failures,final_test_metric,"
                "acquired,remaining_budget\n";
    }

    std::vector<double> medians, means, rates, metrics;
    for (int i = 0; i < config.seeds; ++i) {
        const std::uint64_t seed = config.seed + static_cast<std::uint64_t>(i);
        SeedOutcome outcome = run_seed(ctx, config, strategy, seed, out_dir);
        medians.push_back(outcome.report.median_gap);
        means.push_back(outcome.report.mean_gap);
        rates.push_back(outcome.report.failure_rate);
        metrics.push_back(outcome.run.final_test_metric);
        summary.total_failures += outcome.report.n_failures;
        if (rows) {
            rows << seed << ',' << format_double(outcome.report.median_gap) << ','
                 << format_double(outcome.report.mean_gap) << ','
                 << format_double(outcome.report.failure_rate) << ','
                 << outcome.report.n_failures << ','
                 << format_double(outcome.run.final_test_metric) << ','
                 << outcome.run.history.size() << ','
                 << format_double(outcome.run.remaining) << '\n';
            rows.flush();
        }
        summary.outcomes.push_back(std::move(outcome));
    }
    summary.median_gap = seed_stats(medians);
    summary.mean_gap = seed_stats(means);
    summary.failure_rate = seed_stats(rates);
    summary.test_metric = seed_stats(metrics);
    return summary;
}

}  // namespace topoforge

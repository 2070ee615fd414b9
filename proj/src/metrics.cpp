#include "topoforge/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "topoforge/budget.hpp"
#include "topoforge/problem.hpp"

namespace topoforge {

double median(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("median of empty set");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

SeedStats seed_stats(const std::vector<double>& values) {
    if (values.empty()) throw std::invalid_argument("stats of empty set");
    SeedStats out;
    for (double v : values) out.mean += v;
    out.mean /= double(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - out.mean) * (v - out.mean);
        out.stddev = std::sqrt(ss / double(values.size() - 1));
    }
    return out;
}

MetricsReport evaluate_model(EvalContext& ctx, const GeneratorParams& model,
                             const std::vector<DataRecord>& truth,
                             double failure_threshold) {
    if (truth.empty()) throw std::invalid_argument("no truth records to evaluate");
    MetricsReport report;
    report.failure_threshold = failure_threshold;
    report.points.reserve(truth.size());

    BudgetLedger meter;  // throwaway: evaluation never counts against a run
    const Mesh& mesh = ctx.mesh();
    std::vector<double> gaps;
    gaps.reserve(truth.size());

    for (const DataRecord& rec : truth) {
        const Eigen::VectorXd load = realize_load(rec.setting, mesh);
        const Eigen::VectorXd x_gen = forward(model, rec.setting.encode(mesh));
        const DesignState gen =
            eval_design(ctx, x_gen, load, ctx.beta_target(), meter, SolveKind::Scoring);
        const DesignState ref =
            eval_design(ctx, rec.x, load, ctx.beta_target(), meter, SolveKind::Scoring);

        PointEval pt;
        pt.f_gen = gen.f;
        pt.f_true = ref.f;
        pt.gap = gen.f - ref.f;
        pt.g0_gen = gen.g0;
        pt.g1_gen = gen.g1;
        pt.g0_true = ref.g0;
        pt.g1_true = ref.g1;
        pt.failed = pt.gap > failure_threshold;

        if (pt.failed) ++report.n_failures;
        if (pt.g0_gen > 0) {
            report.gen_g0_violation += pt.g0_gen;
            ++report.gen_g0_violations;
        }
        if (pt.g1_gen > 0) {
            report.gen_g1_violation += pt.g1_gen;
            ++report.gen_g1_violations;
        }
        if (pt.g0_true > 0) {
            report.true_g0_violation += pt.g0_true;
            ++report.true_g0_violations;
        }
        if (pt.g1_true > 0) {
            report.true_g1_violation += pt.g1_true;
            ++report.true_g1_violations;
        }
        gaps.push_back(pt.gap);
        report.mean_gap += pt.gap;
        report.points.push_back(pt);
    }

    const double n = double(report.points.size());
    report.failure_rate = double(report.n_failures) / n;
    report.mean_gap /= n;
    report.median_gap = median(std::move(gaps));
    if (report.gen_g0_violations) report.gen_g0_violation /= report.gen_g0_violations;
    if (report.gen_g1_violations) report.gen_g1_violation /= report.gen_g1_violations;
    if (report.true_g0_violations) report.true_g0_violation /= report.true_g0_violations;
    if (report.true_g1_violations) report.true_g1_violation /= report.true_g1_violations;
    return report;
}

double forward_latency_seconds(const GeneratorParams& model, const Eigen::VectorXd& input,
                               int warmup, int reps) {
    if (reps < 1) throw std::invalid_argument("latency needs at least one rep");
    using clock = std::chrono::steady_clock;
    volatile double sink = 0.0;  // keep the optimizer honest
    for (int i = 0; i < warmup; ++i) sink = sink + forward(model, input).sum();
    std::vector<double> times(static_cast<std::size_t>(reps));
    for (double& t : times) {
        const auto t0 = clock::now();
        sink = sink + forward(model, input).sum();
        t = std::chrono::duration<double>(clock::now() - t0).count();
    }
    (void)sink;
    return median(std::move(times));
}

}  // namespace topoforge

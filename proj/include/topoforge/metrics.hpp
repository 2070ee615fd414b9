#pragma once

#include <vector>

#include "topoforge/active_learning.hpp"
#include "topoforge/design_eval.hpp"
#include "topoforge/generator.hpp"

namespace topoforge {

// one generated design checked against its ground-truth optimum
struct PointEval {
    double f_gen = 0.0;
    double f_true = 0.0;
    double gap = 0.0;  // f_gen - f_true
    double g0_gen = 0.0;
    double g1_gen = 0.0;
    double g0_true = 0.0;
    double g1_true = 0.0;
    bool failed = false;
};

struct MetricsReport {
    std::vector<PointEval> points;
    double failure_threshold = 0.0;
    int n_failures = 0;
    double failure_rate = 0.0;
    double median_gap = 0.0;  // over all points, failures included
    double mean_gap = 0.0;
    // positive-part constraint violations, averaged over violating points only
    double gen_g0_violation = 0.0;
    double gen_g1_violation = 0.0;
    double true_g0_violation = 0.0;
    double true_g1_violation = 0.0;
    int gen_g0_violations = 0;
    int gen_g1_violations = 0;
    int true_g0_violations = 0;
    int true_g1_violations = 0;
};

// midpoint-averaged median; throws on empty input
double median(std::vector<double> values);

struct SeedStats {
    double mean = 0.0;
    double stddev = 0.0;  // sample standard deviation, 0 for a single seed
};

SeedStats seed_stats(const std::vector<double>& values);

// runs the generator on every truth setting and compares designs at the
// target projection sharpness; FEA here is instrumentation, never budgeted
MetricsReport evaluate_model(EvalContext& ctx, const GeneratorParams& model,
                             const std::vector<DataRecord>& truth,
                             double failure_threshold = 1000.0);

// median wall-clock seconds of a single forward pass
double forward_latency_seconds(const GeneratorParams& model, const Eigen::VectorXd& input,
                               int warmup = 10, int reps = 100);

}  // namespace topoforge

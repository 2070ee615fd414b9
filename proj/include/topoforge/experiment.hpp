#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "topoforge/active_learning.hpp"
#include "topoforge/config.hpp"
#include "topoforge/io.hpp"
#include "topoforge/metrics.hpp"

namespace topoforge {

// stable identity of a load setting for cache filenames
std::uint64_t setting_hash(const ProblemSetting& setting, const Mesh& mesh);

// conversions between in-memory records and the on-disk dataset format
SolveRecord to_solve_record(const DataRecord& rec, const Mesh& mesh);
DataRecord from_solve_record(const SolveRecord& rec, CaseKind kind, const Mesh& mesh,
                             Provenance provenance);

/// Ground-truth oracle backed by a disk cache under config.cache_dir. Keys
/// combine the solver-scope hash (anything that changes the optimum) with
/// the setting, so unrelated configs never share entries and every strategy
/// or variant under one scope reuses the same solves. Records replay with
/// their stored cost, which keeps budget accounting identical to a fresh
/// run. Files land via rename, so an interrupted solve leaves no entry.
SolveOracle caching_oracle(EvalContext& ctx, const ExperimentConfig& config);

// x -> filtered -> projected at the context's target sharpness
Eigen::VectorXd physical_density(const EvalContext& ctx, const Eigen::VectorXd& x);

// the seed's ground-truth test set (stream "st"), solved through the oracle
std::vector<DataRecord> ground_truth_test_set(EvalContext& ctx, const ExperimentConfig& config,
                                              std::uint64_t seed, const SolveOracle& oracle);

struct SeedOutcome {
    std::uint64_t seed = 0;
    RunResult run;
    MetricsReport report;
};

/// One strategy on one seed: runs the mechanism, persists artifacts when
/// out_dir is nonempty (history CSV flushed row by row, then model, dataset,
/// and the seed's ground-truth test set), and scores the model against the
/// ground truth. Artifact names carry the strategy and an "_unweighted"
/// marker when sensitivity weighting is off, so ablation variants do not collide.
SeedOutcome run_seed(EvalContext& ctx, const ExperimentConfig& config, Strategy strategy,
                     std::uint64_t seed, const std::filesystem::path& out_dir);

struct CampaignSummary {
    Strategy strategy = Strategy::Theory;
    std::vector<SeedOutcome> outcomes;
    SeedStats median_gap, mean_gap, failure_rate, test_metric;
    int total_failures = 0;
};

/// config.seeds consecutive seeds starting at config.seed; per-seed rows are
/// appended to out_dir/summary_<tag>.csv as they finish.
CampaignSummary run_campaign(EvalContext& ctx, const ExperimentConfig& config,
                             Strategy strategy, const std::filesystem::path& out_dir);

// file-name tag for one (strategy, weighting) variant, e.g. "theory" or
// "heuristic_unweighted"
std::string variant_tag(const ExperimentConfig& config, Strategy strategy);

}  // namespace topoforge

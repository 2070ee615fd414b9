#pragma once

#include <functional>

#include "topoforge/config.hpp"
#include "topoforge/design_eval.hpp"
#include "topoforge/generator.hpp"
#include "topoforge/io.hpp"

namespace topoforge {

enum class Provenance { Initial, Acquired, Static };

struct DataRecord {
    ProblemSetting setting;
    Eigen::VectorXd x;       // optimized design
    double f = 0.0;          // its compliance at beta_target
    Eigen::VectorXd grad_f;  // design sensitivity, the weighting byproduct
    std::int64_t cost = 0;   // equilibrium solves the optimization consumed
    Provenance provenance = Provenance::Initial;
};

struct Dataset {
    std::vector<DataRecord> records;
    bool contains(const ProblemSetting& setting) const;
    void add(DataRecord record);  // rejects duplicate settings
};

/// Ordinary-least-squares polynomial in the setting parameters, the
/// Benchmark II compliance predictor. The angle case fits powers of the
/// scalar angle; the region case fits full cross terms of the normalized
/// (position, angle) encoding.
class ComplianceSurrogate {
  public:
    ComplianceSurrogate(CaseKind kind, int degree, const Mesh& mesh);
    void fit(const std::vector<DataRecord>& records);
    double predict(const ProblemSetting& setting) const;
    int n_features() const;

  private:
    Eigen::VectorXd features(const ProblemSetting& setting) const;
    CaseKind kind_;
    int degree_;
    const Mesh* mesh_;
    Eigen::VectorXd coef_;
};

struct AcquisitionRow {
    int iteration = 0;
    double remaining = 0.0;  // budget after this acquisition
    ProblemSetting chosen;
    double score = 0.0;        // d (theory) or d_h (heuristic) of the choice
    double test_metric = 0.0;  // sum of true compliances of generated test designs
    std::int64_t delta = 0;    // solves charged this iteration
};

struct RunResult {
    GeneratorParams model;
    Dataset dataset;
    std::vector<AcquisitionRow> history;
    double b0 = 0.0;       // calibrated budget: cheapest static solve times set size
    double b_floor = 0.0;  // loop guard: costliest static solve
    double remaining = 0.0;
    double final_test_metric = 0.0;
    std::int64_t static_cost = 0;   // total solves across the static set
    bool budget_warning = false;    // budget allowed no acquisition at all
    int degenerate_weights = 0;     // samples whose weights fell back to identity
    std::int64_t scoring_solves = 0;
};

/// Ground-truth oracle: optimize one setting and report the record. The
/// budget is charged from the record's stored cost, never from a live
/// ledger, so replaying a disk cache accounts identically to solving.
using SolveOracle = std::function<DataRecord(const ProblemSetting&, Provenance)>;

/// In-process oracle for callers without a cache layer.
SolveOracle direct_oracle(EvalContext& ctx, const ExperimentConfig& config);

/// The seeded sample stream for one role tag ("static", "s0", "sv", "st",
/// ...): a fresh generator per (seed, tag) pair, so any caller reproduces
/// the exact sets a run drew.
std::vector<ProblemSetting> draw_settings(CaseKind kind, const Mesh& mesh,
                                          const LoadRegion& region, std::uint64_t seed,
                                          const char* tag, int n);

/// One learning mechanism end to end under the common budget rule. All
/// strategies sharing a master seed draw identical sample sets and start
/// from an identical generator. `history` (optional) receives a flushed CSV
/// row per acquisition.
RunResult run_strategy(EvalContext& ctx, const ExperimentConfig& config, Strategy strategy,
                       std::uint64_t seed, const SolveOracle& oracle,
                       HistoryWriter* history = nullptr);

}  // namespace topoforge

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "topoforge/generator.hpp"
#include "topoforge/kkt_oracle.hpp"
#include "topoforge/problem.hpp"
#include "topoforge/topopt_solver.hpp"

namespace topoforge {

enum class Strategy { Static, Heuristic, Theory };

std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& name);

/// Everything a run needs, one plain-text file. Parsing rejects unknown
/// sections/keys and bad values by naming them; serialization emits a fixed
/// canonical order so parse -> serialize is a fixpoint.
struct ExperimentConfig {
    // [mesh]
    int nx = 60, ny = 20;
    // [material]
    Material material;
    // [chain]
    double alpha = 0.4;
    double filter_radius = 2.0;
    double local_radius = 6.0;
    double p = 16.0;
    double beta_target = 16.0;
    // [solver]
    ALParams solver;
    // [kkt]
    KKTParams kkt;
    // [generator]
    std::vector<int> hidden{64, 256};
    TrainConfig trainer;
    // [experiment]
    CaseKind case_kind = CaseKind::TipAngle;
    int load_region[4] = {-1, -1, -1, -1};  // x0 x1 y0 y1; any negative = default
    int n_initial = 5;                      // |S0|
    int n_validation = 50;                  // |Sv|
    int n_test = 50;                        // |St|
    int n_static = 16;                      // |D_static|
    int validation_subsample = 0;           // candidates scored per iteration; 0 = all
    Strategy strategy = Strategy::Theory;
    bool weighted_loss = true;
    int surrogate_degree = 3;
    bool charge_scoring = true;
    std::uint64_t seed = 1;
    int seeds = 1;
    std::string cache_dir = "cache";

    LoadRegion region(const Mesh& mesh) const;
    void validate() const;
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string serialize_config(const ExperimentConfig& config);

/// Hash over the fields that determine ground-truth solves (mesh, material,
/// chain, solver, case, region) — the disk cache key, so tuning the learning
/// side never reuses stale designs.
std::uint64_t solver_scope_hash(const ExperimentConfig& config);

}  // namespace topoforge

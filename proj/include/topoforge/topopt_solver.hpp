#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "topoforge/design_eval.hpp"
#include "topoforge/problem.hpp"

namespace topoforge {

struct ALParams {
    double eps_al = 1.0;    // constrained-loop tolerance on max|dx|
    double eps = 1.0;       // unconstrained-loop tolerance on max|dx|
    double eps_opt = 1e-3;  // declared by the method but never consumed; kept for fidelity
    double r0 = 1.0, r1 = 1.0;    // initial penalty parameters (penalty factor is 1/r)
    double mu0 = 0.0, mu1 = 0.0;  // initial multiplier estimates
    double eta0 = 0.1, eta1 = 0.1;
    double learning_rate = 1e-3;  // reset to this at every descent iteration
    double step_clip = 0.1;
    double beta0 = 1.0;  // projection continuation start; doubles until beta_target
    int max_halvings = 50;
    int max_descent_iterations = 500;  // per constrained loop
    int max_al_iterations = 100;       // per beta pass
    void validate() const;
};

struct SolveResult {
    Eigen::VectorXd x;            // optimized raw design, in [0,1]^N
    double f = 0.0;               // compliance at beta_target
    double g0 = 0.0, g1 = 0.0;    // constraints at beta_target
    Eigen::VectorXd sensitivity;  // chained df/dx at beta_target
    std::int64_t fea_count = 0;   // equilibrium solves consumed by this call
    std::vector<double> objective_trace;   // f at the end of each beta pass
    std::vector<int> al_iteration_trace;   // AL iterations spent per beta pass
    std::vector<std::int64_t> fea_trace;   // solves spent per beta pass
};

/// Budget ran out mid-solve: carries the count this solve had consumed and
/// the last accepted design.
struct SolveInterrupted : std::runtime_error {
    SolveInterrupted(std::int64_t consumed_, Eigen::VectorXd partial_)
        : std::runtime_error("budget exhausted after " + std::to_string(consumed_) +
                             " solves within one optimization"),
          consumed(consumed_),
          partial(std::move(partial_)) {}
    std::int64_t consumed;
    Eigen::VectorXd partial;
};

/// One multiplier/penalty/tolerance update, exactly as the method states it:
/// g < eta: mu += 2g/r and eta halves; otherwise r halves. Note the raw rule
/// can drive mu negative; callers wanting dual feasibility clip afterwards.
struct MultiplierUpdate {
    double mu, r, eta;
};
MultiplierUpdate al_multiplier_update(double g, double mu, double r, double eta);

/// One descent iteration of the unconstrained subproblem: build the
/// direction from the current state, backtrack on the AL objective, return
/// the accepted state. Exits after the first accepted step. The direction
/// metric ignores coordinates pinned at a bound with the step pointing
/// outward (they cannot move; only the projected part measures progress).
struct ALStep {
    DesignState state;         // accepted (equals input when zero_step)
    double direction_max = 0;  // max|dx| of the direction, bound-projected
    double l_before = 0, l_after = 0;
    double a_final = 0;       // learning rate at acceptance
    bool zero_step = false;   // halving cap hit; no move made
    bool no_progress = false; // accepted but L did not measurably decrease
    std::int64_t fea_used = 0;
};

/// a_start < 0 uses params.learning_rate. Callers that keep the returned
/// a_final warm across iterations avoid re-paying the backtracking cost on
/// stiff stretches of the penalty landscape.
ALStep al_step(EvalContext& ctx, const DesignState& current, const Eigen::VectorXd& load,
               double mu0, double mu1, double r0, double r1, const ALParams& params,
               BudgetLedger& ledger, SolveKind kind = SolveKind::TopOpt, unsigned worker = 0,
               double a_start = -1.0);

/// AL objective L = f + mu0 g0 + 0.5 g0^2/r0 + mu1 g1 + 0.5 g1^2/r1.
double al_objective(const DesignState& s, double mu0, double mu1, double r0, double r1);

/// Full ground-truth optimization: beta continuation over AL loops, starting
/// from x = alpha*1. The returned result is evaluated at beta_target (one
/// extra equilibrium solve, included in fea_count).
SolveResult solve_to(EvalContext& ctx, const ProblemSetting& setting, const ALParams& params,
                     BudgetLedger& ledger, unsigned worker = 0);

/// Same optimization for an arbitrary load vector.
SolveResult solve_to(EvalContext& ctx, const Eigen::VectorXd& load, const ALParams& params,
                     BudgetLedger& ledger, unsigned worker = 0);

}  // namespace topoforge

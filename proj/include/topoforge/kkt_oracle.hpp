#pragma once

#include <Eigen/Dense>

#include <cstdint>

#include "topoforge/design_eval.hpp"
#include "topoforge/problem.hpp"

namespace topoforge {

struct MultiplierSet {
    double mu0 = 0.0, mu1 = 0.0;
    Eigen::VectorXd mu_l, mu_u;  // lower/upper bound multipliers, length N
};

struct KKTParams {
    double activity_tol = 1e-3;  // constraint/bound activity threshold
    double w0 = 1.0, w1 = 1.0;   // constraint weights in the deviation
    // When set, only positive constraint parts are squared into d. The
    // stated deviation formula penalizes g^2 even for feasible designs; this
    // flag exists for ablation and is off by default.
    bool positive_part_penalty = false;
};

struct DeviationScore {
    double d = 0.0;
    double grad_l_squared = 0.0;  // ||grad L||^2 at mu*
    double g0 = 0.0, g1 = 0.0;
    MultiplierSet multipliers;
    std::int64_t fea_cost = 0;  // always exactly 1
};

/// grad L = v + mu0 a + mu1 b + mu_u - mu_l, where v, a, b are the chained
/// gradients of f, g0, g1. Bound multipliers act on raw coordinates.
Eigen::VectorXd lagrangian_gradient_vec(const Eigen::VectorXd& v, const Eigen::VectorXd& a,
                                        const Eigen::VectorXd& b, const MultiplierSet& mu);

/// The multiplier-estimation QP on plain vectors: minimize ||grad L||^2 over
/// mu >= 0 with complementarity imposed through activity sets (inactive
/// multipliers pinned to zero). Bound multipliers each touch one coordinate
/// and are eliminated in closed form; the remaining convex C^1 problem in
/// (mu0, mu1) is solved by coordinate descent with bisection.
MultiplierSet optimal_multipliers_qp(const Eigen::VectorXd& v, const Eigen::VectorXd& a,
                                     const Eigen::VectorXd& b, const Eigen::VectorXd& x,
                                     double g0, double g1, double activity_tol);

/// FEA-backed variants. Each consumes exactly one equilibrium solve, charged
/// as SolveKind::Scoring; gradients are evaluated at the context's beta
/// target.
Eigen::VectorXd lagrangian_gradient(EvalContext& ctx, const ProblemSetting& setting,
                                    const Eigen::VectorXd& x, const MultiplierSet& mu,
                                    BudgetLedger& ledger, unsigned worker = 0);

MultiplierSet optimal_multipliers(EvalContext& ctx, const ProblemSetting& setting,
                                  const Eigen::VectorXd& x, const KKTParams& params,
                                  BudgetLedger& ledger, unsigned worker = 0);

/// d = ||grad L(mu*)||^2 + w0 g0^2 + w1 g1^2, with mu* from the QP.
DeviationScore deviation(EvalContext& ctx, const ProblemSetting& setting,
                         const Eigen::VectorXd& x, const KKTParams& params,
                         BudgetLedger& ledger, unsigned worker = 0);

/// Deviation assembled from an already-evaluated state (still the same
/// single-solve cost; the solve happened when the state was built).
DeviationScore deviation_from_state(const EvalContext& ctx, const DesignState& state,
                                    const KKTParams& params);

}  // namespace topoforge

#include "topoforge/topopt_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace topoforge {

void ALParams::validate() const {
    if (!(eps_al > 0.0) || !(eps > 0.0) || !(eps_opt > 0.0))
        throw std::invalid_argument("al: tolerances must be positive");
    if (!(r0 > 0.0) || !(r1 > 0.0))
        throw std::invalid_argument("al: penalty parameters must be positive");
    if (!(step_clip > 0.0) || !(learning_rate > 0.0))
        throw std::invalid_argument("al: step parameters must be positive");
    if (!(beta0 > 0.0)) throw std::invalid_argument("al: beta0 must be positive");
    if (max_halvings < 1 || max_descent_iterations < 1 || max_al_iterations < 1)
        throw std::invalid_argument("al: iteration caps must be >= 1");
}

MultiplierUpdate al_multiplier_update(double g, double mu, double r, double eta) {
    if (g < eta) return {mu + 2.0 * g / r, r, 0.5 * eta};
    return {mu, 0.5 * r, eta};
}

double al_objective(const DesignState& s, double mu0, double mu1, double r0, double r1) {
    return s.f + mu0 * s.g0 + 0.5 * s.g0 * s.g0 / r0 + mu1 * s.g1 + 0.5 * s.g1 * s.g1 / r1;
}

ALStep al_step(EvalContext& ctx, const DesignState& current, const Eigen::VectorXd& load,
               double mu0, double mu1, double r0, double r1, const ALParams& params,
               BudgetLedger& ledger, SolveKind kind, unsigned worker, double a_start) {
    const DesignGradients grads = design_gradients(ctx, current);
    Eigen::VectorXd direction = grads.f;
    if (current.g0 > 0.0) direction += (mu0 + 2.0 * current.g0 / r0) * grads.g0;
    if (current.g1 > 0.0) direction += (mu1 + 2.0 * current.g1 / r1) * grads.g1;

    ALStep step;
    // convergence metric: ignore coordinates pinned at a bound with the step
    // pointing outward -- they cannot move, only the projected part counts
    double dmax = 0.0;
    for (int e = 0; e < direction.size(); ++e) {
        const bool pinned = (current.x[e] <= 0.0 && direction[e] > 0.0) ||
                            (current.x[e] >= 1.0 && direction[e] < 0.0);
        if (!pinned) dmax = std::max(dmax, std::abs(direction[e]));
    }
    step.direction_max = dmax;
    step.l_before = al_objective(current, mu0, mu1, r0, r1);

    double a = a_start < 0.0 ? params.learning_rate : a_start;
    for (int halving = 0; halving <= params.max_halvings; ++halving) {
        const Eigen::VectorXd dx =
            (-a * direction).cwiseMax(-params.step_clip).cwiseMin(params.step_clip);
        const Eigen::VectorXd x_trial = (current.x + dx).cwiseMax(0.0).cwiseMin(1.0);
        DesignState trial =
            eval_design(ctx, x_trial, load, current.beta, ledger, kind, worker);
        ++step.fea_used;
        if (!std::isfinite(trial.f))
            throw std::runtime_error("al: non-finite objective during line search");
        const double l_trial = al_objective(trial, mu0, mu1, r0, r1);
        if (l_trial - step.l_before > 0.0) {
            a *= 0.5;  // learning rate too high
            continue;
        }
        step.state = std::move(trial);
        step.l_after = l_trial;
        step.a_final = a;
        step.no_progress =
            step.l_before - l_trial <= 1e-10 * (1.0 + std::abs(step.l_before));
        return step;
    }
    // could not descend at any rate: keep the current point
    step.state = current;
    step.l_after = step.l_before;
    step.a_final = a;
    step.zero_step = true;
    step.no_progress = true;
    return step;
}

SolveResult solve_to(EvalContext& ctx, const Eigen::VectorXd& load, const ALParams& params,
                     BudgetLedger& ledger, unsigned worker) {
    params.validate();
    const int n = ctx.mesh().n_elements();

    Eigen::VectorXd x = Eigen::VectorXd::Constant(n, ctx.alpha());
    std::int64_t fea = 0;
    SolveResult result;

    try {
        for (double beta = params.beta0; beta < ctx.beta_target(); beta *= 2.0) {
            // fresh AL parameters for the sharpened problem
            double r0 = params.r0, r1 = params.r1;
            double mu0 = params.mu0, mu1 = params.mu1;
            double eta0 = params.eta0, eta1 = params.eta1;
            const std::int64_t pass_fea_start = fea;
            int al_count = 0;

            DesignState state =
                eval_design(ctx, x, load, beta, ledger, SolveKind::TopOpt, worker);
            ++fea;
            if (!std::isfinite(state.f))
                throw std::runtime_error("al: non-finite objective");

            double direction_max = std::numeric_limits<double>::infinity();
            int stalled_runs = 0;  // AL iterations whose descent stalled immediately
            for (int al_it = 0;
                 (direction_max > params.eps_al || state.g0 > 0.0 || state.g1 > 0.0) &&
                 al_it < params.max_al_iterations;
                 ++al_it) {
                ++al_count;
                direction_max = std::numeric_limits<double>::infinity();
                double a = params.learning_rate;  // warm across this descent call
                bool stalled_now = false;
                for (int it = 0; direction_max > params.eps && it < params.max_descent_iterations;
                     ++it) {
                    ALStep step = al_step(ctx, state, load, mu0, mu1, r0, r1, params, ledger,
                                          SolveKind::TopOpt, worker, a);
                    fea += step.fea_used;
                    direction_max = step.direction_max;
                    state = std::move(step.state);
                    a = std::min(2.0 * step.a_final, params.learning_rate);
                    if (step.zero_step || step.no_progress) {
                        stalled_now = it == 0;
                        break;  // line search cannot improve L here
                    }
                }
                stalled_runs = stalled_now ? stalled_runs + 1 : 0;
                if (stalled_runs >= 2 && state.g0 <= 0.0 && state.g1 <= 0.0)
                    break;  // feasible and immovable: converged for this beta
                const MultiplierUpdate u0 = al_multiplier_update(state.g0, mu0, r0, eta0);
                mu0 = std::max(0.0, u0.mu);  // dual feasibility
                r0 = u0.r;
                eta0 = u0.eta;
                const MultiplierUpdate u1 = al_multiplier_update(state.g1, mu1, r1, eta1);
                mu1 = std::max(0.0, u1.mu);
                r1 = u1.r;
                eta1 = u1.eta;
            }
            x = state.x;
            result.objective_trace.push_back(state.f);
            result.al_iteration_trace.push_back(al_count);
            result.fea_trace.push_back(fea - pass_fea_start);
        }

        // canonical evaluation at the target sharpness
        DesignState final_state =
            eval_design(ctx, x, load, ctx.beta_target(), ledger, SolveKind::TopOpt, worker);
        ++fea;
        result.x = final_state.x;
        result.f = final_state.f;
        result.g0 = final_state.g0;
        result.g1 = final_state.g1;
        result.sensitivity = design_gradients(ctx, final_state).f;
        result.fea_count = fea;
        return result;
    } catch (const BudgetExhausted&) {
        throw SolveInterrupted(fea, std::move(x));
    }
}

SolveResult solve_to(EvalContext& ctx, const ProblemSetting& setting, const ALParams& params,
                     BudgetLedger& ledger, unsigned worker) {
    return solve_to(ctx, realize_load(setting, ctx.mesh()), params, ledger, worker);
}

}  // namespace topoforge

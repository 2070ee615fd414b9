#include "topoforge/kkt_oracle.hpp"

#include <cmath>
#include <stdexcept>

namespace topoforge {
namespace {

// Element roles after bound-multiplier elimination. With c = v + mu0 a + mu1 b:
//   plain            -> c^2
//   upper active     -> min over mu_u >= 0 of (c + mu_u)^2 = max(c,0)^2
//   lower active     -> min over mu_l >= 0 of (c - mu_l)^2 = min(c,0)^2
//   both active      -> 0 (mu_u - mu_l spans the reals)
enum class Role : unsigned char { Plain, Upper, Lower, Both };

struct QpInstance {
    const Eigen::VectorXd& v;
    const Eigen::VectorXd& a;
    const Eigen::VectorXd& b;
    std::vector<Role> role;

    double objective(double mu0, double mu1) const {
        double h = 0.0;
        for (int e = 0; e < v.size(); ++e) {
            const double c = v[e] + mu0 * a[e] + mu1 * b[e];
            switch (role[e]) {
                case Role::Plain: h += c * c; break;
                case Role::Upper: h += std::max(c, 0.0) * std::max(c, 0.0); break;
                case Role::Lower: h += std::min(c, 0.0) * std::min(c, 0.0); break;
                case Role::Both: break;
            }
        }
        return h;
    }

    // dh/dmu along `dir` (the a or b vector); convex => nondecreasing.
    double directional_derivative(double mu0, double mu1, const Eigen::VectorXd& dir) const {
        double d = 0.0;
        for (int e = 0; e < v.size(); ++e) {
            const double c = v[e] + mu0 * a[e] + mu1 * b[e];
            switch (role[e]) {
                case Role::Plain: d += 2.0 * c * dir[e]; break;
                case Role::Upper: d += 2.0 * std::max(c, 0.0) * dir[e]; break;
                case Role::Lower: d += 2.0 * std::min(c, 0.0) * dir[e]; break;
                case Role::Both: break;
            }
        }
        return d;
    }
};

// Minimize the convex C^1 objective over one coordinate on [0, inf):
// derivative at 0 nonnegative means 0 is optimal; otherwise bracket and
// bisect the monotone derivative.
double minimize_coordinate(const QpInstance& qp, bool vary_mu0, double other) {
    auto deriv = [&](double m) {
        return vary_mu0 ? qp.directional_derivative(m, other, qp.a)
                        : qp.directional_derivative(other, m, qp.b);
    };
    if (deriv(0.0) >= 0.0) return 0.0;
    double lo = 0.0, hi = 1.0;
    while (deriv(hi) < 0.0) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e12) return hi;  // derivative saturated negative; flat tail
    }
    for (int it = 0; it < 200 && hi - lo > 1e-14 * (1.0 + hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        (deriv(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

Eigen::VectorXd lagrangian_gradient_vec(const Eigen::VectorXd& v, const Eigen::VectorXd& a,
                                        const Eigen::VectorXd& b, const MultiplierSet& mu) {
    Eigen::VectorXd g = v + mu.mu0 * a + mu.mu1 * b;
    if (mu.mu_u.size()) g += mu.mu_u;
    if (mu.mu_l.size()) g -= mu.mu_l;
    return g;
}

MultiplierSet optimal_multipliers_qp(const Eigen::VectorXd& v, const Eigen::VectorXd& a,
                                     const Eigen::VectorXd& b, const Eigen::VectorXd& x,
                                     double g0, double g1, double activity_tol) {
    const int n = static_cast<int>(v.size());
    if (a.size() != n || b.size() != n || x.size() != n)
        throw std::invalid_argument("qp: dimension mismatch");

    QpInstance qp{v, a, b, {}};
    qp.role.resize(n, Role::Plain);
    for (int e = 0; e < n; ++e) {
        const bool lower = x[e] <= activity_tol;
        const bool upper = x[e] >= 1.0 - activity_tol;
        if (lower && upper) qp.role[e] = Role::Both;
        else if (lower) qp.role[e] = Role::Lower;
        else if (upper) qp.role[e] = Role::Upper;
    }
    const bool mu0_free = g0 > 0.0 || std::abs(g0) <= activity_tol;
    const bool mu1_free = g1 > 0.0 || std::abs(g1) <= activity_tol;

    double mu0 = 0.0, mu1 = 0.0;
    for (int sweep = 0; sweep < 200; ++sweep) {
        double delta = 0.0;
        if (mu0_free) {
            const double next = minimize_coordinate(qp, true, mu1);
            delta = std::max(delta, std::abs(next - mu0));
            mu0 = next;
        }
        if (mu1_free) {
            const double next = minimize_coordinate(qp, false, mu0);
            delta = std::max(delta, std::abs(next - mu1));
            mu1 = next;
        }
        if (delta <= 1e-13 * (1.0 + std::abs(mu0) + std::abs(mu1))) break;
    }

    MultiplierSet mu;
    mu.mu0 = mu0;
    mu.mu1 = mu1;
    mu.mu_l = Eigen::VectorXd::Zero(n);
    mu.mu_u = Eigen::VectorXd::Zero(n);
    for (int e = 0; e < n; ++e) {
        if (qp.role[e] == Role::Plain) continue;
        const double c = v[e] + mu0 * a[e] + mu1 * b[e];
        if (qp.role[e] == Role::Upper || qp.role[e] == Role::Both)
            mu.mu_u[e] = std::max(0.0, -c);
        if (qp.role[e] == Role::Lower || qp.role[e] == Role::Both)
            mu.mu_l[e] = std::max(0.0, c);
    }
    return mu;
}

Eigen::VectorXd lagrangian_gradient(EvalContext& ctx, const ProblemSetting& setting,
                                    const Eigen::VectorXd& x, const MultiplierSet& mu,
                                    BudgetLedger& ledger, unsigned worker) {
    const Eigen::VectorXd load = realize_load(setting, ctx.mesh());
    const DesignState state =
        eval_design(ctx, x, load, ctx.beta_target(), ledger, SolveKind::Scoring, worker);
    const DesignGradients grads = design_gradients(ctx, state);
    return lagrangian_gradient_vec(grads.f, grads.g0, grads.g1, mu);
}

MultiplierSet optimal_multipliers(EvalContext& ctx, const ProblemSetting& setting,
                                  const Eigen::VectorXd& x, const KKTParams& params,
                                  BudgetLedger& ledger, unsigned worker) {
    const Eigen::VectorXd load = realize_load(setting, ctx.mesh());
    const DesignState state =
        eval_design(ctx, x, load, ctx.beta_target(), ledger, SolveKind::Scoring, worker);
    const DesignGradients grads = design_gradients(ctx, state);
    return optimal_multipliers_qp(grads.f, grads.g0, grads.g1, state.x, state.g0, state.g1,
                                  params.activity_tol);
}

DeviationScore deviation_from_state(const EvalContext& ctx, const DesignState& state,
                                    const KKTParams& params) {
    if (!(params.w0 >= 0.0 && params.w1 >= 0.0))
        throw std::invalid_argument("deviation: weights must be nonnegative");
    const DesignGradients grads = design_gradients(ctx, state);
    DeviationScore score;
    score.multipliers = optimal_multipliers_qp(grads.f, grads.g0, grads.g1, state.x, state.g0,
                                               state.g1, params.activity_tol);
    score.grad_l_squared =
        lagrangian_gradient_vec(grads.f, grads.g0, grads.g1, score.multipliers).squaredNorm();
    score.g0 = state.g0;
    score.g1 = state.g1;
    const double p0 = params.positive_part_penalty ? std::max(state.g0, 0.0) : state.g0;
    const double p1 = params.positive_part_penalty ? std::max(state.g1, 0.0) : state.g1;
    score.d = score.grad_l_squared + params.w0 * p0 * p0 + params.w1 * p1 * p1;
    score.fea_cost = 1;
    return score;
}

DeviationScore deviation(EvalContext& ctx, const ProblemSetting& setting,
                         const Eigen::VectorXd& x, const KKTParams& params,
                         BudgetLedger& ledger, unsigned worker) {
    const Eigen::VectorXd load = realize_load(setting, ctx.mesh());
    const DesignState state =
        eval_design(ctx, x, load, ctx.beta_target(), ledger, SolveKind::Scoring, worker);
    return deviation_from_state(ctx, state, params);
}

}  // namespace topoforge

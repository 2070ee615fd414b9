#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "topoforge/topopt_solver.hpp"

using namespace topoforge;

namespace {

ProblemSetting tip_setting(const Mesh& mesh, double angle) {
    ProblemSetting s;
    s.kind = CaseKind::TipAngle;
    s.angle = angle;
    s.node = mesh.node_id(mesh.nx(), mesh.ny() / 2);
    return s;
}

DesignState uniform_state(EvalContext& ctx, const Eigen::VectorXd& load, double beta,
                          BudgetLedger& ledger) {
    const Eigen::VectorXd x = Eigen::VectorXd::Constant(ctx.mesh().n_elements(), ctx.alpha());
    return eval_design(ctx, x, load, beta, ledger, SolveKind::TopOpt);
}

}  // namespace

TEST_SUITE("topopt_solver") {

TEST_CASE("multiplier update follows the stated rule") {
    // satisfied branch: multiplier moves by 2g/r (here negative) and the
    // tolerance halves
    MultiplierUpdate u = al_multiplier_update(-0.2, 0.0, 1.0, 0.1);
    CHECK(u.mu == doctest::Approx(-0.4));
    CHECK(u.r == 1.0);
    CHECK(u.eta == doctest::Approx(0.05));

    // violated branch: multiplier and tolerance untouched, penalty tightens
    u = al_multiplier_update(0.5, 0.3, 1.0, 0.1);
    CHECK(u.mu == 0.3);
    CHECK(u.r == 0.5);
    CHECK(u.eta == 0.1);

    // repeated violation halves r geometrically
    double r = 1.0;
    for (int i = 0; i < 6; ++i) r = al_multiplier_update(1.0, 0.0, r, 0.1).r;
    CHECK(r == doctest::Approx(1.0 / 64.0));
}

TEST_CASE("augmented objective formula") {
    DesignState s;
    s.f = 2.0;
    s.g0 = 0.3;
    s.g1 = -0.1;
    const double l = al_objective(s, 0.5, 1.5, 0.25, 0.5);
    CHECK(l == doctest::Approx(2.0 + 0.5 * 0.3 + 0.5 * 0.09 / 0.25 + 1.5 * (-0.1) +
                               0.5 * 0.01 / 0.5));
}

TEST_CASE("line-search step never increases the augmented objective") {
    EvalContext ctx(6, 6, Material{}, 2.0, 6.0, 0.4, 16.0, 16.0);
    const ProblemSetting s = tip_setting(ctx.mesh(), std::numbers::pi / 2);
    const Eigen::VectorXd load = realize_load(s, ctx.mesh());
    BudgetLedger ledger;
    ALParams params;

    DesignState state = uniform_state(ctx, load, 2.0, ledger);
    double mu0 = 0.0, mu1 = 0.0;
    const double r0 = 1.0, r1 = 1.0;
    for (int i = 0; i < 10; ++i) {
        const ALStep step = al_step(ctx, state, load, mu0, mu1, r0, r1, params, ledger);
        CHECK(step.l_after <= step.l_before);
        CHECK(step.fea_used >= 1);
        CHECK(step.state.x.minCoeff() >= 0.0);
        CHECK(step.state.x.maxCoeff() <= 1.0);
        state = step.state;
    }
}

TEST_CASE("optimized design beats the uniform baseline") {
    EvalContext ctx(12, 4, Material{}, 2.0, 6.0, 0.4, 16.0, 16.0);
    const ProblemSetting s = tip_setting(ctx.mesh(), std::numbers::pi / 2);
    BudgetLedger ledger;
    ALParams params;

    const SolveResult res = solve_to(ctx, s, params, ledger);
    CHECK(res.x.minCoeff() >= 0.0);
    CHECK(res.x.maxCoeff() <= 1.0);
    CHECK(res.fea_count == ledger.total());
    CHECK(res.objective_trace.size() == 4);  // beta = 1, 2, 4, 8

    BudgetLedger probe;
    const Eigen::VectorXd load = realize_load(s, ctx.mesh());
    const DesignState uniform = uniform_state(ctx, load, ctx.beta_target(), probe);
    CHECK(res.f < uniform.f);
    CHECK(res.f <= 0.5 * uniform.f);  // material placed where the load path needs it
}

TEST_CASE("solve is deterministic") {
    EvalContext ctx(8, 4, Material{}, 2.0, 6.0, 0.4, 16.0, 16.0);
    const ProblemSetting s = tip_setting(ctx.mesh(), 1.0);
    ALParams params;

    BudgetLedger la, lb;
    const SolveResult a = solve_to(ctx, s, params, la);
    const SolveResult b = solve_to(ctx, s, params, lb);
    CHECK(a.fea_count == b.fea_count);
    CHECK((a.x - b.x).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.f == b.f);
}

TEST_CASE("budget exhaustion mid-solve reports the partial spend") {
    EvalContext ctx(8, 4, Material{}, 2.0, 6.0, 0.4, 16.0, 16.0);
    const ProblemSetting s = tip_setting(ctx.mesh(), 1.0);
    ALParams params;

    BudgetLedger ledger(5);
    CHECK_THROWS_AS(solve_to(ctx, s, params, ledger), SolveInterrupted);
    CHECK(ledger.total() == 5);
    CHECK(ledger.remaining() == 0);
    try {
        BudgetLedger again(5);
        solve_to(ctx, s, params, again);
        FAIL("expected interruption");
    } catch (const SolveInterrupted& e) {
        // the count it saw can lag the ledger by the in-flight line search
        CHECK(e.consumed >= 1);
        CHECK(e.consumed <= 5);
        CHECK(e.partial.size() == ctx.mesh().n_elements());
    }
}

TEST_CASE("zero load keeps the uniform feasible design") {
    // with f == 0 identically the constraints are satisfied at the start, so
    // every beta pass accepts the first (zero-gradient) trial and moves on:
    // 4 passes x (initial + one line-search eval) + the final evaluation
    EvalContext ctx(6, 4, Material{}, 2.0, 6.0, 0.4, 16.0, 16.0);
    ALParams params;
    BudgetLedger ledger;
    const Eigen::VectorXd load = Eigen::VectorXd::Zero(ctx.mesh().n_dofs());
    const SolveResult res = solve_to(ctx, load, params, ledger);
    CHECK(res.fea_count == 9);
    CHECK(res.f == 0.0);
    CHECK((res.x - Eigen::VectorXd::Constant(res.x.size(), 0.4)).cwiseAbs().maxCoeff() ==
          0.0);
    CHECK(res.g0 <= 0.0);
    CHECK(res.g1 <= 0.0);
}

TEST_CASE("parameter validation") {
    ALParams p;
    p.eps = 0.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = ALParams{};
    p.r0 = -1.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = ALParams{};
    p.max_halvings = 0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

}  // TEST_SUITE

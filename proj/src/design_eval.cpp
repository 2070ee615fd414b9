#include "topoforge/design_eval.hpp"

#include <stdexcept>

#include "topoforge/threads.hpp"

namespace topoforge {

EvalContext::EvalContext(int nx, int ny, Material material, double filter_radius,
                         double local_radius, double alpha, double p, double beta_target)
    : mesh_(Mesh::cantilever(nx, ny)),
      material_(material),
      kernel_(mesh_, filter_radius, local_radius),
      alpha_(alpha),
      p_(p),
      beta_target_(beta_target) {
    material_.validate();
    if (!(alpha_ > 0.0 && alpha_ < 1.0))
        throw std::invalid_argument("context: alpha must lie in (0,1)");
    if (!(beta_target_ > 0.0))
        throw std::invalid_argument("context: beta target must be positive");
    const unsigned workers = worker_count();
    systems_.reserve(workers);
    for (unsigned w = 0; w < workers; ++w)
        systems_.push_back(std::make_unique<StiffnessSystem>(mesh_, material_));
}

DesignState eval_design(EvalContext& ctx, const Eigen::VectorXd& x,
                        const Eigen::VectorXd& load, double beta, BudgetLedger& ledger,
                        SolveKind kind, unsigned worker) {
    DesignState st;
    st.beta = beta;
    st.x = x;
    st.x_tilde = ctx.kernel().apply_filter(x);
    st.rho = project(st.x_tilde, beta);
    StiffnessSystem& sys = ctx.system(worker);
    st.u = sys.solve(st.rho, load, ledger, kind);
    st.f = sys.compliance_of(st.u, st.rho);
    ConstraintValues c = evaluate_constraints(st.rho, ctx.kernel(), ctx.alpha(), ctx.p());
    st.g0 = c.g0;
    st.g1 = c.g1;
    st.rho_bar = std::move(c.rho_bar);
    return st;
}

DesignGradients design_gradients(const EvalContext& ctx, const DesignState& state) {
    const int n = ctx.mesh().n_elements();
    DesignGradients g;
    const Eigen::VectorXd df_drho =
        compliance_sensitivity(state.u, state.rho, ctx.mesh(), ctx.material());
    g.f = ctx.kernel().chain_gradient(state.x_tilde, state.beta, df_drho);
    g.g0 = ctx.kernel().chain_gradient(state.x_tilde, state.beta, grad_g0_rho(n));
    g.g1 = ctx.kernel().chain_gradient(state.x_tilde, state.beta,
                                       grad_g1_rho(ctx.kernel(), state.rho_bar, ctx.p()));
    return g;
}

}  // namespace topoforge

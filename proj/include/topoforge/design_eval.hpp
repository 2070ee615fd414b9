#pragma once

#include <Eigen/Dense>

#include <memory>
#include <vector>

#include "topoforge/budget.hpp"
#include "topoforge/density_field.hpp"
#include "topoforge/mesh_fem.hpp"

namespace topoforge {

/// Everything fixed across designs for one problem family: mesh, material,
/// kernels, constraint parameters, projection schedule. Owns one
/// StiffnessSystem per worker thread so designs can be evaluated
/// concurrently (each system carries mutable factorization state).
class EvalContext {
  public:
    EvalContext(int nx, int ny, Material material, double filter_radius, double local_radius,
                double alpha, double p, double beta_target);

    EvalContext(const EvalContext&) = delete;
    EvalContext& operator=(const EvalContext&) = delete;

    const Mesh& mesh() const { return mesh_; }
    const Material& material() const { return material_; }
    const FilterKernel& kernel() const { return kernel_; }
    double alpha() const { return alpha_; }
    double p() const { return p_; }
    /// Final projection sharpness; the canonical beta for evaluating designs.
    double beta_target() const { return beta_target_; }

    StiffnessSystem& system(unsigned worker = 0) { return *systems_[worker]; }

  private:
    Mesh mesh_;
    Material material_;
    FilterKernel kernel_;
    double alpha_, p_, beta_target_;
    std::vector<std::unique_ptr<StiffnessSystem>> systems_;
};

/// One design pushed through the full chain at a given projection sharpness:
/// x -> x~ -> rho -> (u, f, g0, g1). Costs exactly one equilibrium solve.
struct DesignState {
    Eigen::VectorXd x, x_tilde, rho, rho_bar, u;
    double f = 0.0, g0 = 0.0, g1 = 0.0;
    double beta = 0.0;
};

DesignState eval_design(EvalContext& ctx, const Eigen::VectorXd& x,
                        const Eigen::VectorXd& load, double beta, BudgetLedger& ledger,
                        SolveKind kind, unsigned worker = 0);

/// Chained gradients at an evaluated state; free (reuses the stored u).
struct DesignGradients {
    Eigen::VectorXd f, g0, g1;  // each w.r.t. the raw design variables x
};

DesignGradients design_gradients(const EvalContext& ctx, const DesignState& state);

}  // namespace topoforge

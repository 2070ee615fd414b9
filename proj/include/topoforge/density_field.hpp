#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "topoforge/mesh_fem.hpp"

namespace topoforge {

// Neighborhoods over element centroids: a filter kernel (open ball, radius
// r_e, linearly decaying weights) and a local-average kernel (closed ball,
// radius R_e, uniform weights). Both are row-stochastic and immutable.
class FilterKernel {
public:
    FilterKernel(const Mesh& mesh, double filter_radius, double local_radius);

    int size() const { return static_cast<int>(filter_.rows()); }
    double filter_radius() const { return filter_radius_; }
    double local_radius() const { return local_radius_; }

    const Eigen::SparseMatrix<double, Eigen::RowMajor>& filter() const { return filter_; }
    const Eigen::SparseMatrix<double, Eigen::RowMajor>& local_average() const { return local_; }

    Eigen::VectorXd apply_filter(const Eigen::VectorXd& x) const;
    Eigen::VectorXd local_means(const Eigen::VectorXd& rho) const;

    // pulls a gradient w.r.t. rho back to the raw design variables:
    // grad_x = F^T diag(drho/dxt) grad_rho
    Eigen::VectorXd chain_gradient(const Eigen::VectorXd& x_tilde, double beta,
                                   const Eigen::VectorXd& grad_rho) const;

private:
    double filter_radius_, local_radius_;
    Eigen::SparseMatrix<double, Eigen::RowMajor> filter_, local_;
};

// rho_e = (tanh(b/2) + tanh(b(xt_e - 1/2))) / (2 tanh(b/2))
Eigen::VectorXd project(const Eigen::VectorXd& x_tilde, double beta);
Eigen::VectorXd projection_derivative(const Eigen::VectorXd& x_tilde, double beta);

struct ConstraintValues {
    double g0 = 0.0;          // mean(rho) - alpha
    double g1 = 0.0;          // pnorm(rho_bar) - alpha
    double pnorm = 0.0;       // ((1/N) sum rho_bar^p)^(1/p)
    Eigen::VectorXd rho_bar;  // local averages
};

ConstraintValues evaluate_constraints(const Eigen::VectorXd& rho, const FilterKernel& kernel,
                                      double alpha, double p);

Eigen::VectorXd grad_g0_rho(int n);
Eigen::VectorXd grad_g1_rho(const FilterKernel& kernel, const Eigen::VectorXd& rho_bar, double p);

}  // namespace topoforge

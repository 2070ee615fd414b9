#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <array>
#include <vector>

#include "topoforge/budget.hpp"

namespace topoforge {

/// Linear-elastic material with SIMP-style penalized interpolation:
/// E(rho) = e_min + rho^q * (e0 - e_min).
struct Material {
    double e0 = 1.0;
    double e_min = 1e-9;
    double nu = 0.3;
    double q = 3.0;

    void validate() const;
    double modulus(double rho) const { return e_min + std::pow(rho, q) * (e0 - e_min); }
    /// dE/drho at the given density.
    double modulus_derivative(double rho) const {
        return q * std::pow(rho, q - 1.0) * (e0 - e_min);
    }
};

/// Regular grid of unit-square bilinear quads on [0,nx] x [0,ny].
/// Node (ix,iy) has id ix*(ny+1)+iy; element (ex,ey) has id ex*ny+ey.
/// Two dofs per node (x then y displacement).
class Mesh {
  public:
    Mesh(int nx, int ny, std::vector<int> fixed_dofs);

    /// Cantilever: left edge fully clamped.
    static Mesh cantilever(int nx, int ny);

    int nx() const { return nx_; }
    int ny() const { return ny_; }
    int n_nodes() const { return (nx_ + 1) * (ny_ + 1); }
    int n_elements() const { return nx_ * ny_; }
    int n_dofs() const { return 2 * n_nodes(); }
    int n_free_dofs() const { return n_free_; }

    int node_id(int ix, int iy) const { return ix * (ny_ + 1) + iy; }
    int element_id(int ex, int ey) const { return ex * ny_ + ey; }

    Eigen::Vector2d node_coord(int node) const {
        return {static_cast<double>(node / (ny_ + 1)), static_cast<double>(node % (ny_ + 1))};
    }
    Eigen::Vector2d element_centroid(int e) const {
        return {e / ny_ + 0.5, e % ny_ + 0.5};
    }

    /// Counter-clockwise corner nodes: lower-left, lower-right, upper-right, upper-left.
    std::array<int, 4> element_nodes(int e) const {
        const int ex = e / ny_, ey = e % ny_;
        const int ll = node_id(ex, ey);
        const int lr = node_id(ex + 1, ey);
        return {ll, lr, lr + 1, ll + 1};
    }
    /// The 8 global dofs of an element, (x,y) interleaved per corner node.
    std::array<int, 8> element_dofs(int e) const {
        const auto n = element_nodes(e);
        return {2 * n[0], 2 * n[0] + 1, 2 * n[1], 2 * n[1] + 1,
                2 * n[2], 2 * n[2] + 1, 2 * n[3], 2 * n[3] + 1};
    }

    bool is_fixed(int dof) const { return free_index_[dof] < 0; }
    /// Index into the reduced system, or -1 for fixed dofs.
    int free_index(int dof) const { return free_index_[dof]; }
    const std::vector<int>& fixed_dofs() const { return fixed_dofs_; }

  private:
    int nx_, ny_, n_free_;
    std::vector<int> fixed_dofs_;
    std::vector<int> free_index_;
};

/// 8x8 stiffness of one unit-square bilinear quad, plane stress, unit
/// thickness, 2x2 Gauss quadrature. Symmetric positive semidefinite with
/// exactly three zero eigenvalues (planar rigid-body modes).
Eigen::Matrix<double, 8, 8> element_stiffness(double young_modulus, double poisson_ratio);

/// f = 1/2 u^T K u.
double compliance(const Eigen::VectorXd& u, const Eigen::SparseMatrix<double>& stiffness);

/// Per-element df/drho_e = -1/2 * dE/drho_e * u_e^T k0 u_e, where k0 is the
/// unit-modulus element matrix. All entries are <= 0.
Eigen::VectorXd compliance_sensitivity(const Eigen::VectorXd& u, const Eigen::VectorXd& rho,
                                       const Mesh& mesh, const Material& material);

/// Assembles and solves the reduced equilibrium system for varying density
/// fields on a fixed mesh. The sparsity pattern and its symbolic analysis are
/// computed once; per-call work is a value scatter plus a numeric
/// factorization (no reuse across density changes).
class StiffnessSystem {
  public:
    StiffnessSystem(const Mesh& mesh, const Material& material);

    const Mesh& mesh() const { return mesh_; }
    const Material& material() const { return mat_; }
    const Eigen::Matrix<double, 8, 8>& unit_element_stiffness() const { return k0_; }

    /// Global stiffness over all dofs (fixed rows/columns included), for
    /// inspection and compliance evaluation. Not used in the solve hot path.
    Eigen::SparseMatrix<double> assemble_global(const Eigen::VectorXd& rho) const;

    /// Solve K(rho) u = s. Charges one solve to the ledger before doing any
    /// work. Returns the full-length displacement (zeros at fixed dofs) and
    /// guarantees ||K u - s|| <= 1e-8 ||s|| on the free dofs.
    Eigen::VectorXd solve(const Eigen::VectorXd& rho, const Eigen::VectorXd& load,
                          BudgetLedger& ledger, SolveKind kind = SolveKind::TopOpt);

    /// 1/2 u^T K(rho) u without forming the global matrix.
    double compliance_of(const Eigen::VectorXd& u, const Eigen::VectorXd& rho) const;

  private:
    void assemble_reduced(const Eigen::VectorXd& rho);

    const Mesh& mesh_;
    Material mat_;
    Eigen::Matrix<double, 8, 8> k0_;
    Eigen::SparseMatrix<double> k_reduced_;
    // flat index into k_reduced_ values for each (element, local i, local j)
    std::vector<std::int32_t> scatter_;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> factorization_;
    bool pattern_ready_ = false;
};

}  // namespace topoforge

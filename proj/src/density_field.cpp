#include "topoforge/density_field.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace topoforge {
namespace {

// scan the bounding window of the ball instead of all N elements
template <typename Emit>
void for_neighbors(const Mesh& mesh, int e, double radius, Emit&& emit) {
    const int ex = e / mesh.ny(), ey = e % mesh.ny();
    const int span = static_cast<int>(std::floor(radius));
    for (int ix = std::max(0, ex - span); ix <= std::min(mesh.nx() - 1, ex + span); ++ix)
        for (int iy = std::max(0, ey - span); iy <= std::min(mesh.ny() - 1, ey + span); ++iy) {
            const double dx = ix - ex, dy = iy - ey;
            emit(mesh.element_id(ix, iy), std::sqrt(dx * dx + dy * dy));
        }
}

}  // namespace

FilterKernel::FilterKernel(const Mesh& mesh, double filter_radius, double local_radius)
    : filter_radius_(filter_radius), local_radius_(local_radius) {
    if (!(filter_radius > 0.0) || !(local_radius > 0.0))
        throw std::invalid_argument("kernel: radii must be positive");

    const int n = mesh.n_elements();
    std::vector<Eigen::Triplet<double>> ft, lt;
    for (int e = 0; e < n; ++e) {
        // open ball: a neighbor exactly at distance r_e would carry weight 0
        double wsum = 0.0;
        const std::size_t row_begin = ft.size();
        for_neighbors(mesh, e, filter_radius_, [&](int i, double d) {
            if (d < filter_radius_) {
                const double w = 1.0 - d / filter_radius_;
                ft.emplace_back(e, i, w);
                wsum += w;
            }
        });
        for (std::size_t k = row_begin; k < ft.size(); ++k)
            ft[k] = {ft[k].row(), ft[k].col(), ft[k].value() / wsum};

        int count = 0;
        const std::size_t loc_begin = lt.size();
        for_neighbors(mesh, e, local_radius_, [&](int i, double d) {
            if (d <= local_radius_) {
                lt.emplace_back(e, i, 1.0);
                ++count;
            }
        });
        for (std::size_t k = loc_begin; k < lt.size(); ++k)
            lt[k] = {lt[k].row(), lt[k].col(), 1.0 / count};
    }

    filter_.resize(n, n);
    filter_.setFromTriplets(ft.begin(), ft.end());
    filter_.makeCompressed();
    local_.resize(n, n);
    local_.setFromTriplets(lt.begin(), lt.end());
    local_.makeCompressed();
}

Eigen::VectorXd FilterKernel::apply_filter(const Eigen::VectorXd& x) const {
    if (x.size() != filter_.rows()) throw std::invalid_argument("apply_filter: size mismatch");
    return filter_ * x;
}

Eigen::VectorXd FilterKernel::local_means(const Eigen::VectorXd& rho) const {
    if (rho.size() != local_.rows()) throw std::invalid_argument("local_means: size mismatch");
    return local_ * rho;
}

Eigen::VectorXd FilterKernel::chain_gradient(const Eigen::VectorXd& x_tilde, double beta,
                                             const Eigen::VectorXd& grad_rho) const {
    if (x_tilde.size() != filter_.rows() || grad_rho.size() != filter_.rows())
        throw std::invalid_argument("chain_gradient: size mismatch");
    const Eigen::VectorXd scaled =
        projection_derivative(x_tilde, beta).cwiseProduct(grad_rho);
    return filter_.transpose() * scaled;
}

Eigen::VectorXd project(const Eigen::VectorXd& x_tilde, double beta) {
    if (!(beta > 0.0)) throw std::invalid_argument("project: beta must be positive");
    const double denom = 2.0 * std::tanh(beta / 2.0);
    return x_tilde.unaryExpr([&](double v) {
        return (std::tanh(beta / 2.0) + std::tanh(beta * (v - 0.5))) / denom;
    });
}

Eigen::VectorXd projection_derivative(const Eigen::VectorXd& x_tilde, double beta) {
    if (!(beta > 0.0)) throw std::invalid_argument("project: beta must be positive");
    const double denom = 2.0 * std::tanh(beta / 2.0);
    return x_tilde.unaryExpr([&](double v) {
        const double t = std::tanh(beta * (v - 0.5));
        return beta * (1.0 - t * t) / denom;
    });
}

ConstraintValues evaluate_constraints(const Eigen::VectorXd& rho, const FilterKernel& kernel,
                                      double alpha, double p) {
    if (!(p >= 1.0)) throw std::invalid_argument("constraints: p must be >= 1");
    const int n = static_cast<int>(rho.size());
    ConstraintValues out;
    out.rho_bar = kernel.local_means(rho);
    out.g0 = rho.mean() - alpha;
    double acc = 0.0;
    for (int e = 0; e < n; ++e) acc += std::pow(out.rho_bar[e], p);
    out.pnorm = std::pow(acc / n, 1.0 / p);
    out.g1 = out.pnorm - alpha;
    return out;
}

Eigen::VectorXd grad_g0_rho(int n) {
    return Eigen::VectorXd::Constant(n, 1.0 / n);
}

Eigen::VectorXd grad_g1_rho(const FilterKernel& kernel, const Eigen::VectorXd& rho_bar,
                            double p) {
    const int n = static_cast<int>(rho_bar.size());
    double acc = 0.0;
    for (int e = 0; e < n; ++e) acc += std::pow(rho_bar[e], p);
    const double pn = std::pow(acc / n, 1.0 / p);
    if (pn == 0.0) return Eigen::VectorXd::Zero(n);
    Eigen::VectorXd w(n);
    for (int e = 0; e < n; ++e)
        w[e] = std::pow(rho_bar[e], p - 1.0) * std::pow(pn, 1.0 - p) / n;
    return kernel.local_average().transpose() * w;
}

}  // namespace topoforge

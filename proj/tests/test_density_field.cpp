#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "topoforge/density_field.hpp"
#include "topoforge/rng.hpp"

using namespace topoforge;

namespace {

Eigen::VectorXd random_vector(Rng& rng, int n, double lo = 0.0, double hi = 1.0) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = rng.uniform(lo, hi);
    return v;
}

}  // namespace

TEST_SUITE("density_field") {

TEST_CASE("kernel construction") {
    const Mesh mesh = Mesh::cantilever(5, 5);

    SUBCASE("sub-element radius degenerates to identity") {
        const FilterKernel kernel(mesh, 0.5, 0.5);
        Rng rng(1);
        const Eigen::VectorXd x = random_vector(rng, mesh.n_elements());
        CHECK((kernel.apply_filter(x) - x).cwiseAbs().maxCoeff() == 0.0);
        for (int e = 0; e < mesh.n_elements(); ++e)
            CHECK(kernel.filter().row(e).nonZeros() == 1);
    }

    SUBCASE("neighbor counts match brute-force scan") {
        const double r = 2.5;
        const FilterKernel kernel(mesh, r, r);
        for (int e = 0; e < mesh.n_elements(); ++e)
            CHECK(kernel.filter().row(e).nonZeros() == oracle::brute_neighbor_count(mesh, e, r));
    }

    SUBCASE("self-weight is maximal and rows are normalized") {
        const FilterKernel kernel(mesh, 2.0, 6.0);
        const auto& f = kernel.filter();
        for (int e = 0; e < mesh.n_elements(); ++e) {
            double row_sum = 0.0, diag = 0.0, max_w = 0.0;
            for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(f, e); it;
                 ++it) {
                row_sum += it.value();
                max_w = std::max(max_w, it.value());
                if (it.col() == e) diag = it.value();
            }
            CHECK(row_sum == doctest::Approx(1.0).epsilon(1e-12));
            // zero self-distance gives the largest pre-normalization weight
            CHECK(diag == doctest::Approx(max_w).epsilon(1e-12));
        }
    }

    CHECK_THROWS_AS(FilterKernel(mesh, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("filter matches brute-force double loop") {
    const Mesh mesh = Mesh::cantilever(4, 4);
    const FilterKernel kernel(mesh, 2.0, 6.0);
    Rng rng(5);
    const Eigen::VectorXd x = random_vector(rng, mesh.n_elements());
    CHECK(oracle::rel_error(kernel.apply_filter(x), oracle::brute_filter(mesh, 2.0, x)) < 1e-13);
    CHECK(oracle::rel_error(kernel.local_means(x), oracle::brute_local_means(mesh, 6.0, x)) <
          1e-13);
}

TEST_CASE("filter preserves constants, linearity, range") {
    const Mesh mesh = Mesh::cantilever(6, 3);
    const FilterKernel kernel(mesh, 2.0, 6.0);
    const int n = mesh.n_elements();

    const Eigen::VectorXd c = Eigen::VectorXd::Constant(n, 0.37);
    CHECK((kernel.apply_filter(c) - c).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((kernel.local_means(c) - c).cwiseAbs().maxCoeff() < 1e-14);

    Rng rng(9);
    const Eigen::VectorXd x = random_vector(rng, n), y = random_vector(rng, n);
    const Eigen::VectorXd lhs = kernel.apply_filter(0.3 * x + 0.6 * y);
    const Eigen::VectorXd rhs = 0.3 * kernel.apply_filter(x) + 0.6 * kernel.apply_filter(y);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-14);

    const Eigen::VectorXd xt = kernel.apply_filter(x);
    CHECK(xt.minCoeff() >= 0.0);
    CHECK(xt.maxCoeff() <= 1.0);
}

TEST_CASE("projection endpoints, symmetry, monotonicity") {
    Eigen::VectorXd xt(3);
    xt << 0.0, 0.5, 1.0;
    for (double beta : {1.0, 4.0, 16.0}) {
        const Eigen::VectorXd rho = project(xt, beta);
        CHECK(rho[0] == doctest::Approx(0.0).epsilon(1e-14));
        CHECK(rho[1] == doctest::Approx(0.5).epsilon(1e-14));
        CHECK(rho[2] == doctest::Approx(1.0).epsilon(1e-14));
    }

    // spot value: xt = 0.75, beta = 8
    Eigen::VectorXd one(1);
    one << 0.75;
    const double want = (std::tanh(4.0) + std::tanh(2.0)) / (2.0 * std::tanh(4.0));
    CHECK(project(one, 8.0)[0] == doctest::Approx(want).epsilon(1e-15));

    // point symmetry rho(0.5+t) + rho(0.5-t) = 1
    for (double t : {0.1, 0.25, 0.5}) {
        Eigen::VectorXd pair(2);
        pair << 0.5 + t, 0.5 - t;
        const Eigen::VectorXd rho = project(pair, 16.0);
        CHECK(rho[0] + rho[1] == doctest::Approx(1.0).epsilon(1e-12));
    }

    // monotone: increasing xt gives increasing rho
    Eigen::VectorXd grid(21);
    for (int i = 0; i <= 20; ++i) grid[i] = i / 20.0;
    const Eigen::VectorXd rho = project(grid, 8.0);
    for (int i = 1; i <= 20; ++i) CHECK(rho[i] > rho[i - 1]);

    CHECK_THROWS_AS(project(grid, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(project(grid, -1.0), std::invalid_argument);
}

TEST_CASE("projection derivative matches finite differences") {
    Rng rng(13);
    const Eigen::VectorXd xt = random_vector(rng, 16, 0.05, 0.95);
    for (double beta : {1.0, 8.0}) {
        const Eigen::VectorXd dd = projection_derivative(xt, beta);
        for (int i = 0; i < xt.size(); ++i) {
            Eigen::VectorXd probe(1);
            const double h = 1e-6;
            probe << xt[i] + h;
            const double fp = project(probe, beta)[0];
            probe << xt[i] - h;
            const double fm = project(probe, beta)[0];
            CHECK(dd[i] == doctest::Approx((fp - fm) / (2 * h)).epsilon(1e-6));
        }
    }
}

TEST_CASE("constraint values") {
    const Mesh mesh = Mesh::cantilever(4, 4);
    const FilterKernel kernel(mesh, 2.0, 6.0);
    const int n = mesh.n_elements();
    const double alpha = 0.4, p = 16.0;

    SUBCASE("uniform field at the threshold is exactly feasible-active") {
        const auto c = evaluate_constraints(Eigen::VectorXd::Constant(n, alpha), kernel, alpha, p);
        CHECK(c.g0 == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(c.g1 == doctest::Approx(0.0).epsilon(1e-12));
    }

    SUBCASE("void field") {
        const auto c = evaluate_constraints(Eigen::VectorXd::Zero(n), kernel, alpha, p);
        CHECK(c.g0 == doctest::Approx(-alpha));
        CHECK(c.g1 == doctest::Approx(-alpha));
    }

    SUBCASE("p-norm bounds") {
        Rng rng(21);
        for (int trial = 0; trial < 10; ++trial) {
            const Eigen::VectorXd rho = random_vector(rng, n);
            const auto c = evaluate_constraints(rho, kernel, alpha, p);
            const double hi = c.rho_bar.maxCoeff();
            const double lo = hi * std::pow(n, -1.0 / p);
            CHECK(c.pnorm >= lo - 1e-12);
            CHECK(c.pnorm <= hi + 1e-12);
            CHECK(c.g1 >= lo - alpha - 1e-12);
            CHECK(c.g1 <= hi - alpha + 1e-12);
        }
    }

    CHECK_THROWS_AS(evaluate_constraints(Eigen::VectorXd::Zero(n), kernel, alpha, 0.5),
                    std::invalid_argument);
}

TEST_CASE("chain gradients match finite differences") {
    const Mesh mesh = Mesh::cantilever(4, 4);
    const FilterKernel kernel(mesh, 2.0, 6.0);
    const int n = mesh.n_elements();
    const double alpha = 0.4, p = 16.0, beta = 4.0;
    Rng rng(31);
    const Eigen::VectorXd x = random_vector(rng, n, 0.05, 0.95);
    const Eigen::VectorXd xt = kernel.apply_filter(x);

    SUBCASE("zero upstream gradient") {
        CHECK(kernel.chain_gradient(xt, beta, Eigen::VectorXd::Zero(n)).norm() == 0.0);
    }

    SUBCASE("g0 chain") {
        const Eigen::VectorXd got = kernel.chain_gradient(xt, beta, grad_g0_rho(n));
        const Eigen::VectorXd fd = oracle::central_difference(
            [&](const Eigen::VectorXd& xv) {
                const Eigen::VectorXd rho = project(kernel.apply_filter(xv), beta);
                return evaluate_constraints(rho, kernel, alpha, p).g0;
            },
            x, 1e-6);
        CHECK(oracle::rel_error(got, fd) < 1e-4);
    }

    SUBCASE("g1 chain") {
        const Eigen::VectorXd rho = project(xt, beta);
        const auto c = evaluate_constraints(rho, kernel, alpha, p);
        const Eigen::VectorXd got =
            kernel.chain_gradient(xt, beta, grad_g1_rho(kernel, c.rho_bar, p));
        const Eigen::VectorXd fd = oracle::central_difference(
            [&](const Eigen::VectorXd& xv) {
                const Eigen::VectorXd r = project(kernel.apply_filter(xv), beta);
                return evaluate_constraints(r, kernel, alpha, p).g1;
            },
            x, 1e-6);
        CHECK(oracle::rel_error(got, fd) < 1e-4);
    }

    SUBCASE("g1 gradient is zero on a void field") {
        CHECK(grad_g1_rho(kernel, Eigen::VectorXd::Zero(n), p).norm() == 0.0);
    }
}

TEST_CASE("projection monotonicity across designs") {
    Rng rng(41);
    const Eigen::VectorXd a = random_vector(rng, 32);
    Eigen::VectorXd b = a;
    for (int i = 0; i < b.size(); ++i) b[i] = std::min(1.0, b[i] + rng.uniform(0.0, 0.2));
    const Eigen::VectorXd ra = project(a, 8.0), rb = project(b, 8.0);
    for (int i = 0; i < a.size(); ++i) CHECK(rb[i] >= ra[i]);
}

}  // TEST_SUITE

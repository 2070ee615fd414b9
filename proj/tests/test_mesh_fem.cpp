#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "oracles.hpp"
#include "topoforge/mesh_fem.hpp"
#include "topoforge/rng.hpp"

using namespace topoforge;

namespace {

Eigen::VectorXd random_density(Rng& rng, int n, double lo = 0.0, double hi = 1.0) {
    Eigen::VectorXd rho(n);
    for (int i = 0; i < n; ++i) rho[i] = rng.uniform(lo, hi);
    return rho;
}

// unit downward load at the middle node of the right edge
Eigen::VectorXd tip_load(const Mesh& mesh) {
    Eigen::VectorXd s = Eigen::VectorXd::Zero(mesh.n_dofs());
    s[2 * mesh.node_id(mesh.nx(), mesh.ny() / 2) + 1] = -1.0;
    return s;
}

}  // namespace

TEST_SUITE("mesh_fem") {

TEST_CASE("mesh indexing and boundary conditions") {
    const Mesh mesh = Mesh::cantilever(3, 2);
    CHECK(mesh.n_nodes() == 12);
    CHECK(mesh.n_elements() == 6);
    CHECK(mesh.n_dofs() == 24);
    CHECK(mesh.n_free_dofs() == 24 - 6);

    for (int e = 0; e < mesh.n_elements(); ++e) {
        const auto nodes = mesh.element_nodes(e);
        for (int a = 0; a < 4; ++a) {
            CHECK(nodes[a] >= 0);
            CHECK(nodes[a] < mesh.n_nodes());
            for (int b = a + 1; b < 4; ++b) CHECK(nodes[a] != nodes[b]);
        }
        // counter-clockwise: corners at centroid +/- 1/2
        const Eigen::Vector2d c = mesh.element_centroid(e);
        CHECK(mesh.node_coord(nodes[0]).isApprox(c + Eigen::Vector2d(-0.5, -0.5)));
        CHECK(mesh.node_coord(nodes[1]).isApprox(c + Eigen::Vector2d(0.5, -0.5)));
        CHECK(mesh.node_coord(nodes[2]).isApprox(c + Eigen::Vector2d(0.5, 0.5)));
        CHECK(mesh.node_coord(nodes[3]).isApprox(c + Eigen::Vector2d(-0.5, 0.5)));
    }

    // left edge clamped, everything else free
    for (int iy = 0; iy <= mesh.ny(); ++iy) {
        CHECK(mesh.is_fixed(2 * mesh.node_id(0, iy)));
        CHECK(mesh.is_fixed(2 * mesh.node_id(0, iy) + 1));
    }
    int free_seen = 0;
    for (int d = 0; d < mesh.n_dofs(); ++d)
        if (!mesh.is_fixed(d)) CHECK(mesh.free_index(d) == free_seen++);
    CHECK(free_seen == mesh.n_free_dofs());

    CHECK_THROWS_AS(Mesh(0, 2, {}), std::invalid_argument);
    CHECK_THROWS_AS(Mesh(2, 2, {99}), std::invalid_argument);
}

TEST_CASE("element stiffness: symmetry, rank, scaling") {
    const auto ke = element_stiffness(1.0, 0.3);
    CHECK((ke - ke.transpose()).cwiseAbs().maxCoeff() == 0.0);

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 8, 8>> eig(ke);
    int near_zero = 0;
    for (int i = 0; i < 8; ++i) {
        CHECK(eig.eigenvalues()[i] > -1e-12);
        if (std::abs(eig.eigenvalues()[i]) < 1e-12) ++near_zero;
    }
    CHECK(near_zero == 3);  // two translations + one rotation

    const auto ke2 = element_stiffness(2.0, 0.3);
    CHECK((ke2 - 2.0 * ke).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("element stiffness matches quadrature oracle and textbook diagonal") {
    const double nu = 0.3;
    const auto ke = element_stiffness(1.0, nu);
    const auto ref = oracle::simpson_element_stiffness(1.0, nu);
    CHECK((ke - ref).cwiseAbs().maxCoeff() < 1e-8);

    // every diagonal entry of the unit plane-stress quad is (1/2 - nu/6)/(1 - nu^2)
    const double k11 = (0.5 - nu / 6.0) / (1.0 - nu * nu);
    for (int i = 0; i < 8; ++i) CHECK(ke(i, i) == doctest::Approx(k11).epsilon(1e-12));
}

TEST_CASE("global assembly matches dense oracle") {
    const Mesh mesh = Mesh::cantilever(2, 2);
    const Material mat;
    const StiffnessSystem sys(mesh, mat);
    Rng rng(42);
    const Eigen::VectorXd rho = random_density(rng, mesh.n_elements());

    const Eigen::MatrixXd got = Eigen::MatrixXd(sys.assemble_global(rho));
    const Eigen::MatrixXd want = oracle::dense_stiffness(mesh, mat, rho);
    CHECK((got - want).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((got - got.transpose()).cwiseAbs().maxCoeff() == 0.0);

    // SIMP endpoints
    const Eigen::MatrixXd k_solid =
        Eigen::MatrixXd(sys.assemble_global(Eigen::VectorXd::Ones(mesh.n_elements())));
    const Eigen::MatrixXd k_void =
        Eigen::MatrixXd(sys.assemble_global(Eigen::VectorXd::Zero(mesh.n_elements())));
    Material big_floor;  // at rho=1 the floor is irrelevant
    big_floor.e_min = 0.5;
    CHECK((k_solid - oracle::dense_stiffness(mesh, big_floor,
                                             Eigen::VectorXd::Ones(mesh.n_elements())))
              .cwiseAbs()
              .maxCoeff() < 1e-14);
    CHECK((k_void - (mat.e_min / mat.e0) * k_solid).cwiseAbs().maxCoeff() < 1e-20);

    CHECK_THROWS_AS(sys.assemble_global(Eigen::VectorXd::Ones(3)), std::invalid_argument);
}

TEST_CASE("equilibrium solve matches dense LU oracle") {
    const Material mat;

    SUBCASE("single element cantilever, unit tip load") {
        const Mesh mesh = Mesh::cantilever(1, 1);
        StiffnessSystem sys(mesh, mat);
        BudgetLedger ledger;
        Eigen::VectorXd s = Eigen::VectorXd::Zero(mesh.n_dofs());
        s[2 * mesh.node_id(1, 1) + 1] = -1.0;

        const Eigen::VectorXd u = sys.solve(Eigen::VectorXd::Ones(1), s, ledger);
        const Eigen::VectorXd want = oracle::dense_solve(mesh, mat, Eigen::VectorXd::Ones(1), s);
        CHECK(oracle::rel_error(u, want) < 1e-12);
        for (int d : mesh.fixed_dofs()) CHECK(u[d] == 0.0);
    }

    SUBCASE("random density, 4x3 mesh") {
        const Mesh mesh = Mesh::cantilever(4, 3);
        StiffnessSystem sys(mesh, mat);
        BudgetLedger ledger;
        Rng rng(7);
        const Eigen::VectorXd rho = random_density(rng, mesh.n_elements(), 0.2, 1.0);
        const Eigen::VectorXd s = tip_load(mesh);

        const Eigen::VectorXd u = sys.solve(rho, s, ledger);
        CHECK(oracle::rel_error(u, oracle::dense_solve(mesh, mat, rho, s)) < 1e-10);

        // linearity
        const Eigen::VectorXd u2 = sys.solve(rho, 2.0 * s, ledger);
        CHECK(oracle::rel_error(u2, 2.0 * u) < 1e-12);
    }

    SUBCASE("zero load gives zero displacement") {
        const Mesh mesh = Mesh::cantilever(2, 2);
        StiffnessSystem sys(mesh, mat);
        BudgetLedger ledger;
        const Eigen::VectorXd u = sys.solve(Eigen::VectorXd::Ones(mesh.n_elements()),
                                            Eigen::VectorXd::Zero(mesh.n_dofs()), ledger);
        CHECK(u.norm() == 0.0);
    }

    SUBCASE("no boundary conditions is singular") {
        const Mesh mesh(2, 2, {});
        StiffnessSystem sys(mesh, mat);
        BudgetLedger ledger;
        CHECK_THROWS_AS(sys.solve(Eigen::VectorXd::Ones(mesh.n_elements()),
                                  tip_load(mesh), ledger),
                        std::runtime_error);
    }
}

TEST_CASE("residual contract holds with near-void elements") {
    // random rho spanning [0,1] puts moduli across nine orders of magnitude
    const Mesh mesh = Mesh::cantilever(8, 8);
    const Material mat;
    StiffnessSystem sys(mesh, mat);
    BudgetLedger ledger;
    Rng rng(11);
    const Eigen::VectorXd s = tip_load(mesh);
    for (int trial = 0; trial < 5; ++trial) {
        const Eigen::VectorXd rho = random_density(rng, mesh.n_elements());
        const Eigen::VectorXd u = sys.solve(rho, s, ledger);
        const Eigen::SparseMatrix<double> k = sys.assemble_global(rho);
        Eigen::VectorXd r = k * u - s;
        for (int d : mesh.fixed_dofs()) r[d] = 0.0;  // reactions live on fixed dofs
        CHECK(r.norm() <= 1e-8 * s.norm());
    }
}

TEST_CASE("compliance identities") {
    const Mesh mesh = Mesh::cantilever(4, 4);
    const Material mat;
    StiffnessSystem sys(mesh, mat);
    BudgetLedger ledger;
    Rng rng(3);
    const Eigen::VectorXd rho = random_density(rng, mesh.n_elements(), 0.3, 1.0);
    const Eigen::VectorXd s = tip_load(mesh);
    const Eigen::VectorXd u = sys.solve(rho, s, ledger);

    const Eigen::SparseMatrix<double> k = sys.assemble_global(rho);
    const double f = compliance(u, k);
    CHECK(f > 0.0);
    CHECK(f == doctest::Approx(0.5 * s.dot(u)).epsilon(1e-8));
    CHECK(sys.compliance_of(u, rho) == doctest::Approx(f).epsilon(1e-12));
    CHECK(compliance(Eigen::VectorXd::Zero(mesh.n_dofs()), k) == 0.0);

    // softer structure (q=1 so halving rho halves stiffness) complies more
    Material linear = mat;
    linear.q = 1.0;
    StiffnessSystem lin_sys(mesh, linear);
    const Eigen::VectorXd u_soft = lin_sys.solve(0.5 * rho, s, ledger);
    const Eigen::VectorXd u_hard = lin_sys.solve(rho, s, ledger);
    CHECK(0.5 * s.dot(u_soft) > 0.5 * s.dot(u_hard));
}

TEST_CASE("compliance sensitivity matches finite differences") {
    const Mesh mesh = Mesh::cantilever(4, 4);
    const Material mat;
    StiffnessSystem sys(mesh, mat);
    Rng rng(19);
    const Eigen::VectorXd s = tip_load(mesh);
    const Eigen::VectorXd rho = random_density(rng, mesh.n_elements(), 0.3, 1.0);

    BudgetLedger ledger;
    const Eigen::VectorXd u = sys.solve(rho, s, ledger);
    const Eigen::VectorXd grad = compliance_sensitivity(u, rho, mesh, mat);
    for (int e = 0; e < mesh.n_elements(); ++e) CHECK(grad[e] <= 0.0);

    BudgetLedger fd_ledger;
    const Eigen::VectorXd fd = oracle::central_difference(
        [&](const Eigen::VectorXd& r) {
            const Eigen::VectorXd v = sys.solve(r, s, fd_ledger);
            return sys.compliance_of(v, r);
        },
        rho, 1e-6);
    CHECK(oracle::rel_error(grad, fd) < 1e-4);

    // zero load -> zero sensitivity
    CHECK(compliance_sensitivity(Eigen::VectorXd::Zero(mesh.n_dofs()), rho, mesh, mat).norm() ==
          0.0);
}

TEST_CASE("budget ledger counts every solve") {
    const Mesh mesh = Mesh::cantilever(2, 2);
    StiffnessSystem sys(mesh, Material{});
    BudgetLedger ledger;
    const Eigen::VectorXd rho = Eigen::VectorXd::Ones(mesh.n_elements());
    const Eigen::VectorXd s = tip_load(mesh);
    for (int i = 0; i < 5; ++i) sys.solve(rho, s, ledger);
    sys.solve(rho, s, ledger, SolveKind::Scoring);
    CHECK(ledger.total() == 6);
    CHECK(ledger.count(SolveKind::TopOpt) == 5);
    CHECK(ledger.count(SolveKind::Scoring) == 1);
}

TEST_CASE("capped ledger consumes headroom then throws") {
    BudgetLedger ledger(10);
    for (int i = 0; i < 9; ++i) ledger.charge(SolveKind::TopOpt);
    CHECK(ledger.remaining() == 1);
    CHECK_THROWS_AS(ledger.charge(SolveKind::Scoring, 3), BudgetExhausted);
    CHECK(ledger.total() == 10);  // the last unit was still consumed
    CHECK(ledger.remaining() == 0);
    CHECK_THROWS_AS(ledger.charge(SolveKind::TopOpt), BudgetExhausted);
    CHECK(ledger.total() == 10);

    BudgetLedger uncapped;
    uncapped.charge(SolveKind::TopOpt, 1000000);
    CHECK(uncapped.total() == 1000000);
    CHECK(uncapped.remaining() == -1);
}

TEST_CASE("material validation") {
    Material floor_above_solid;
    floor_above_solid.e_min = 2.0;
    CHECK_THROWS_AS(floor_above_solid.validate(), std::invalid_argument);
    Material zero_floor;
    zero_floor.e_min = 0.0;
    CHECK_THROWS_AS(zero_floor.validate(), std::invalid_argument);
    Material incompressible;
    incompressible.nu = 0.5;
    CHECK_THROWS_AS(incompressible.validate(), std::invalid_argument);
    Material sub_linear;
    sub_linear.q = 0.5;
    CHECK_THROWS_AS(sub_linear.validate(), std::invalid_argument);
    CHECK_NOTHROW(Material{}.validate());
}

}  // TEST_SUITE

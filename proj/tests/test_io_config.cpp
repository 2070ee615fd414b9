#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "topoforge/config.hpp"
#include "topoforge/io.hpp"
#include "topoforge/rng.hpp"

using namespace topoforge;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const char* name) : path(std::string("/tmp/topoforge_test_") + name) {}
    ~TempFile() { std::remove(path.c_str()); }
};

Eigen::VectorXd random_vector(Rng& rng, int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = rng.uniform(-2.0, 2.0);
    return v;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("solve records round-trip") {
    TempFile file("records.tdto");
    Rng rng(5);
    std::vector<SolveRecord> records(3);
    for (int i = 0; i < 3; ++i) {
        records[i].setting = {0.1 * i, 41.0, 7.0};
        records[i].x = random_vector(rng, 12);
        records[i].f = rng.uniform(0.0, 500.0);
        records[i].grad_f = random_vector(rng, 12);
        records[i].fea_count = 1000 + i;
    }
    write_records(file.path, records);
    const std::vector<SolveRecord> back = read_records(file.path);
    REQUIRE(back.size() == 3);
    for (int i = 0; i < 3; ++i) {
        CHECK(back[i].setting == records[i].setting);
        CHECK(back[i].x == records[i].x);
        CHECK(back[i].f == records[i].f);
        CHECK(back[i].grad_f == records[i].grad_f);
        CHECK(back[i].fea_count == records[i].fea_count);
    }
}

TEST_CASE("record reader rejects foreign bytes") {
    TempFile file("bad.tdto");

    SUBCASE("wrong magic") {
        std::ofstream(file.path, std::ios::binary) << "NOPE rest does not matter";
        CHECK_THROWS_WITH_AS(read_records(file.path),
                             doctest::Contains("not a TDTO file"), std::runtime_error);
    }

    SUBCASE("wrong version") {
        std::ofstream(file.path, std::ios::binary) << "TDTO" << '\x09' << "xxxxxxxx";
        CHECK_THROWS_WITH_AS(read_records(file.path),
                             doctest::Contains("unsupported TDTO version"), std::runtime_error);
    }

    SUBCASE("truncated payload") {
        std::vector<SolveRecord> one(1);
        one[0].setting = {1.0};
        one[0].x = Eigen::VectorXd::Zero(4);
        one[0].grad_f = Eigen::VectorXd::Zero(4);
        write_records(file.path, one);
        const std::string bytes = slurp(file.path);
        std::ofstream(file.path, std::ios::binary)
            << bytes.substr(0, bytes.size() - 5);
        CHECK_THROWS_AS(read_records(file.path), std::runtime_error);
    }
}

TEST_CASE("model files round-trip bitwise") {
    TempFile file("model.tdto");
    const GeneratorParams params = init_generator(Architecture{{3, 6, 9}}, 77);
    write_model(file.path, params);
    const GeneratorParams back = read_model(file.path);
    REQUIRE(back.arch.layers == params.arch.layers);
    for (std::size_t l = 0; l < params.w.size(); ++l) {
        CHECK(back.w[l] == params.w[l]);
        CHECK(back.b[l] == params.b[l]);
    }
    Rng rng(3);
    const Eigen::VectorXd probe = random_vector(rng, 3);
    CHECK(forward(back, probe) == forward(params, probe));
    // second write of the loaded model is byte-identical
    TempFile copy("model2.tdto");
    write_model(copy.path, back);
    CHECK(slurp(copy.path) == slurp(file.path));
}

TEST_CASE("pgm export") {
    const Mesh mesh = Mesh::cantilever(4, 3);
    Rng rng(9);
    Eigen::VectorXd rho(mesh.n_elements());
    for (int e = 0; e < rho.size(); ++e) rho[e] = rng.uniform();
    TempFile file("rho.pgm");
    write_pgm(file.path, mesh, rho);

    SUBCASE("header and pixel layout") {
        const std::string bytes = slurp(file.path);
        CHECK(bytes.rfind("P5\n4 3\n255\n", 0) == 0);
        REQUIRE(bytes.size() == 11 + 12);
        // first pixel is the top-left element (ex=0, ey=ny-1)
        const unsigned char first = bytes[11];
        CHECK(first == static_cast<unsigned char>(
                           std::lround(255.0 * rho[mesh.element_id(0, 2)])));
    }

    SUBCASE("round-trip within quantization") {
        const Eigen::VectorXd back = read_pgm(file.path, mesh);
        CHECK((back - rho).cwiseAbs().maxCoeff() <= 0.5 / 255.0 + 1e-12);
    }

    SUBCASE("values clamp instead of wrapping") {
        Eigen::VectorXd wild = rho;
        wild[0] = 1.7;
        wild[1] = -0.3;
        write_pgm(file.path, mesh, wild);
        const Eigen::VectorXd back = read_pgm(file.path, mesh);
        CHECK(back[0] == 1.0);
        CHECK(back[1] == 0.0);
    }
}

TEST_CASE("history log") {
    TempFile file("history.csv");
    HistoryWriter writer(file.path);
    writer.append(0, 80.0, {1.5707963267948966}, 12.25, 301.5);
    // rows are flushed as written; read while the writer is still alive
    const std::string text = slurp(file.path);
    CHECK(text ==
          "iteration,remaining_budget,chosen_setting,score,test_metric\n"
          "0,80,1.5707963267948966,12.25,301.5\n");
    writer.append(1, 40.0, {9.0, 4.0, 0.5}, 3.5, 299.0);
    CHECK(slurp(file.path).find("1,40,9;4;0.5,3.5,299\n") != std::string::npos);
}

}  // TEST_SUITE

TEST_SUITE("config") {

TEST_CASE("serialize-parse fixpoint") {
    ExperimentConfig config;
    config.solver.r0 = config.solver.r1 = 1e-5;
    config.seed = 42;
    config.hidden = {32, 128};
    const std::string text = serialize_config(config);
    const ExperimentConfig back = parse_config(text);
    CHECK(serialize_config(back) == text);
    CHECK(back.solver.r0 == 1e-5);
    CHECK(back.seed == 42);
    CHECK(back.hidden == std::vector<int>{32, 128});
}

TEST_CASE("comments, spacing, and sections are tolerated") {
    const ExperimentConfig config = parse_config(
        "# leading comment\n"
        "[mesh]\n"
        "nx = 12   # trailing comment\n"
        "  ny=4\n"
        "\n"
        "[experiment]\n"
        "case = 2\n"
        "load_region = 8 12 0 4\n");
    CHECK(config.nx == 12);
    CHECK(config.ny == 4);
    CHECK(config.case_kind == CaseKind::RegionAngle);
    const Mesh mesh = Mesh::cantilever(config.nx, config.ny);
    const LoadRegion region = config.region(mesh);
    CHECK(region.x0 == 8);
    CHECK(region.y1 == 4);
}

TEST_CASE("diagnostics name the offender") {
    CHECK_THROWS_WITH_AS(parse_config("[mesh]\nnnx = 3\n"),
                         doctest::Contains("unknown key 'nnx'"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config("[mesh]\nnx = twelve\n"),
                         doctest::Contains("bad value 'twelve' for key 'nx'"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config("[experiment]\nstrategy = greedy\n"),
                         doctest::Contains("bad value 'greedy'"), ConfigError);
    CHECK_THROWS_AS(parse_config("[mesh]\nnx\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[solver\nr0 = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[mesh]\nnx = 0\n"), ConfigError);  // fails validation
}

TEST_CASE("default region sentinel") {
    ExperimentConfig config;
    const Mesh mesh = Mesh::cantilever(60, 20);
    const LoadRegion def = config.region(mesh);
    CHECK(def.x0 == 40);
    CHECK(def.x1 == 60);
    const std::string text = serialize_config(config);
    CHECK(text.find("load_region = default") != std::string::npos);
}

TEST_CASE("ground-truth hash scope") {
    ExperimentConfig a;

    SUBCASE("solver-side changes move the hash") {
        ExperimentConfig b = a;
        b.solver.r0 = 0.5;
        CHECK(solver_scope_hash(a) != solver_scope_hash(b));
        ExperimentConfig c = a;
        c.nx = 30;
        CHECK(solver_scope_hash(a) != solver_scope_hash(c));
        ExperimentConfig d = a;
        d.case_kind = CaseKind::RegionAngle;
        CHECK(solver_scope_hash(a) != solver_scope_hash(d));
    }

    SUBCASE("learning-side changes do not") {
        ExperimentConfig b = a;
        b.trainer.epochs = 9;
        b.strategy = Strategy::Static;
        b.weighted_loss = false;
        b.seed = 999;
        b.kkt.w0 = 3.0;
        CHECK(solver_scope_hash(a) == solver_scope_hash(b));
    }
}

}  // TEST_SUITE

#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <limits>
#include <random>
#include <sstream>

#include "vmgcn/errors.hpp"
#include "vmgcn/graph.hpp"

using namespace vmgcn;

namespace {

Eigen::MatrixXd random_adjacency(int n, double p, unsigned seed) {
    std::mt19937 rng(seed);
    std::bernoulli_distribution coin(p);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (coin(rng)) a(i, j) = a(j, i) = 1.0;
    return a;
}

Eigen::VectorXd eigenvalues(const Eigen::MatrixXd& m) {
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m).eigenvalues();
}

Eigen::MatrixXd triangle_distances() {
    Eigen::MatrixXd d(3, 3);
    d << 0, 1, 3, 1, 0, 2, 3, 2, 0;
    return d;
}

}  // namespace

TEST_CASE("adjacency threshold hand example") {
    const Eigen::MatrixXd a = build_adjacency(triangle_distances(), 2.0, 0.5);
    Eigen::MatrixXd expected(3, 3);
    expected << 0, 1, 0, 1, 0, 0, 0, 0, 0;
    CHECK(a == expected);
}

TEST_CASE("adjacency extremes and errors") {
    const Eigen::MatrixXd d = triangle_distances();
    CHECK(build_adjacency(d, 2.0, 0.0) == Eigen::MatrixXd::Ones(3, 3) - Eigen::MatrixXd::Identity(3, 3));
    CHECK(build_adjacency(d, 2.0, 1.5).isZero());
    CHECK_THROWS_AS(build_adjacency(d, 0.0, 0.5), InvalidConfig);
    CHECK_THROWS_AS(build_adjacency(d, -1.0, 0.5), InvalidConfig);

    Eigen::MatrixXd asym = d;
    asym(0, 1) = 5;
    CHECK_THROWS_AS(build_adjacency(asym, 1.0, 0.5), InvalidInput);
    Eigen::MatrixXd diag = d;
    diag(1, 1) = 1;
    CHECK_THROWS_AS(build_adjacency(diag, 1.0, 0.5), InvalidInput);
}

TEST_CASE("unknown distances never connect") {
    Eigen::MatrixXd d = triangle_distances();
    d(0, 2) = d(2, 0) = std::numeric_limits<double>::infinity();
    const Eigen::MatrixXd a = build_adjacency(d, 2.0, 0.0);
    CHECK(a(0, 2) == 0.0);
    CHECK(a(0, 1) == 1.0);
    CHECK(distance_sigma(d) == doctest::Approx(0.5));
}

TEST_CASE("adjacency is monotone in r") {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(0.1, 10.0);
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(12, 12);
    for (int i = 0; i < 12; ++i)
        for (int j = i + 1; j < 12; ++j) d(i, j) = d(j, i) = u(rng);
    const double sigma = distance_sigma(d);
    Eigen::MatrixXd prev = build_adjacency(d, sigma, 0.0);
    for (double r = 0.05; r <= 1.0; r += 0.05) {
        const Eigen::MatrixXd cur = build_adjacency(d, sigma, r);
        CHECK((cur.array() <= prev.array()).all());
        CHECK(cur == cur.transpose());
        prev = cur;
    }
}

TEST_CASE("laplacian examples") {
    Eigen::MatrixXd pair(2, 2);
    pair << 0, 1, 1, 0;
    const Eigen::MatrixXd l = normalized_laplacian(pair);
    Eigen::MatrixXd expected(2, 2);
    expected << 1, -1, -1, 1;
    CHECK((l - expected).cwiseAbs().maxCoeff() < 1e-15);
    const Eigen::VectorXd ev = eigenvalues(l);
    CHECK(ev(0) == doctest::Approx(0.0));
    CHECK(ev(1) == doctest::Approx(2.0));

    CHECK(normalized_laplacian(Eigen::MatrixXd::Zero(4, 4)) == Eigen::MatrixXd::Identity(4, 4));

    const Eigen::MatrixXd k3 = Eigen::MatrixXd::Ones(3, 3) - Eigen::MatrixXd::Identity(3, 3);
    const Eigen::VectorXd ek = eigenvalues(normalized_laplacian(k3));
    CHECK(std::abs(ek(0)) < 1e-12);
    CHECK(ek(1) == doctest::Approx(1.5));
    CHECK(ek(2) == doctest::Approx(1.5));
}

TEST_CASE("isolated node keeps identity row") {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3, 3);
    a(0, 1) = a(1, 0) = 1;
    const Eigen::MatrixXd l = normalized_laplacian(a);
    CHECK(l.row(2) == Eigen::RowVector3d(0, 0, 1));
    CHECK(l.col(2) == Eigen::Vector3d(0, 0, 1));
}

TEST_CASE("laplacian is PSD with spectrum in [0, 2]") {
    std::mt19937 rng(11);
    std::normal_distribution<double> g;
    for (unsigned seed = 0; seed < 5; ++seed) {
        const Eigen::MatrixXd l = normalized_laplacian(random_adjacency(20, 0.25, seed));
        CHECK((l - l.transpose()).cwiseAbs().maxCoeff() == 0.0);
        const Eigen::VectorXd ev = eigenvalues(l);
        CHECK(ev.minCoeff() >= -1e-8);
        CHECK(ev.maxCoeff() <= 2.0 + 1e-8);
        for (int t = 0; t < 10; ++t) {
            Eigen::VectorXd x(20);
            for (int i = 0; i < 20; ++i) x(i) = g(rng);
            CHECK(x.dot(l * x) >= -1e-10);
        }
    }
}

TEST_CASE("power iteration matches dense eigensolver") {
    CHECK(max_eigenvalue(Eigen::MatrixXd::Identity(5, 5)) == doctest::Approx(1.0).epsilon(1e-12));
    Eigen::MatrixXd pair(2, 2);
    pair << 1, -1, -1, 1;
    CHECK(std::abs(max_eigenvalue(pair) - 2.0) < 1e-6);

    for (int n : {16, 33, 64}) {
        for (unsigned seed = 0; seed < 4; ++seed) {
            const Eigen::MatrixXd l = normalized_laplacian(random_adjacency(n, 0.2, seed + 100));
            const double oracle = eigenvalues(l).maxCoeff();
            CHECK(std::abs(max_eigenvalue(l) - oracle) < 1e-6);
        }
    }

    // Indefinite matrix: the shift must keep the top of the spectrum dominant.
    Eigen::MatrixXd m(2, 2);
    m << -5, 0, 0, 1;
    CHECK(std::abs(max_eigenvalue(m) - 1.0) < 1e-6);
}

TEST_CASE("power iteration reports non-convergence with last iterate") {
    Eigen::MatrixXd l = normalized_laplacian(random_adjacency(16, 0.3, 7));
    PowerIterationOptions opts;
    opts.max_iterations = 1;
    opts.tolerance = 1e-15;
    try {
        max_eigenvalue(l, opts);
        FAIL("expected NonConvergence");
    } catch (const NonConvergence& e) {
        CHECK(e.last_vector().size() == 16);
        CHECK(std::isfinite(e.last_value()));
    }
}

TEST_CASE("chebyshev basis") {
    Eigen::MatrixXd path(3, 3);
    path << 0, 1, 0, 1, 0, 1, 0, 1, 0;
    const SpectralOps ops = make_spectral_ops(path, 3);
    REQUIRE(ops.order() == 3);
    CHECK(ops.cheb_basis[0] == Eigen::MatrixXd::Identity(3, 3));
    CHECK(ops.cheb_basis[1] == ops.scaled_laplacian);

    // Path 1-2-3: degrees 1,2,1; lambda_max = 2 so L_hat = L - I = -D^-1/2 A D^-1/2.
    CHECK(ops.lambda_max == doctest::Approx(2.0).epsilon(1e-9));
    const double h = 1.0 / std::sqrt(2.0);
    Eigen::MatrixXd lhat(3, 3);
    lhat << 0, -h, 0, -h, 0, -h, 0, -h, 0;
    CHECK((ops.scaled_laplacian - lhat).cwiseAbs().maxCoeff() < 1e-8);
    // L_hat^2 = [[.5,0,.5],[0,1,0],[.5,0,.5]] by hand, so T_2 = 2 L_hat^2 - I.
    Eigen::MatrixXd t2(3, 3);
    t2 << 0, 0, 1, 0, 1, 0, 1, 0, 0;
    CHECK((ops.cheb_basis[2] - t2).cwiseAbs().maxCoeff() < 1e-8);

    const Eigen::VectorXd ev = eigenvalues(ops.scaled_laplacian);
    CHECK(ev.minCoeff() >= -1.0 - 1e-6);
    CHECK(ev.maxCoeff() <= 1.0 + 1e-6);

    CHECK(chebyshev_basis(lhat, 1).size() == 1);
    CHECK(chebyshev_basis(lhat, 2).size() == 2);
    CHECK_THROWS_AS(chebyshev_basis(lhat, 0), InvalidConfig);
}

TEST_CASE("chebyshev recurrence matches closed form T3") {
    for (unsigned seed = 0; seed < 5; ++seed) {
        const Eigen::MatrixXd l = normalized_laplacian(random_adjacency(24, 0.2, seed + 50));
        const Eigen::MatrixXd lhat = scaled_laplacian(l, max_eigenvalue(l));
        const auto basis = chebyshev_basis(lhat, 4);
        const Eigen::MatrixXd closed = 4.0 * lhat * lhat * lhat - 3.0 * lhat;
        CHECK((basis[3] - closed).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("graph csv round trip") {
    std::istringstream nodes("node_id,lat,lon,lanes\nA,34.0,-118.2,3\nB,34.1,-118.3,2\nC,34.2,-118.4,4\n");
    std::istringstream dist("id_a,id_b,distance_km\nA,B,1\nB,C,2\nA,C,3\n");
    RoadGraph g = read_road_graph(nodes, dist);
    REQUIRE(g.size() == 3);
    CHECK(g.distances == triangle_distances());
    CHECK(g.metadata[2].lane_count == 4);
    g.adjacency = build_adjacency(g.distances, 2.0, 0.5);
    CHECK(g.edge_count() == 1);

    std::ostringstream out;
    write_dense_csv(out, g.node_ids, g.adjacency);
    CHECK(out.str() == "node_id,A,B,C\nA,0,1,0\nB,1,0,0\nC,0,0,0\n");
}

TEST_CASE("graph csv errors carry line numbers") {
    std::istringstream nodes("node_id,lat,lon,lanes\nA,34.0,-118.2,3\nB,x,-118.3,2\n");
    std::istringstream dist("");
    try {
        read_road_graph(nodes, dist);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.lines() == std::vector<std::size_t>{3});
    }
    std::istringstream nodes2("A,34.0,-118.2,3\n");
    std::istringstream dist2("A,Z,1\n");
    CHECK_THROWS_AS(read_road_graph(nodes2, dist2), ParseError);
}

TEST_CASE("spectral ops survive slow power iteration") {
    const int n = 200;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) a(i, (i + 1) % n) = a((i + 1) % n, i) = 1;
    CHECK_THROWS_AS(max_eigenvalue(normalized_laplacian(a)), NonConvergence);
    const SpectralOps ops = make_spectral_ops(a, 2);
    CHECK(ops.lambda_max == doctest::Approx(2.0).epsilon(1e-12));
}

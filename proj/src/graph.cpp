#include "vmgcn/graph.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <random>

#include "vmgcn/csv.hpp"
#include "vmgcn/errors.hpp"

namespace vmgcn {

std::size_t RoadGraph::edge_count() const {
    std::size_t edges = 0;
    for (Eigen::Index i = 0; i < adjacency.rows(); ++i)
        for (Eigen::Index j = i + 1; j < adjacency.cols(); ++j)
            if (adjacency(i, j) != 0.0) ++edges;
    return edges;
}

void validate_distances(const Eigen::MatrixXd& d) {
    if (d.rows() != d.cols()) throw InvalidInput("distance matrix must be square");
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
        if (d(i, i) != 0.0) throw InvalidInput("distance matrix diagonal must be zero");
        for (Eigen::Index j = 0; j < d.cols(); ++j) {
            if (std::isnan(d(i, j)) || d(i, j) < 0.0) throw InvalidInput("distances must be non-negative");
            if (d(i, j) != d(j, i)) throw InvalidInput("distance matrix must be symmetric");
        }
    }
}

double distance_sigma(const Eigen::MatrixXd& d) {
    double sum = 0.0, sq = 0.0;
    std::size_t count = 0;
    for (Eigen::Index i = 0; i < d.rows(); ++i)
        for (Eigen::Index j = 0; j < d.cols(); ++j)
            if (i != j && std::isfinite(d(i, j))) {
                sum += d(i, j);
                sq += d(i, j) * d(i, j);
                ++count;
            }
    if (count == 0) throw InvalidInput("no finite off-diagonal distances to derive sigma from");
    const double mean = sum / static_cast<double>(count);
    return std::sqrt(std::max(0.0, sq / static_cast<double>(count) - mean * mean));
}

Eigen::MatrixXd build_adjacency(const Eigen::MatrixXd& distances, double sigma, double r) {
    if (!(sigma > 0.0)) throw InvalidConfig("sigma must be positive");
    validate_distances(distances);
    const Eigen::Index n = distances.rows();
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    const double s2 = sigma * sigma;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i == j) continue;  // self-loops dropped
            const double d = distances(i, j);
            if (std::isfinite(d) && std::exp(-d * d / s2) >= r) a(i, j) = 1.0;
        }
    return a;
}

Eigen::MatrixXd normalized_laplacian(const Eigen::MatrixXd& a) {
    const Eigen::Index n = a.rows();
    Eigen::VectorXd inv_sqrt_deg(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double deg = a.row(i).sum();
        inv_sqrt_deg(i) = deg > 0.0 ? 1.0 / std::sqrt(deg) : 0.0;
    }
    Eigen::MatrixXd l = Eigen::MatrixXd::Identity(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            if (a(i, j) != 0.0) l(i, j) -= inv_sqrt_deg(i) * a(i, j) * inv_sqrt_deg(j);
    return l;
}

double max_eigenvalue(const Eigen::MatrixXd& m, const PowerIterationOptions& opts) {
    const Eigen::Index n = m.rows();
    if (n == 0 || m.cols() != n) throw InvalidInput("max_eigenvalue needs a non-empty square matrix");

    // Shift by the Gershgorin lower bound so that the top of the spectrum is
    // also the largest in magnitude.
    double lower = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) {
        const double off = m.row(i).cwiseAbs().sum() - std::abs(m(i, i));
        lower = std::min(lower, m(i, i) - off);
    }
    const double shift = std::max(0.0, -lower);
    const Eigen::MatrixXd shifted = m + shift * Eigen::MatrixXd::Identity(n, n);

    std::mt19937_64 rng(0x5eed);
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = 0.5 + static_cast<double>(rng() >> 11) * 0x1.0p-53;
    v.normalize();

    // Stop on the eigen-residual: for a symmetric matrix some eigenvalue lies
    // within ||M v - rho v|| of the Rayleigh quotient rho.
    double lambda = v.dot(shifted * v);
    for (int it = 0; it < opts.max_iterations; ++it) {
        Eigen::VectorXd w = shifted * v;
        const double norm = w.norm();
        if (norm == 0.0) return -shift;  // zero matrix after shift
        w /= norm;
        const Eigen::VectorXd mw = shifted * w;
        lambda = w.dot(mw);
        v = w;
        const double residual = (mw - lambda * w).norm();
        if (residual <= opts.tolerance * std::max(1.0, std::abs(lambda))) return lambda - shift;
    }
    throw NonConvergence("power iteration did not converge", lambda - shift,
                         std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::MatrixXd scaled_laplacian(const Eigen::MatrixXd& laplacian, double lambda_max) {
    if (!(lambda_max > 0.0)) throw InvalidInput("lambda_max must be positive");
    return 2.0 * laplacian / lambda_max - Eigen::MatrixXd::Identity(laplacian.rows(), laplacian.cols());
}

std::vector<Eigen::MatrixXd> chebyshev_basis(const Eigen::MatrixXd& scaled, int order) {
    if (order < 1) throw InvalidConfig("Chebyshev order must be >= 1");
    const Eigen::Index n = scaled.rows();
    std::vector<Eigen::MatrixXd> basis;
    basis.push_back(Eigen::MatrixXd::Identity(n, n));
    if (order >= 2) basis.push_back(scaled);
    for (int m = 2; m < order; ++m) {
        const auto um = static_cast<std::size_t>(m);
        basis.push_back(2.0 * scaled * basis[um - 1] - basis[um - 2]);
    }
    return basis;
}

SpectralOps make_spectral_ops(const Eigen::MatrixXd& adjacency, int order) {
    SpectralOps ops;
    ops.laplacian = normalized_laplacian(adjacency);
    try {
        ops.lambda_max = max_eigenvalue(ops.laplacian);
    } catch (const NonConvergence&) {
        // Long chains and rings have a tiny spectral gap; a dense solve is
        // cheap at road-network sizes and always settles.
        ops.lambda_max = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(ops.laplacian, Eigen::EigenvaluesOnly)
                             .eigenvalues()
                             .maxCoeff();
    }
    ops.scaled_laplacian = scaled_laplacian(ops.laplacian, ops.lambda_max);
    ops.cheb_basis = chebyshev_basis(ops.scaled_laplacian, order);
    return ops;
}

RoadGraph read_road_graph(std::istream& nodes_csv, std::istream& distances_csv) {
    RoadGraph g;
    std::map<std::string, std::size_t> index;
    std::vector<std::size_t> bad;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(nodes_csv, line)) {
        ++lineno;
        if (csv::trim(line).empty()) continue;
        const auto f = csv::split(line);
        if (lineno == 1 && f.size() >= 1 && f[0] == "node_id") continue;
        double lat = 0, lon = 0;
        long long lanes = 0;
        if (f.size() < 4 || f[0].empty() || !csv::to_double(f[1], lat) || !csv::to_double(f[2], lon) ||
            !csv::to_int(f[3], lanes) || index.count(f[0])) {
            bad.push_back(lineno);
            continue;
        }
        index[f[0]] = g.node_ids.size();
        g.node_ids.push_back(f[0]);
        g.metadata.push_back({lat, lon, static_cast<int>(lanes)});
    }
    if (!bad.empty()) throw ParseError("node metadata: unparseable rows", bad);

    const auto n = static_cast<Eigen::Index>(g.node_ids.size());
    g.distances = Eigen::MatrixXd::Constant(n, n, std::numeric_limits<double>::infinity());
    g.distances.diagonal().setZero();
    lineno = 0;
    while (std::getline(distances_csv, line)) {
        ++lineno;
        if (csv::trim(line).empty()) continue;
        const auto f = csv::split(line);
        if (lineno == 1 && !f.empty() && f[0] == "id_a") continue;
        double d = 0;
        if (f.size() < 3 || !index.count(f[0]) || !index.count(f[1]) || !csv::to_double(f[2], d) || d < 0) {
            bad.push_back(lineno);
            continue;
        }
        const auto i = static_cast<Eigen::Index>(index[f[0]]);
        const auto j = static_cast<Eigen::Index>(index[f[1]]);
        if (i == j) continue;
        g.distances(i, j) = std::min(g.distances(i, j), d);
        g.distances(j, i) = g.distances(i, j);
    }
    if (!bad.empty()) throw ParseError("distances: unparseable rows or unknown node ids", bad);
    return g;
}

void write_dense_csv(std::ostream& os, const std::vector<std::string>& ids, const Eigen::MatrixXd& m) {
    os << "node_id";
    for (const auto& id : ids) os << ',' << id;
    os << '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        os << ids[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < m.cols(); ++j) os << ',' << csv::format(m(i, j));
        os << '\n';
    }
}

}  // namespace vmgcn

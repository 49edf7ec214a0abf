#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

namespace vmgcn {

struct NodeMeta {
    double latitude = 0.0;
    double longitude = 0.0;
    int lane_count = 0;
};

/// Road network: node order defines every N-indexed matrix in the model.
struct RoadGraph {
    std::vector<std::string> node_ids;
    Eigen::MatrixXd distances;  // km; +inf where no road path is known
    Eigen::MatrixXd adjacency;  // 0/1, symmetric, zero diagonal
    std::vector<NodeMeta> metadata;

    std::size_t size() const noexcept { return node_ids.size(); }
    std::size_t edge_count() const;
};

struct SpectralOps {
    Eigen::MatrixXd laplacian;
    Eigen::MatrixXd scaled_laplacian;
    double lambda_max = 0.0;
    std::vector<Eigen::MatrixXd> cheb_basis;  // T_0 .. T_{M-1}

    std::size_t order() const noexcept { return cheb_basis.size(); }
};

/// Throws InvalidInput unless the matrix is square, symmetric, non-negative
/// with a zero diagonal.
void validate_distances(const Eigen::MatrixXd& distances);

/// Population standard deviation of the finite off-diagonal distances.
double distance_sigma(const Eigen::MatrixXd& distances);

/// A(i,j) = 1 iff i != j and exp(-d^2 / sigma^2) >= r.
Eigen::MatrixXd build_adjacency(const Eigen::MatrixXd& distances, double sigma, double r);

/// I - D^{-1/2} A D^{-1/2}; isolated nodes keep an identity row.
Eigen::MatrixXd normalized_laplacian(const Eigen::MatrixXd& adjacency);

struct PowerIterationOptions {
    double tolerance = 1e-9;
    int max_iterations = 10000;
};

/// Largest eigenvalue of a symmetric matrix by shifted power iteration.
/// Throws NonConvergence (carrying the last iterate) if the cap is hit.
double max_eigenvalue(const Eigen::MatrixXd& symmetric, const PowerIterationOptions& opts = {});

/// 2 L / lambda_max - I
Eigen::MatrixXd scaled_laplacian(const Eigen::MatrixXd& laplacian, double lambda_max);

/// T_0 = I, T_1 = L_hat, T_m = 2 L_hat T_{m-1} - T_{m-2}.
std::vector<Eigen::MatrixXd> chebyshev_basis(const Eigen::MatrixXd& scaled, int order);

/// Laplacian, lambda_max (computed once), scaled Laplacian and basis. Falls
/// back to a dense eigensolver when power iteration hits its cap.
SpectralOps make_spectral_ops(const Eigen::MatrixXd& adjacency, int order);

/// Nodes CSV: node_id,lat,lon,lanes. Distances CSV: id_a,id_b,distance_km
/// (undirected; unknown pairs stay at +inf). Adjacency is left empty.
RoadGraph read_road_graph(std::istream& nodes_csv, std::istream& distances_csv);

/// Dense CSV with a header row of node ids.
void write_dense_csv(std::ostream& os, const std::vector<std::string>& ids, const Eigen::MatrixXd& m);

}  // namespace vmgcn

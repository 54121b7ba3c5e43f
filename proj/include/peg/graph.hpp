#ifndef PEG_GRAPH_HPP
#define PEG_GRAPH_HPP

#include <cstddef>
#include <utility>
#include <vector>

#include "peg/matrix.hpp"

namespace peg {

using edge_list = std::vector<std::pair<std::size_t, std::size_t>>;

/// Undirected attributed graph: symmetric CSR adjacency plus an optional
/// dense feature matrix with one row per node. Edge weights are carried
/// internally (unit for every edge built from an edge list); self loops are
/// single diagonal entries.
class graph {
public:
    graph() = default;

    /// Builds from an undirected edge list. Mirrors single-direction pairs,
    /// drops duplicates (the count of dropped pairs is retrievable), sorts
    /// neighbours by index.
    static graph from_edges(std::size_t num_nodes, const edge_list& edges,
                            dense_matrix features = {});

    std::size_t num_nodes() const { return adj_.n; }
    std::size_t num_undirected_edges() const { return undirected_edges_.size(); }
    std::size_t duplicate_edges_dropped() const { return duplicates_dropped_; }
    bool allows_self_loops() const { return allows_self_loops_; }

    const sparse_matrix& adjacency() const { return adj_; }
    const dense_matrix& features() const { return features_; }
    std::size_t feature_dim() const { return features_.cols(); }

    /// Unique undirected edges as (u,v) with u <= v, sorted lexicographically.
    const edge_list& undirected_edges() const { return undirected_edges_; }

    bool has_edge(std::size_t u, std::size_t v) const;

    /// Copy with features replaced (row count must equal num_nodes).
    graph with_features(dense_matrix features) const;

    /// Copy with a unit self loop added at every node that lacks one.
    graph with_self_loops() const;

private:
    sparse_matrix adj_;
    dense_matrix features_;
    edge_list undirected_edges_;
    std::size_t duplicates_dropped_ = 0;
    bool allows_self_loops_ = false;
};

/// Row sums of the adjacency (the diagonal degree matrix) and their maximum.
struct degree_info {
    std::vector<double> degrees;
    double d_max = 0.0;
};

degree_info compute_degrees(const graph& g);

/// A bijection on [0, N): mapping[u] is the new index of node u.
struct permutation {
    std::vector<std::size_t> mapping;

    explicit permutation(std::vector<std::size_t> m);
    static permutation identity(std::size_t n);

    std::size_t size() const { return mapping.size(); }
    std::size_t operator()(std::size_t u) const { return mapping[u]; }
    permutation inverse() const;

    /// N-by-N matrix P with P[mapping[u], u] = 1, so P x relabels rows.
    dense_matrix to_matrix() const;
};

struct graph_match {
    permutation perm;   // relabels g2's nodes into g1's frame
    double distance;    // ||L1 - P L2 P^T||_F + ||X1 - P X2||_F at perm
};

enum class isolated_policy { pad_self_loop, reject };

/// A_hat = D^{-1/2} A D^{-1/2}. Zero-degree nodes get a unit self loop first
/// (pad_self_loop) or raise isolated_node_error (reject).
sparse_matrix normalized_adjacency(const graph& g,
                                   isolated_policy policy = isolated_policy::pad_self_loop);

/// L = I - A_hat, positive semidefinite with spectrum in [0, 2].
sparse_matrix normalized_laplacian(const graph& g,
                                   isolated_policy policy = isolated_policy::pad_self_loop);

/// Relabels nodes: output adjacency at (p(u), p(v)) equals input at (u, v),
/// output feature row p(u) equals input row u.
graph apply_permutation(const graph& g, const permutation& p);

/// Exhaustive minimization of ||L1 - P L2 P^T||_F + ||X1 - P X2||_F over all
/// N! permutations. Ties resolve to the lexicographically smallest mapping.
/// Guarded at N <= 10.
graph_match brute_force_match(const graph& g1, const graph& g2);

/// Graph-matching distance evaluated at a fixed permutation.
double match_distance(const graph& g1, const graph& g2, const permutation& p);

} // namespace peg

#endif // PEG_GRAPH_HPP

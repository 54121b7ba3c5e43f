#include "peg/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

#include "peg/errors.hpp"

namespace peg {

graph graph::from_edges(std::size_t num_nodes, const edge_list& edges, dense_matrix features) {
    if (num_nodes == 0) throw bad_dimension_error("graph: num_nodes must be positive");
    if (!features.empty() && features.rows() != num_nodes)
        throw feature_row_mismatch_error("graph: feature rows " + std::to_string(features.rows()) +
                                         " != num_nodes " + std::to_string(num_nodes));

    std::set<std::pair<std::size_t, std::size_t>> unique;
    std::size_t dropped = 0;
    bool self_loops = false;
    for (const auto& [a, b] : edges) {
        if (a >= num_nodes || b >= num_nodes)
            throw index_out_of_range_error("graph: edge endpoint out of range");
        auto e = std::minmax(a, b);
        if (a == b) self_loops = true;
        if (!unique.insert({e.first, e.second}).second) ++dropped;
    }

    graph g;
    g.features_ = std::move(features);
    g.duplicates_dropped_ = dropped;
    g.allows_self_loops_ = self_loops;
    g.undirected_edges_.assign(unique.begin(), unique.end());

    // symmetric CSR with unit weights
    std::vector<std::size_t> counts(num_nodes, 0);
    for (const auto& [u, v] : g.undirected_edges_) {
        ++counts[u];
        if (u != v) ++counts[v];
    }
    auto& adj = g.adj_;
    adj.n = num_nodes;
    adj.row_ptr.assign(num_nodes + 1, 0);
    for (std::size_t i = 0; i < num_nodes; ++i) adj.row_ptr[i + 1] = adj.row_ptr[i] + counts[i];
    adj.col_idx.resize(adj.row_ptr.back());
    adj.values.assign(adj.row_ptr.back(), 1.0);
    std::vector<std::size_t> cursor(adj.row_ptr.begin(), adj.row_ptr.end() - 1);
    for (const auto& [u, v] : g.undirected_edges_) {
        adj.col_idx[cursor[u]++] = v;
        if (u != v) adj.col_idx[cursor[v]++] = u;
    }
    for (std::size_t i = 0; i < num_nodes; ++i)
        std::sort(adj.col_idx.begin() + adj.row_ptr[i], adj.col_idx.begin() + adj.row_ptr[i + 1]);
    return g;
}

bool graph::has_edge(std::size_t u, std::size_t v) const {
    if (u >= adj_.n || v >= adj_.n) return false;
    return std::binary_search(adj_.col_idx.begin() + adj_.row_ptr[u],
                              adj_.col_idx.begin() + adj_.row_ptr[u + 1], v);
}

graph graph::with_features(dense_matrix features) const {
    if (features.rows() != num_nodes())
        throw feature_row_mismatch_error("with_features: row count != num_nodes");
    graph g = *this;
    g.features_ = std::move(features);
    return g;
}

graph graph::with_self_loops() const {
    edge_list edges = undirected_edges_;
    for (std::size_t v = 0; v < num_nodes(); ++v)
        if (!has_edge(v, v)) edges.emplace_back(v, v);
    return from_edges(num_nodes(), edges, features_);
}

degree_info compute_degrees(const graph& g) {
    const auto& a = g.adjacency();
    degree_info d;
    d.degrees.resize(a.n, 0.0);
    for (std::size_t u = 0; u < a.n; ++u) {
        double s = 0.0;
        for (std::size_t k = a.row_ptr[u]; k < a.row_ptr[u + 1]; ++k) s += a.values[k];
        d.degrees[u] = s;
        d.d_max = std::max(d.d_max, s);
    }
    return d;
}

permutation::permutation(std::vector<std::size_t> m) : mapping(std::move(m)) {
    std::vector<bool> seen(mapping.size(), false);
    for (std::size_t v : mapping) {
        if (v >= mapping.size() || seen[v])
            throw bad_dimension_error("permutation: mapping is not a bijection on [0, N)");
        seen[v] = true;
    }
}

permutation permutation::identity(std::size_t n) {
    std::vector<std::size_t> m(n);
    std::iota(m.begin(), m.end(), std::size_t{0});
    return permutation(std::move(m));
}

permutation permutation::inverse() const {
    std::vector<std::size_t> inv(mapping.size());
    for (std::size_t u = 0; u < mapping.size(); ++u) inv[mapping[u]] = u;
    return permutation(std::move(inv));
}

dense_matrix permutation::to_matrix() const {
    dense_matrix p(mapping.size(), mapping.size());
    for (std::size_t u = 0; u < mapping.size(); ++u) p(mapping[u], u) = 1.0;
    return p;
}

namespace {

std::vector<double> degrees_with_policy(const graph& g, isolated_policy policy) {
    degree_info d = compute_degrees(g);
    for (std::size_t v = 0; v < d.degrees.size(); ++v) {
        if (d.degrees[v] == 0.0) {
            if (policy == isolated_policy::reject)
                throw isolated_node_error("node " + std::to_string(v) +
                                          " has degree 0 and self-loop padding is disabled");
            d.degrees[v] = 1.0;  // padded unit self loop
        }
    }
    return d.degrees;
}

} // namespace

sparse_matrix normalized_adjacency(const graph& g, isolated_policy policy) {
    std::vector<double> deg = degrees_with_policy(g, policy);
    const auto& a = g.adjacency();
    sparse_matrix out = a;

    // padded self loops become explicit diagonal entries
    std::vector<std::size_t> padded;
    degree_info raw = compute_degrees(g);
    for (std::size_t v = 0; v < a.n; ++v)
        if (raw.degrees[v] == 0.0) padded.push_back(v);
    if (!padded.empty()) {
        sparse_matrix rebuilt;
        rebuilt.n = a.n;
        rebuilt.row_ptr.assign(a.n + 1, 0);
        std::vector<bool> is_padded(a.n, false);
        for (std::size_t v : padded) is_padded[v] = true;
        for (std::size_t u = 0; u < a.n; ++u)
            rebuilt.row_ptr[u + 1] =
                rebuilt.row_ptr[u] + (a.row_ptr[u + 1] - a.row_ptr[u]) + (is_padded[u] ? 1 : 0);
        rebuilt.col_idx.resize(rebuilt.row_ptr.back());
        rebuilt.values.resize(rebuilt.row_ptr.back());
        for (std::size_t u = 0; u < a.n; ++u) {
            std::size_t w = rebuilt.row_ptr[u];
            if (is_padded[u]) {
                rebuilt.col_idx[w] = u;
                rebuilt.values[w] = 1.0;
                ++w;
            }
            for (std::size_t k = a.row_ptr[u]; k < a.row_ptr[u + 1]; ++k, ++w) {
                rebuilt.col_idx[w] = a.col_idx[k];
                rebuilt.values[w] = a.values[k];
            }
        }
        out = std::move(rebuilt);
    }

    for (std::size_t u = 0; u < out.n; ++u) {
        const double du = 1.0 / std::sqrt(deg[u]);
        for (std::size_t k = out.row_ptr[u]; k < out.row_ptr[u + 1]; ++k)
            out.values[k] *= du / std::sqrt(deg[out.col_idx[k]]);
    }
    return out;
}

sparse_matrix normalized_laplacian(const graph& g, isolated_policy policy) {
    sparse_matrix ahat = normalized_adjacency(g, policy);
    // L = I - A_hat: negate and add the identity, inserting missing diagonals
    sparse_matrix l;
    l.n = ahat.n;
    l.row_ptr.assign(ahat.n + 1, 0);
    std::vector<bool> has_diag(ahat.n, false);
    for (std::size_t u = 0; u < ahat.n; ++u)
        for (std::size_t k = ahat.row_ptr[u]; k < ahat.row_ptr[u + 1]; ++k)
            if (ahat.col_idx[k] == u) has_diag[u] = true;
    for (std::size_t u = 0; u < ahat.n; ++u)
        l.row_ptr[u + 1] =
            l.row_ptr[u] + (ahat.row_ptr[u + 1] - ahat.row_ptr[u]) + (has_diag[u] ? 0 : 1);
    l.col_idx.resize(l.row_ptr.back());
    l.values.resize(l.row_ptr.back());
    for (std::size_t u = 0; u < ahat.n; ++u) {
        std::size_t w = l.row_ptr[u];
        bool diag_written = false;
        for (std::size_t k = ahat.row_ptr[u]; k < ahat.row_ptr[u + 1]; ++k) {
            const std::size_t v = ahat.col_idx[k];
            if (!diag_written && v > u && !has_diag[u]) {
                l.col_idx[w] = u;
                l.values[w] = 1.0;
                diag_written = true;
                ++w;
            }
            l.col_idx[w] = v;
            l.values[w] = (v == u) ? 1.0 - ahat.values[k] : -ahat.values[k];
            ++w;
        }
        if (!has_diag[u] && !diag_written) {
            l.col_idx[w] = u;
            l.values[w] = 1.0;
            ++w;
        }
    }
    return l;
}

graph apply_permutation(const graph& g, const permutation& p) {
    if (p.size() != g.num_nodes())
        throw length_mismatch_error("apply_permutation: permutation length != num_nodes");
    edge_list edges;
    edges.reserve(g.num_undirected_edges());
    for (const auto& [u, v] : g.undirected_edges()) edges.emplace_back(p(u), p(v));
    dense_matrix feats;
    if (!g.features().empty()) {
        feats = dense_matrix(g.num_nodes(), g.feature_dim());
        for (std::size_t u = 0; u < g.num_nodes(); ++u)
            for (std::size_t j = 0; j < g.feature_dim(); ++j) feats(p(u), j) = g.features()(u, j);
    }
    return graph::from_edges(g.num_nodes(), edges, std::move(feats));
}

double match_distance(const graph& g1, const graph& g2, const permutation& p) {
    if (g1.num_nodes() != g2.num_nodes())
        throw length_mismatch_error("match_distance: node counts differ");
    dense_matrix l1 = normalized_laplacian(g1).to_dense();
    dense_matrix l2 = normalized_laplacian(g2).to_dense();
    const std::size_t n = g1.num_nodes();
    double sl = 0.0;
    for (std::size_t u = 0; u < n; ++u)
        for (std::size_t v = 0; v < n; ++v) {
            const double d = l1(p(u), p(v)) - l2(u, v);
            sl += d * d;
        }
    double sx = 0.0;
    if (!g1.features().empty() || !g2.features().empty()) {
        if (g1.feature_dim() != g2.feature_dim())
            throw shape_mismatch_error("match_distance: feature widths differ");
        for (std::size_t u = 0; u < n; ++u)
            for (std::size_t j = 0; j < g1.feature_dim(); ++j) {
                const double d = g1.features()(p(u), j) - g2.features()(u, j);
                sx += d * d;
            }
    }
    return std::sqrt(sl) + std::sqrt(sx);
}

graph_match brute_force_match(const graph& g1, const graph& g2) {
    const std::size_t n = g1.num_nodes();
    if (n != g2.num_nodes())
        throw length_mismatch_error("brute_force_match: node counts differ");
    if (n > 10) throw too_large_error("brute_force_match: N > 10 (exhaustive N! search)");
    const bool f1 = !g1.features().empty(), f2 = !g2.features().empty();
    if (f1 != f2 || (f1 && g1.feature_dim() != g2.feature_dim()))
        throw shape_mismatch_error("brute_force_match: feature widths differ");

    dense_matrix l1 = normalized_laplacian(g1).to_dense();
    dense_matrix l2 = normalized_laplacian(g2).to_dense();

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::vector<std::size_t> best = perm;
    double best_dist = -1.0;
    do {
        double sl = 0.0;
        for (std::size_t u = 0; u < n; ++u)
            for (std::size_t v = 0; v < n; ++v) {
                const double d = l1(perm[u], perm[v]) - l2(u, v);
                sl += d * d;
            }
        double sx = 0.0;
        if (f1)
            for (std::size_t u = 0; u < n; ++u)
                for (std::size_t j = 0; j < g1.feature_dim(); ++j) {
                    const double d = g1.features()(perm[u], j) - g2.features()(u, j);
                    sx += d * d;
                }
        const double dist = std::sqrt(sl) + std::sqrt(sx);
        if (best_dist < 0.0 || dist < best_dist) {  // strict: keeps first (lexicographic) minimizer
            best_dist = dist;
            best = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));

    return graph_match{permutation(best), best_dist};
}

} // namespace peg

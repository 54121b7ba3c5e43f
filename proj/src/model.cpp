#include "peg/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "peg/errors.hpp"
#include "peg/kernels.hpp"
#include "peg/procrustes.hpp"

namespace peg {

using nlohmann::json;

propagation_structure build_propagation(const graph& g, const dense_matrix& z,
                                        edge_weight_mode mode, isolated_policy policy) {
    if (z.rows() != g.num_nodes())
        throw shape_mismatch_error("build_propagation: z rows != num_nodes");
    propagation_structure prop;
    prop.mode = mode;
    prop.ahat = normalized_adjacency(g, policy);
    const auto& a = prop.ahat;

    std::unordered_map<std::size_t, std::size_t> ids;  // key u * n + v, u <= v
    for (std::size_t u = 0; u < a.n; ++u)
        for (std::size_t k = a.row_ptr[u]; k < a.row_ptr[u + 1]; ++k) {
            const std::size_t v = a.col_idx[k];
            if (v < u) continue;
            ids[u * a.n + v] = prop.undirected.size();
            prop.undirected.emplace_back(u, v);
            prop.ahat_per_edge.push_back(a.values[k]);
        }
    prop.edge_id.resize(a.nnz());
    for (std::size_t u = 0; u < a.n; ++u)
        for (std::size_t k = a.row_ptr[u]; k < a.row_ptr[u + 1]; ++k) {
            const std::size_t v = a.col_idx[k];
            const auto key = std::min(u, v) * a.n + std::max(u, v);
            prop.edge_id[k] = ids.at(key);
        }

    prop.pe_feature.resize(prop.undirected.size());
    const std::size_t p = z.cols();
    for (std::size_t e = 0; e < prop.undirected.size(); ++e) {
        const auto [u, v] = prop.undirected[e];
        if (mode == edge_weight_mode::distance) {
            double s = 0.0;
            for (std::size_t j = 0; j < p; ++j) {
                const double d = z(u, j) - z(v, j);
                s += d * d;
            }
            prop.pe_feature[e] = std::sqrt(s);
        } else {
            prop.pe_feature[e] = dot(z.row(u), z.row(v), p);
        }
    }
    return prop;
}

std::vector<double> edge_weights(const dense_matrix& z,
                                 const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                                 const nn::mlp_params& phi, edge_weight_mode mode) {
    dense_matrix feat(edges.size(), 1);
    for (std::size_t e = 0; e < edges.size(); ++e) {
        const auto [u, v] = edges[e];
        if (u >= z.rows() || v >= z.rows())
            throw index_out_of_range_error("edge_weights: endpoint index out of range");
        if (mode == edge_weight_mode::distance) {
            double s = 0.0;
            for (std::size_t j = 0; j < z.cols(); ++j) {
                const double d = z(u, j) - z(v, j);
                s += d * d;
            }
            feat(e, 0) = std::sqrt(s);
        } else {
            feat(e, 0) = dot(z.row(u), z.row(v), z.cols());
        }
    }
    dense_matrix xi = nn::mlp_forward(phi, feat);
    std::vector<double> out(edges.size());
    for (std::size_t e = 0; e < edges.size(); ++e) out[e] = xi(e, 0);
    return out;
}

dense_matrix peg_forward(const peg_layer_params& layer, const propagation_structure& prop,
                         const dense_matrix& x) {
    if (x.rows() != prop.ahat.n) throw shape_mismatch_error("peg_forward: x rows != N");
    if (x.cols() != layer.w.rows()) throw shape_mismatch_error("peg_forward: x cols != W rows");
    dense_matrix feat(prop.pe_feature.size(), 1);
    for (std::size_t e = 0; e < feat.rows(); ++e) feat(e, 0) = prop.pe_feature[e];
    dense_matrix xi = nn::mlp_forward(layer.phi, feat);
    std::vector<double> scales(xi.rows());
    for (std::size_t e = 0; e < scales.size(); ++e) scales[e] = xi(e, 0);
    dense_matrix out =
        kernels::spmm_scaled(prop.ahat, prop.edge_id, scales, kernels::matmul(x, layer.w));
    for (std::size_t k = 0; k < out.size(); ++k)
        out.data()[k] = nn::apply_activation(layer.psi, out.data()[k]);
    return out;
}

// ---------------------------------------------------------------------------
// config json
// ---------------------------------------------------------------------------

namespace {

const char* pe_method_name(pe_method m) {
    return m == pe_method::laplacian_eigenmap ? "le" : "deepwalk";
}

pe_method pe_method_from_name(const std::string& s) {
    if (s == "le") return pe_method::laplacian_eigenmap;
    if (s == "deepwalk") return pe_method::factorization;
    throw parse_error("unknown pe method: " + s);
}

} // namespace

std::string peg_config::to_json() const {
    json j;
    j["layers"] = num_layers;
    j["hidden_dim"] = hidden_dim;
    j["activation"] = nn::activation_name(psi);
    j["pe_method"] = pe_method_name(method);
    j["pe_dim"] = pe_dim;
    j["phi_hidden"] = phi_hidden;
    j["decoder_hidden"] = decoder_hidden;
    j["decoder"] = decoder == decoder_mode::inner_product ? "inner_product" : "hadamard";
    j["edge_weights"] = edge_weights == edge_weight_mode::distance ? "distance" : "inner_product";
    j["dw_window"] = dw_window;
    j["dw_iters"] = dw_iters;
    j["pe_dense_cutoff"] = pe_dense_cutoff;
    return j.dump(2);
}

peg_config peg_config::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw parse_error(std::string("model config: ") + e.what());
    }
    peg_config c;
    c.num_layers = j.value("layers", c.num_layers);
    c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
    c.psi = nn::activation_from_name(j.value("activation", "relu"));
    c.method = pe_method_from_name(j.value("pe_method", "le"));
    c.pe_dim = j.value("pe_dim", c.pe_dim);
    c.phi_hidden = j.value("phi_hidden", c.phi_hidden);
    c.decoder_hidden = j.value("decoder_hidden", c.decoder_hidden);
    const std::string dec = j.value("decoder", "inner_product");
    if (dec != "inner_product" && dec != "hadamard")
        throw parse_error("model config: decoder must be inner_product or hadamard");
    c.decoder = dec == "inner_product" ? decoder_mode::inner_product : decoder_mode::hadamard;
    const std::string ew = j.value("edge_weights", "distance");
    if (ew != "distance" && ew != "inner_product")
        throw parse_error("model config: edge_weights must be distance or inner_product");
    c.edge_weights = ew == "distance" ? edge_weight_mode::distance : edge_weight_mode::inner_product;
    c.dw_window = j.value("dw_window", c.dw_window);
    c.dw_iters = j.value("dw_iters", c.dw_iters);
    c.pe_dense_cutoff = j.value("pe_dense_cutoff", c.pe_dense_cutoff);
    if (c.num_layers == 0) throw parse_error("model config: layers must be positive");
    return c;
}

void peg_config::save(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw io_error("peg_config::save: cannot open " + path);
    os << to_json() << "\n";
}

peg_config peg_config::load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw io_error("peg_config::load: cannot open " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return from_json(ss.str());
}

// ---------------------------------------------------------------------------
// model
// ---------------------------------------------------------------------------

peg_model make_peg_model(const peg_config& cfg, std::size_t in_dim, std::uint64_t seed) {
    if (in_dim == 0) throw bad_dimension_error("make_peg_model: in_dim must be positive");
    peg_model m;
    m.config = cfg;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::size_t width = in_dim;
    for (std::size_t l = 0; l < cfg.num_layers; ++l) {
        peg_layer_params layer;
        layer.w = dense_matrix(width, cfg.hidden_dim);
        const double scale = 1.0 / std::sqrt(static_cast<double>(width));
        for (std::size_t k = 0; k < layer.w.size(); ++k) layer.w.data()[k] = scale * gauss(rng);
        layer.phi = nn::make_mlp({1, cfg.phi_hidden, 1},
                                 {nn::activation::tanh_fn, nn::activation::identity}, rng());
        layer.psi = cfg.psi;
        m.layers.push_back(std::move(layer));
        width = cfg.hidden_dim;
    }
    const std::size_t dec_in =
        cfg.decoder == decoder_mode::inner_product ? 2 : cfg.hidden_dim + cfg.pe_dim;
    std::vector<std::size_t> widths{dec_in};
    std::vector<nn::activation> acts;
    for (std::size_t h : cfg.decoder_hidden) {
        widths.push_back(h);
        acts.push_back(nn::activation::relu);
    }
    widths.push_back(1);
    acts.push_back(nn::activation::identity);
    m.decoder = nn::make_mlp(widths, acts, rng());
    return m;
}

std::vector<std::pair<std::string, dense_matrix*>> peg_model::named_parameters() {
    std::vector<std::pair<std::string, dense_matrix*>> out;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const std::string base = "layer" + std::to_string(l);
        out.emplace_back(base + ".w", &layers[l].w);
        for (std::size_t k = 0; k < layers[l].phi.layers.size(); ++k) {
            out.emplace_back(base + ".phi.w" + std::to_string(k), &layers[l].phi.layers[k].w);
            out.emplace_back(base + ".phi.b" + std::to_string(k), &layers[l].phi.layers[k].b);
        }
    }
    for (std::size_t k = 0; k < decoder.layers.size(); ++k) {
        out.emplace_back("decoder.w" + std::to_string(k), &decoder.layers[k].w);
        out.emplace_back("decoder.b" + std::to_string(k), &decoder.layers[k].b);
    }
    return out;
}

std::vector<std::pair<std::string, const dense_matrix*>> peg_model::named_parameters() const {
    std::vector<std::pair<std::string, const dense_matrix*>> out;
    for (auto& [name, ptr] : const_cast<peg_model*>(this)->named_parameters())
        out.emplace_back(name, ptr);
    return out;
}

void save_model(const peg_model& m, const std::string& checkpoint_path) {
    nn::write_checkpoint(checkpoint_path, m.named_parameters());
}

void load_model_weights(peg_model& m, const std::string& checkpoint_path) {
    auto loaded = nn::read_checkpoint(checkpoint_path);
    for (auto& [name, ptr] : m.named_parameters()) {
        auto it = loaded.find(name);
        if (it == loaded.end()) throw parse_error("checkpoint misses tensor " + name);
        if (!it->second.same_shape(*ptr))
            throw shape_mismatch_error("checkpoint tensor " + name + " has wrong shape");
        *ptr = it->second;
    }
}

dense_matrix model_forward(const peg_model& m, const propagation_structure& prop,
                           const dense_matrix& x) {
    dense_matrix h = x;
    for (const auto& layer : m.layers) h = peg_forward(layer, prop, h);
    return h;
}

dense_matrix link_pair_features(const peg_model& m, const dense_matrix& x_hat,
                                const dense_matrix& z, std::size_t u, std::size_t v) {
    if (u >= x_hat.rows() || v >= x_hat.rows() || u >= z.rows() || v >= z.rows())
        throw index_out_of_range_error("link_pair_features: node index out of range");
    if (m.config.decoder == decoder_mode::inner_product) {
        dense_matrix h(1, 2);
        h(0, 0) = dot(x_hat.row(u), x_hat.row(v), x_hat.cols());
        h(0, 1) = dot(z.row(u), z.row(v), z.cols());
        return h;
    }
    dense_matrix h(1, x_hat.cols() + z.cols());
    for (std::size_t j = 0; j < x_hat.cols(); ++j) h(0, j) = x_hat(u, j) * x_hat(v, j);
    for (std::size_t j = 0; j < z.cols(); ++j) h(0, x_hat.cols() + j) = z(u, j) * z(v, j);
    return h;
}

double link_logit(const peg_model& m, const dense_matrix& x_hat, const dense_matrix& z,
                  std::size_t u, std::size_t v) {
    dense_matrix h = link_pair_features(m, x_hat, z, u, v);
    return nn::mlp_forward(m.decoder, h)(0, 0);
}

// ---------------------------------------------------------------------------
// equivariance and stability
// ---------------------------------------------------------------------------

dense_matrix random_orthogonal(std::size_t p, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    dense_matrix q(p, p);
    for (std::size_t k = 0; k < q.size(); ++k) q.data()[k] = gauss(rng);
    for (std::size_t j = 0; j < p; ++j) {
        for (std::size_t c = 0; c < j; ++c) {
            double proj = 0.0;
            for (std::size_t r = 0; r < p; ++r) proj += q(r, j) * q(r, c);
            for (std::size_t r = 0; r < p; ++r) q(r, j) -= proj * q(r, c);
        }
        double norm = 0.0;
        for (std::size_t r = 0; r < p; ++r) norm += q(r, j) * q(r, j);
        norm = std::sqrt(norm);
        if (norm < 1e-12) {  // regenerate the degenerate column
            for (std::size_t r = 0; r < p; ++r) q(r, j) = gauss(rng);
            --j;
            continue;
        }
        for (std::size_t r = 0; r < p; ++r) q(r, j) /= norm;
    }
    return q;
}

equivariance_report equivariance_check(const peg_layer_params& layer, const graph& g,
                                       const dense_matrix& x, const dense_matrix& z,
                                       std::size_t trials, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const std::size_t n = g.num_nodes();
    propagation_structure prop = build_propagation(g, z);
    dense_matrix base = peg_forward(layer, prop, x);

    equivariance_report rep;
    std::vector<std::size_t> idx(n);
    for (std::size_t t = 0; t < trials; ++t) {
        // permutation condition
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::shuffle(idx.begin(), idx.end(), rng);
        permutation perm(idx);
        graph gp = apply_permutation(g, perm);
        dense_matrix xp(n, x.cols()), zp(n, z.cols());
        for (std::size_t u = 0; u < n; ++u) {
            for (std::size_t j = 0; j < x.cols(); ++j) xp(perm(u), j) = x(u, j);
            for (std::size_t j = 0; j < z.cols(); ++j) zp(perm(u), j) = z(u, j);
        }
        propagation_structure prop_p = build_propagation(gp, zp, prop.mode);
        dense_matrix out_p = peg_forward(layer, prop_p, xp);
        double v1 = 0.0;
        for (std::size_t u = 0; u < n; ++u)
            for (std::size_t j = 0; j < base.cols(); ++j)
                v1 = std::max(v1, std::abs(out_p(perm(u), j) - base(u, j)));
        rep.permutation_violation = std::max(rep.permutation_violation, v1);

        // rotation/reflection condition
        dense_matrix q = random_orthogonal(z.cols(), rng);
        dense_matrix zq = kernels::matmul(z, q);
        propagation_structure prop_q = build_propagation(g, zq, prop.mode);
        dense_matrix out_q = peg_forward(layer, prop_q, x);
        double v2 = 0.0;
        for (std::size_t k = 0; k < base.size(); ++k)
            v2 = std::max(v2, std::abs(out_q.data()[k] - base.data()[k]));
        rep.orthogonal_violation = std::max(rep.orthogonal_violation, v2);
    }
    rep.max_violation = std::max(rep.permutation_violation, rep.orthogonal_violation);
    return rep;
}

stability_certificate verify_stability(const peg_layer_params& layer, const graph& g1,
                                       const graph& g2, std::size_t p) {
    const std::size_t n = g1.num_nodes();
    if (n > 10 || g2.num_nodes() > 10)
        throw too_large_error("verify_stability: exhaustive matching needs N <= 10");
    if (!layer.phi.lipschitz_constrained)
        throw unbounded_phi_error("verify_stability: phi must be Lipschitz-constrained");
    if (g1.features().empty() || g2.features().empty())
        throw shape_mismatch_error("verify_stability: both graphs need node features");

    spectral_decomposition d1 = symmetric_eig(normalized_laplacian(g1).to_dense());
    spectral_decomposition d2 = symmetric_eig(normalized_laplacian(g2).to_dense());
    if (p < 1 || p >= n) throw bad_dimension_error("verify_stability: p out of range");
    const double gap1 = d1.eigenvalues[p] - d1.eigenvalues[p - 1];
    const double gap2 = d2.eigenvalues[p] - d2.eigenvalues[p - 1];
    const double inv1 = gap1 > 0.0 ? 1.0 / gap1 : std::numeric_limits<double>::infinity();
    const double inv2 = gap2 > 0.0 ? 1.0 / gap2 : std::numeric_limits<double>::infinity();
    const double delta = std::min(inv1, inv2);
    if (!std::isfinite(delta)) throw zero_eigengap_error("verify_stability: delta is infinite");

    dense_matrix z1(n, p), z2(n, p);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < p; ++j) {
            z1(i, j) = d1.eigenvectors(i, j);
            z2(i, j) = d2.eigenvectors(i, j);
        }

    graph_match match = brute_force_match(g1, g2);

    dense_matrix x1_out = peg_forward(layer, build_propagation(g1, z1), g1.features());
    dense_matrix x2_out = peg_forward(layer, build_propagation(g2, z2), g2.features());

    double sx = 0.0;
    for (std::size_t u = 0; u < n; ++u)
        for (std::size_t j = 0; j < x1_out.cols(); ++j) {
            const double d = x1_out(match.perm(u), j) - x2_out(u, j);
            sx += d * d;
        }
    dense_matrix z2_perm(n, p);
    for (std::size_t u = 0; u < n; ++u)
        for (std::size_t j = 0; j < p; ++j) z2_perm(match.perm(u), j) = z2(u, j);
    const double eta = pe_match(z1, z2_perm).eta;

    stability_certificate cert;
    cert.delta = delta;
    cert.x_opnorm = operator_norm(g1.features());
    cert.d_max = compute_degrees(g2).d_max;
    cert.constant_c = (7.0 * delta * cert.x_opnorm + 2.0 * cert.d_max) * layer.psi_lipschitz() *
                          layer.phi_lipschitz() * operator_norm(layer.w) +
                      3.0 * delta;
    cert.lhs = std::sqrt(sx) + eta;
    cert.distance = match.distance;
    cert.rhs = cert.constant_c * match.distance;
    cert.holds = cert.lhs <= cert.rhs + 1e-8;
    return cert;
}

} // namespace peg

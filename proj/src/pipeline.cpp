#include "peg/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <string>

#include "peg/errors.hpp"
#include "peg/factorization.hpp"
#include "peg/kernels.hpp"

namespace peg {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

using pair_key = std::pair<std::size_t, std::size_t>;

pair_key ordered(std::size_t u, std::size_t v) { return {std::min(u, v), std::max(u, v)}; }

/// Uniform rejection sampling of `count` missing pairs, disjoint from
/// `forbidden` (which grows as samples land). Throws after 100 * count
/// rejections.
edge_list sample_negatives(const graph& g, std::size_t count, std::set<pair_key>& forbidden,
                           std::mt19937_64& rng) {
    const std::size_t n = g.num_nodes();
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    edge_list out;
    std::size_t rejections = 0;
    const std::size_t cap = 100 * std::max<std::size_t>(count, 1);
    while (out.size() < count) {
        const std::size_t u = pick(rng), v = pick(rng);
        const pair_key key = ordered(u, v);
        if (u == v || g.has_edge(key.first, key.second) || forbidden.count(key)) {
            if (++rejections > cap)
                throw negative_sampling_exhausted_error(
                    "negative sampling exhausted after " + std::to_string(rejections) +
                    " rejections (needed " + std::to_string(count) + ")");
            continue;
        }
        forbidden.insert(key);
        out.push_back(key);
    }
    return out;
}

dense_matrix degree_features(const graph& g) {
    degree_info d = compute_degrees(g);
    dense_matrix f(g.num_nodes(), 1);
    for (std::size_t v = 0; v < g.num_nodes(); ++v) f(v, 0) = d.degrees[v];
    return f;
}

dense_matrix effective_features(const graph& message_graph) {
    return message_graph.features().empty() ? degree_features(message_graph)
                                            : message_graph.features();
}

struct prepared_eval {
    propagation_structure prop;
    dense_matrix x;
    dense_matrix z;
};

prepared_eval prepare_eval(const graph& message_graph, const peg_config& cfg,
                           std::uint64_t pe_seed) {
    prepared_eval ev;
    positional_encoding pe = compute_pe(message_graph, cfg, pe_seed);
    ev.z = std::move(pe.z);
    ev.prop = build_propagation(message_graph.with_self_loops(), ev.z, cfg.edge_weights);
    ev.x = effective_features(message_graph);
    return ev;
}

std::vector<double> scores_on_prepared(const peg_model& model, const prepared_eval& ev,
                                       const edge_list& pairs) {
    dense_matrix x_hat = model_forward(model, ev.prop, ev.x);
    std::vector<double> out;
    out.reserve(pairs.size());
    for (const auto& [u, v] : pairs) out.push_back(link_logit(model, x_hat, ev.z, u, v));
    return out;
}

double metric_on_scores(const train_config& cfg, const std::vector<double>& pos,
                        const std::vector<double>& neg) {
    if (cfg.metric == eval_metric_kind::hits_at_k) return hits_at_k(pos, neg, cfg.hits_k);
    std::vector<double> scores = pos;
    scores.insert(scores.end(), neg.begin(), neg.end());
    std::vector<int> labels(pos.size(), 1);
    labels.resize(scores.size(), 0);
    return roc_auc(scores, labels);
}

} // namespace

void train_config::validate() const {
    if (batch_size != 64 && batch_size != 128 && batch_size != 65536)
        throw bad_dimension_error("train_config: batch_size must be 64, 128 or 65536");
    if (learning_rate <= 0.0) throw bad_dimension_error("train_config: learning_rate must be > 0");
    if (metric == eval_metric_kind::hits_at_k && hits_k == 0)
        throw bad_dimension_error("train_config: hits_k must be positive");
}

link_dataset split_links(const graph& g, const split_ratios& ratios, std::uint64_t seed) {
    if (std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9)
        throw bad_dimension_error("split_links: ratios must sum to 1");
    edge_list edges = g.undirected_edges();
    if (edges.empty()) throw not_enough_edges_error("split_links: graph has no edges");

    std::mt19937_64 rng(seed);
    std::shuffle(edges.begin(), edges.end(), rng);

    const std::size_t e = edges.size();
    std::size_t n_val = static_cast<std::size_t>(std::llround(ratios.val * double(e)));
    std::size_t n_test = static_cast<std::size_t>(std::llround(ratios.test * double(e)));
    if (n_val + n_test > e) throw not_enough_edges_error("split_links: too few edges for ratios");
    const std::size_t n_train = e - n_val - n_test;
    if (n_train == 0) throw not_enough_edges_error("split_links: empty training split");

    link_dataset ds;
    ds.base_graph = g;
    ds.train_pos.assign(edges.begin(), edges.begin() + n_train);
    ds.val_pos.assign(edges.begin() + n_train, edges.begin() + n_train + n_val);
    ds.test_pos.assign(edges.begin() + n_train + n_val, edges.end());
    ds.message_graph = graph::from_edges(g.num_nodes(), ds.train_pos, g.features());

    std::set<pair_key> forbidden;  // negatives must avoid each other too
    ds.train_neg = sample_negatives(g, ds.train_pos.size(), forbidden, rng);
    ds.val_neg = sample_negatives(g, ds.val_pos.size(), forbidden, rng);
    ds.test_neg = sample_negatives(g, ds.test_pos.size(), forbidden, rng);
    return ds;
}

positional_encoding compute_pe(const graph& g, const peg_config& cfg, std::uint64_t seed) {
    if (cfg.method == pe_method::laplacian_eigenmap) {
        eigenmap_options opts;
        opts.dense_cutoff = cfg.pe_dense_cutoff;
        return laplacian_eigenmap(g, cfg.pe_dim, opts);
    }
    factorization_objective obj =
        deepwalk_targets(g, cfg.dw_window, 1.0 / static_cast<double>(g.num_nodes()));
    factorization_pe pe = solve_factorization(obj, cfg.pe_dim, seed, cfg.dw_iters);
    return factorization_encoding(pe);
}

void fold_partition(link_dataset& ds, std::size_t k, std::uint64_t seed, const peg_config& cfg) {
    if (ds.train_pos.empty()) throw not_enough_edges_error("fold_partition: no training edges");
    if (k == 0) throw bad_dimension_error("fold_partition: k must be positive");

    std::mt19937_64 rng(seed);
    std::vector<std::size_t> idx(ds.train_pos.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::shuffle(idx.begin(), idx.end(), rng);

    ds.num_folds = k;
    ds.fold_of_train_edge.assign(ds.train_pos.size(), 0);
    for (std::size_t r = 0; r < idx.size(); ++r) ds.fold_of_train_edge[idx[r]] = r % k;

    ds.fold_graphs.clear();
    ds.fold_pes.clear();
    for (std::size_t j = 0; j < k; ++j) {
        edge_list kept;
        for (std::size_t i = 0; i < ds.train_pos.size(); ++i)
            if (ds.fold_of_train_edge[i] != j) kept.push_back(ds.train_pos[i]);
        graph fold_graph =
            graph::from_edges(ds.message_graph.num_nodes(), kept, ds.message_graph.features());
        ds.fold_pes.push_back(compute_pe(fold_graph, cfg, seed + j));
        ds.fold_graphs.push_back(std::move(fold_graph));
    }
}

train_result train(peg_model& model, const link_dataset& ds, const train_config& cfg,
                   const std::function<double(const peg_model&)>& external_val) {
    cfg.validate();
    train_result result;
    if (cfg.epochs == 0) return result;
    if (ds.train_pos.empty()) throw not_enough_edges_error("train: no training links");
    if (cfg.use_folds && ds.num_folds == 0)
        throw bad_dimension_error("train: use_folds set but fold_partition was not run");

    const graph msg_with_loops = ds.message_graph.with_self_loops();
    dense_matrix x = effective_features(ds.message_graph);
    if (x.cols() != model.in_dim())
        throw width_mismatch_error("train: feature width " + std::to_string(x.cols()) +
                                   " != model input width " + std::to_string(model.in_dim()));

    // full-train-graph PE drives validation (and inference after training)
    positional_encoding pe_full = compute_pe(ds.message_graph, model.config, cfg.seed);
    propagation_structure prop_full =
        build_propagation(msg_with_loops, pe_full.z, model.config.edge_weights);

    std::vector<propagation_structure> fold_props;
    if (cfg.use_folds)
        for (std::size_t j = 0; j < ds.num_folds; ++j)
            fold_props.push_back(
                build_propagation(msg_with_loops, ds.fold_pes[j].z, model.config.edge_weights));

    const bool has_val = external_val != nullptr || !ds.val_pos.empty();
    auto validation_metric = [&](const peg_model& m) -> double {
        if (external_val) return external_val(m);
        if (ds.val_pos.empty()) return kNan;
        dense_matrix x_hat = model_forward(m, prop_full, x);
        std::vector<double> pos, neg;
        for (const auto& [u, v] : ds.val_pos) pos.push_back(link_logit(m, x_hat, pe_full.z, u, v));
        for (const auto& [u, v] : ds.val_neg) neg.push_back(link_logit(m, x_hat, pe_full.z, u, v));
        return metric_on_scores(cfg, pos, neg);
    };

    auto params = model.named_parameters();
    nn::adam_optimizer adam({cfg.learning_rate, 0.9, 0.999, 1e-8});
    std::mt19937_64 rng(cfg.seed);

    double best_metric = -std::numeric_limits<double>::infinity();
    std::vector<dense_matrix> best_state;
    std::size_t best_epoch = 0;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        // collect this epoch's supervision links
        std::vector<std::size_t> pool;
        const std::size_t fold = cfg.use_folds ? epoch % ds.num_folds : 0;
        for (std::size_t i = 0; i < ds.train_pos.size(); ++i)
            if (!cfg.use_folds || ds.fold_of_train_edge[i] == fold) pool.push_back(i);
        const propagation_structure& prop = cfg.use_folds ? fold_props[fold] : prop_full;
        const dense_matrix& z = cfg.use_folds ? ds.fold_pes[fold].z : pe_full.z;

        std::vector<std::size_t> order;  // even entries: positives; odd: negatives
        order.reserve(2 * pool.size());
        for (std::size_t i : pool) {
            order.push_back(2 * i);
            order.push_back(2 * i + 1);
        }
        std::shuffle(order.begin(), order.end(), rng);

        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
            std::vector<std::size_t> us, vs;
            dense_matrix labels(stop - start, 1);
            dense_matrix z_pair(stop - start, 1);
            dense_matrix z_had(stop - start, z.cols());
            for (std::size_t r = start; r < stop; ++r) {
                const std::size_t code = order[r];
                const auto& e = code % 2 == 0 ? ds.train_pos[code / 2] : ds.train_neg[code / 2];
                us.push_back(e.first);
                vs.push_back(e.second);
                labels(r - start, 0) = code % 2 == 0 ? 1.0 : 0.0;
                if (model.config.decoder == decoder_mode::inner_product) {
                    z_pair(r - start, 0) = dot(z.row(e.first), z.row(e.second), z.cols());
                } else {
                    for (std::size_t j = 0; j < z.cols(); ++j)
                        z_had(r - start, j) = z(e.first, j) * z(e.second, j);
                }
            }

            nn::tape t;
            nn::tape::node_id h = t.constant(x);
            dense_matrix edge_feat(prop.pe_feature.size(), 1);
            for (std::size_t e = 0; e < prop.pe_feature.size(); ++e)
                edge_feat(e, 0) = prop.pe_feature[e];
            nn::tape::node_id efeat = t.constant(std::move(edge_feat));
            for (auto& layer : model.layers) {
                nn::tape::node_id xi = t.apply_mlp(layer.phi, efeat);
                nn::masked_spmm_context ctx{&prop.ahat, &prop.edge_id, &prop.undirected,
                                            &prop.ahat_per_edge};
                nn::tape::node_id xw = t.matmul(h, t.parameter(&layer.w));
                h = t.apply(t.masked_spmm(ctx, xi, xw), layer.psi);
            }
            nn::tape::node_id pair_feat =
                model.config.decoder == decoder_mode::inner_product
                    ? t.concat_cols(t.pair_inner(h, us, vs), t.constant(z_pair))
                    : t.concat_cols(t.pair_hadamard(h, us, vs), t.constant(z_had));
            nn::tape::node_id logits = t.apply_mlp(model.decoder, pair_feat);
            nn::tape::node_id loss = t.bce_with_logits(logits, labels);
            t.backward(loss);

            for (auto& [name, ptr] : params) adam.step(*ptr, t.grad_for(ptr));
            adam.finish_step();
            for (auto& layer : model.layers) layer.phi.enforce_lipschitz();

            loss_sum += t.value(loss)(0, 0) * static_cast<double>(stop - start);
        }

        epoch_record rec;
        rec.epoch = epoch;
        rec.loss = loss_sum / static_cast<double>(order.size());
        rec.val_metric = has_val ? validation_metric(model) : kNan;
        result.history.push_back(rec);

        if (has_val && rec.val_metric > best_metric) {  // strict: earliest epoch wins ties
            best_metric = rec.val_metric;
            best_epoch = epoch;
            best_state.clear();
            for (auto& [name, ptr] : params) best_state.push_back(*ptr);
        }
    }

    if (has_val && !best_state.empty()) {
        for (std::size_t i = 0; i < params.size(); ++i) *params[i].second = best_state[i];
        result.best_epoch = best_epoch;
        result.best_val_metric = best_metric;
    } else {
        result.best_epoch = cfg.epochs - 1;
        result.best_val_metric = result.history.back().val_metric;
    }
    return result;
}

double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size()) throw shape_mismatch_error("roc_auc: size mismatch");
    std::size_t n_pos = 0, n_neg = 0;
    for (int l : labels) (l ? n_pos : n_neg)++;
    if (n_pos == 0 || n_neg == 0)
        throw single_class_error("roc_auc: both classes must be present");

    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double pos_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based mean rank
        for (std::size_t k = i; k < j; ++k)
            if (labels[idx[k]]) pos_rank_sum += avg_rank;
        i = j;
    }
    const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
    return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

double hits_at_k(const std::vector<double>& pos_scores, const std::vector<double>& neg_scores,
                 std::size_t k) {
    if (k == 0) throw bad_dimension_error("hits_at_k: k must be positive");
    if (neg_scores.size() < k)
        throw too_few_negatives_error("hits_at_k: fewer than k negative scores");
    if (pos_scores.empty()) throw single_class_error("hits_at_k: no positive scores");
    std::vector<double> neg = neg_scores;
    std::nth_element(neg.begin(), neg.begin() + (k - 1), neg.end(), std::greater<double>());
    const double threshold = neg[k - 1];
    std::size_t hits = 0;
    for (double s : pos_scores)
        if (s > threshold) ++hits;
    return static_cast<double>(hits) / static_cast<double>(pos_scores.size());
}

graph perturb_graph(const graph& g, perturb_mode mode, double fraction, std::uint64_t seed) {
    if (fraction < 0.0 || fraction > 0.5)
        throw bad_dimension_error("perturb_graph: fraction must lie in [0, 0.5]");
    const std::size_t count =
        static_cast<std::size_t>(std::llround(fraction * double(g.num_undirected_edges())));
    if (count == 0) return g;
    std::mt19937_64 rng(seed);
    edge_list edges = g.undirected_edges();
    if (mode == perturb_mode::drop) {
        std::shuffle(edges.begin(), edges.end(), rng);
        edges.erase(edges.begin(), edges.begin() + count);
        return graph::from_edges(g.num_nodes(), edges, g.features());
    }
    std::set<pair_key> forbidden;
    edge_list added = sample_negatives(g, count, forbidden, rng);
    edges.insert(edges.end(), added.begin(), added.end());
    return graph::from_edges(g.num_nodes(), edges, g.features());
}

std::vector<double> score_links(const peg_model& model, const graph& message_graph,
                                const edge_list& pairs, std::uint64_t pe_seed) {
    prepared_eval ev = prepare_eval(message_graph, model.config, pe_seed);
    return scores_on_prepared(model, ev, pairs);
}

double evaluate_auc(const peg_model& model, const graph& message_graph, const edge_list& pos,
                    const edge_list& neg, std::uint64_t pe_seed) {
    prepared_eval ev = prepare_eval(message_graph, model.config, pe_seed);
    std::vector<double> scores = scores_on_prepared(model, ev, pos);
    std::vector<double> neg_scores = scores_on_prepared(model, ev, neg);
    scores.insert(scores.end(), neg_scores.begin(), neg_scores.end());
    std::vector<int> labels(pos.size(), 1);
    labels.resize(scores.size(), 0);
    return roc_auc(scores, labels);
}

dense_matrix random_projection(const dense_matrix& features, std::size_t out_dim,
                               std::uint64_t seed) {
    if (out_dim == 0) throw bad_dimension_error("random_projection: out_dim must be positive");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    dense_matrix proj(features.cols(), out_dim);
    const double scale = 1.0 / std::sqrt(static_cast<double>(features.cols()));
    for (std::size_t k = 0; k < proj.size(); ++k) proj.data()[k] = scale * gauss(rng);
    return kernels::matmul(features, proj);
}

dense_matrix row_normalize(const dense_matrix& features) {
    dense_matrix out = features;
    for (std::size_t i = 0; i < out.rows(); ++i) {
        const double norm = std::sqrt(dot(out.row(i), out.row(i), out.cols()));
        if (norm > 0.0)
            for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) /= norm;
    }
    return out;
}

namespace {

/// Samples test links on an SBM-style graph: positives from within-block
/// links, negatives from cross-block missing pairs. Without block labels
/// both sets are uniform (links / missing pairs).
void sample_eval_links(const graph& g, const std::vector<std::size_t>* blocks, double fraction,
                       std::mt19937_64& rng, edge_list& pos, edge_list& neg) {
    edge_list candidates;
    for (const auto& [u, v] : g.undirected_edges()) {
        if (u == v) continue;
        if (!blocks || (*blocks)[u] == (*blocks)[v]) candidates.push_back({u, v});
    }
    if (candidates.empty()) throw not_enough_edges_error("sample_eval_links: no candidate links");
    std::shuffle(candidates.begin(), candidates.end(), rng);
    const std::size_t count = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(fraction * double(candidates.size()))));
    pos.assign(candidates.begin(), candidates.begin() + std::min(count, candidates.size()));

    const std::size_t n = g.num_nodes();
    std::uniform_int_distribution<std::size_t> pickn(0, n - 1);
    std::set<pair_key> forbidden;
    std::size_t rejections = 0;
    const std::size_t cap = 100 * pos.size();
    neg.clear();
    while (neg.size() < pos.size()) {
        const std::size_t u = pickn(rng), v = pickn(rng);
        const pair_key key = ordered(u, v);
        const bool cross_ok = !blocks || (*blocks)[u] != (*blocks)[v];
        if (u == v || !cross_ok || g.has_edge(key.first, key.second) || forbidden.count(key)) {
            if (++rejections > cap)
                throw negative_sampling_exhausted_error("sample_eval_links: sampling exhausted");
            continue;
        }
        forbidden.insert(key);
        neg.push_back(key);
    }
}

graph remove_edges(const graph& g, const edge_list& removed) {
    std::set<pair_key> gone;
    for (const auto& [u, v] : removed) gone.insert(ordered(u, v));
    edge_list kept;
    for (const auto& e : g.undirected_edges())
        if (!gone.count(ordered(e.first, e.second))) kept.push_back(e);
    return graph::from_edges(g.num_nodes(), kept, g.features());
}

} // namespace

domain_shift_result domain_shift_eval(const peg_model& model, const graph& g_test,
                                      const domain_shift_options& opts) {
    std::mt19937_64 rng(opts.seed);
    edge_list pos, neg;
    sample_eval_links(g_test, opts.blocks, opts.test_fraction, rng, pos, neg);

    graph eval_graph = remove_edges(g_test, pos);
    dense_matrix feats = effective_features(eval_graph);
    if (feats.cols() != model.in_dim()) {
        if (!opts.allow_projection)
            throw width_mismatch_error("domain_shift_eval: feature width " +
                                       std::to_string(feats.cols()) + " != model width " +
                                       std::to_string(model.in_dim()));
        feats = row_normalize(random_projection(feats, model.in_dim(), opts.projection_seed));
    }
    eval_graph = eval_graph.with_features(std::move(feats));

    domain_shift_result out;
    out.num_pos = pos.size();
    out.auc = evaluate_auc(model, eval_graph, pos, neg, opts.seed);
    return out;
}

edge_weight_curve_result edge_weight_curve(const peg_model& model,
                                           const propagation_structure& prop,
                                           std::size_t samples, std::uint64_t seed) {
    edge_weight_curve_result out;
    if (prop.pe_feature.empty()) return out;
    const auto [mn_it, mx_it] = std::minmax_element(prop.pe_feature.begin(), prop.pe_feature.end());
    const double lo = *mn_it, hi = *mx_it;
    const nn::mlp_params& phi = model.layers.front().phi;

    auto weight_of = [&](double d) {
        dense_matrix in(1, 1);
        in(0, 0) = d;
        return nn::mlp_forward(phi, in)(0, 0);
    };

    const std::size_t grid = 200;
    std::size_t increases = 0;
    double prev = 0.0;
    for (std::size_t i = 0; i < grid; ++i) {
        const double d =
            grid == 1 || hi == lo ? lo : lo + (hi - lo) * double(i) / double(grid - 1);
        const double w = weight_of(d);
        if (i > 0 && w >= prev - 1e-12) ++increases;
        prev = w;
        out.rows.push_back({d, w});
    }
    out.monotone_fraction = static_cast<double>(increases) / static_cast<double>(grid - 1);

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, prop.pe_feature.size() - 1);
    for (std::size_t s = 0; s < samples; ++s) {
        const double d = prop.pe_feature[pick(rng)];
        out.rows.push_back({d, weight_of(d)});
    }
    return out;
}

void write_edge_weight_csv(const edge_weight_curve_result& curve, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw io_error("write_edge_weight_csv: cannot open " + path);
    os.precision(17);
    os << "distance,weight\n";
    for (const auto& [d, w] : curve.rows) os << d << "," << w << "\n";
    if (!os) throw io_error("write_edge_weight_csv: write failed");
}

link_dataset permute_dataset(const link_dataset& ds, const permutation& p) {
    link_dataset out;
    out.base_graph = apply_permutation(ds.base_graph, p);
    out.message_graph = apply_permutation(ds.message_graph, p);
    auto relabel = [&](const edge_list& in) {
        edge_list r;
        r.reserve(in.size());
        for (const auto& [u, v] : in) r.push_back({p(u), p(v)});
        return r;
    };
    out.train_pos = relabel(ds.train_pos);
    out.val_pos = relabel(ds.val_pos);
    out.test_pos = relabel(ds.test_pos);
    out.train_neg = relabel(ds.train_neg);
    out.val_neg = relabel(ds.val_neg);
    out.test_neg = relabel(ds.test_neg);
    // fold state is graph-derived; re-run fold_partition on the permuted set
    return out;
}

sbm_experiment_result run_sbm_experiment(const sbm_experiment_config& cfg) {
    sbm_experiment_result out;

    sbm_config train_cfg_sbm = cfg.sbm;
    sbm_graph train_sbm = sbm_generate(train_cfg_sbm);

    sbm_config val_cfg_sbm = cfg.sbm;
    val_cfg_sbm.seed = cfg.sbm.seed + 1000;
    sbm_graph val_sbm = sbm_generate(val_cfg_sbm);

    // supervision links on the training graph
    std::mt19937_64 rng(cfg.sbm.seed ^ 0x9e3779b97f4a7c15ULL);
    link_dataset ds;
    ds.base_graph = train_sbm.g;
    ds.message_graph = train_sbm.g;
    sample_eval_links(train_sbm.g, &train_sbm.block_of, cfg.link_fraction, rng, ds.train_pos,
                      ds.train_neg);

    const std::size_t width = effective_features(ds.message_graph).cols();
    peg_model model = make_peg_model(cfg.model, width, cfg.training.seed);

    // held-out validation graph, prepared once
    std::mt19937_64 val_rng(val_cfg_sbm.seed ^ 0x9e3779b97f4a7c15ULL);
    edge_list val_pos, val_neg;
    sample_eval_links(val_sbm.g, &val_sbm.block_of, cfg.link_fraction, val_rng, val_pos, val_neg);
    graph val_graph = remove_edges(val_sbm.g, val_pos);
    prepared_eval val_eval = prepare_eval(val_graph, cfg.model, val_cfg_sbm.seed);
    auto external_val = [&](const peg_model& m) {
        std::vector<double> ps = scores_on_prepared(m, val_eval, val_pos);
        std::vector<double> ns = scores_on_prepared(m, val_eval, val_neg);
        std::vector<double> scores = ps;
        scores.insert(scores.end(), ns.begin(), ns.end());
        std::vector<int> labels(ps.size(), 1);
        labels.resize(scores.size(), 0);
        return roc_auc(scores, labels);
    };

    out.training = train(model, ds, cfg.training, external_val);

    // fresh test graphs; perturbation sweep reuses each graph's link sample
    std::vector<std::vector<double>> per_level(cfg.drop_levels.size());
    for (std::size_t t = 0; t < cfg.num_test_graphs; ++t) {
        sbm_config test_cfg_sbm = cfg.sbm;
        test_cfg_sbm.seed = cfg.sbm.seed + 2000 + t;
        sbm_graph test_sbm = sbm_generate(test_cfg_sbm);
        std::mt19937_64 trng(test_cfg_sbm.seed ^ 0x9e3779b97f4a7c15ULL);
        edge_list pos, neg;
        sample_eval_links(test_sbm.g, &test_sbm.block_of, cfg.link_fraction, trng, pos, neg);
        graph eval_graph = remove_edges(test_sbm.g, pos);
        out.per_graph_auc.push_back(evaluate_auc(model, eval_graph, pos, neg, test_cfg_sbm.seed));

        for (std::size_t l = 0; l < cfg.drop_levels.size(); ++l) {
            graph perturbed = perturb_graph(eval_graph, perturb_mode::drop, cfg.drop_levels[l],
                                            test_cfg_sbm.seed + 31 * l);
            per_level[l].push_back(evaluate_auc(model, perturbed, pos, neg, test_cfg_sbm.seed));
        }
    }
    double mean = 0.0;
    for (double a : out.per_graph_auc) mean += a;
    out.mean_test_auc = mean / static_cast<double>(out.per_graph_auc.size());
    for (std::size_t l = 0; l < cfg.drop_levels.size(); ++l) {
        double m = 0.0;
        for (double a : per_level[l]) m += a;
        out.drop_auc.push_back({cfg.drop_levels[l], m / double(per_level[l].size())});
    }
    return out;
}

} // namespace peg

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "peg/datasets.hpp"
#include "peg/errors.hpp"
#include "peg/pipeline.hpp"

using namespace peg;

namespace {

graph random_graph(std::size_t n, double density, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    edge_list edges;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (u(rng) < density) edges.push_back({i, j});
    if (edges.empty()) edges.push_back({0, n - 1});
    return graph::from_edges(n, edges);
}

std::set<std::pair<std::size_t, std::size_t>> as_set(const edge_list& e) {
    std::set<std::pair<std::size_t, std::size_t>> s;
    for (const auto& [u, v] : e) s.insert({std::min(u, v), std::max(u, v)});
    return s;
}

peg_config tiny_model_config() {
    peg_config cfg;
    cfg.num_layers = 2;
    cfg.hidden_dim = 8;
    cfg.pe_dim = 2;
    cfg.phi_hidden = 4;
    cfg.decoder_hidden = {8};
    return cfg;
}

train_config tiny_train_config(std::size_t epochs, std::uint64_t seed) {
    train_config cfg;
    cfg.epochs = epochs;
    cfg.batch_size = 64;
    cfg.learning_rate = 1e-2;
    cfg.seed = seed;
    return cfg;
}

} // namespace

TEST_CASE("split: ratios, disjointness, determinism") {
    std::mt19937_64 rng(1);
    graph g = random_graph(30, 0.3, rng);

    link_dataset all = split_links(g, {1.0, 0.0, 0.0}, 5);
    CHECK(all.train_pos.size() == g.num_undirected_edges());
    CHECK(all.val_pos.empty());
    CHECK(all.test_pos.empty());

    link_dataset ds = split_links(g, {0.7, 0.15, 0.15}, 5);
    CHECK(ds.train_pos.size() + ds.val_pos.size() + ds.test_pos.size() ==
          g.num_undirected_edges());
    CHECK(ds.train_neg.size() == ds.train_pos.size());
    CHECK(ds.val_neg.size() == ds.val_pos.size());
    CHECK(ds.test_neg.size() == ds.test_pos.size());

    // positives partition the edge set; negatives avoid edges and each other
    auto tp = as_set(ds.train_pos), vp = as_set(ds.val_pos), sp = as_set(ds.test_pos);
    std::set<std::pair<std::size_t, std::size_t>> all_pos;
    all_pos.insert(tp.begin(), tp.end());
    all_pos.insert(vp.begin(), vp.end());
    all_pos.insert(sp.begin(), sp.end());
    CHECK(all_pos.size() == tp.size() + vp.size() + sp.size());
    edge_list negs = ds.train_neg;
    negs.insert(negs.end(), ds.val_neg.begin(), ds.val_neg.end());
    negs.insert(negs.end(), ds.test_neg.begin(), ds.test_neg.end());
    auto neg_set = as_set(negs);
    CHECK(neg_set.size() == negs.size());
    for (const auto& [u, v] : neg_set) {
        CHECK_FALSE(g.has_edge(u, v));
        CHECK(all_pos.count({u, v}) == 0);
    }

    // message graph holds exactly the train positives
    CHECK(as_set(ds.message_graph.undirected_edges()) == tp);

    // bitwise-stable under reruns
    link_dataset again = split_links(g, {0.7, 0.15, 0.15}, 5);
    CHECK(again.train_pos == ds.train_pos);
    CHECK(again.test_neg == ds.test_neg);
    link_dataset other = split_links(g, {0.7, 0.15, 0.15}, 6);
    CHECK(other.train_pos != ds.train_pos);
}

TEST_CASE("split failure modes") {
    graph k4 = graph::from_edges(4, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}});
    CHECK_THROWS_AS(split_links(k4, {0.8, 0.1, 0.1}, 1), negative_sampling_exhausted_error);
    std::mt19937_64 rng(2);
    graph g = random_graph(10, 0.4, rng);
    CHECK_THROWS_AS(split_links(g, {0.5, 0.2, 0.2}, 1), bad_dimension_error);
}

TEST_CASE("fold partition: balance, union, disjointness, bridge case") {
    std::mt19937_64 rng(3);
    graph g = random_graph(24, 0.3, rng);
    link_dataset ds = split_links(g, {1.0, 0.0, 0.0}, 9);
    peg_config cfg = tiny_model_config();
    fold_partition(ds, 10, 4, cfg);
    CHECK(ds.num_folds == 10);
    CHECK(ds.fold_pes.size() == 10);
    CHECK(ds.fold_of_train_edge.size() == ds.train_pos.size());

    std::vector<std::size_t> sizes(10, 0);
    for (std::size_t f : ds.fold_of_train_edge) sizes[f]++;
    const auto [mn, mx] = std::minmax_element(sizes.begin(), sizes.end());
    CHECK(*mx - *mn <= 1);

    // removing fold j leaves exactly the other folds' edges
    for (std::size_t j = 0; j < 10; ++j) {
        std::size_t expect = 0;
        for (std::size_t f : ds.fold_of_train_edge)
            if (f != j) ++expect;
        CHECK(ds.fold_graphs[j].num_undirected_edges() == expect);
    }

    // k = 1 degenerates to encoding the empty graph; still defined
    link_dataset ds1 = split_links(g, {1.0, 0.0, 0.0}, 9);
    fold_partition(ds1, 1, 4, cfg);
    CHECK(ds1.fold_graphs[0].num_undirected_edges() == 0);
    CHECK(ds1.fold_pes[0].z.rows() == g.num_nodes());

    // a bridge edge whose removal isolates a node is still fine
    graph bridge = graph::from_edges(5, {{0, 1}, {1, 2}, {2, 0}, {2, 3}, {3, 4}});
    link_dataset dsb = split_links(bridge, {1.0, 0.0, 0.0}, 2);
    fold_partition(dsb, 5, 1, cfg);
    for (const auto& pe : dsb.fold_pes) CHECK(pe.z.rows() == 5);
}

TEST_CASE("roc auc: separation, ties, hand-counted case") {
    CHECK(roc_auc({0.9, 0.8, 0.1, 0.2}, {1, 1, 0, 0}) == doctest::Approx(1.0));
    CHECK(roc_auc({0.5, 0.5, 0.5, 0.5}, {1, 0, 1, 0}) == doctest::Approx(0.5));
    CHECK(roc_auc({0.1, 0.4, 0.35, 0.8}, {0, 0, 1, 1}) == doctest::Approx(0.75));
    CHECK_THROWS_AS(roc_auc({0.1, 0.2}, {1, 1}), single_class_error);

    // brute-force pair counting on random instances
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 30; ++t) {
        const std::size_t n = 2 + t % 180;
        std::vector<double> scores(n);
        std::vector<int> labels(n);
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = std::round(u(rng) * 8.0) / 8.0;  // force ties
            labels[i] = u(rng) < 0.5;
        }
        std::size_t np = 0, nn = 0;
        for (int l : labels) (l ? np : nn)++;
        if (np == 0 || nn == 0) continue;
        double wins = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                if (!(labels[i] == 1 && labels[j] == 0)) continue;
                if (scores[i] > scores[j]) wins += 1.0;
                else if (scores[i] == scores[j]) wins += 0.5;
            }
        CHECK(roc_auc(scores, labels) ==
              doctest::Approx(wins / (double(np) * double(nn))).epsilon(1e-12));
    }
}

TEST_CASE("hits@k") {
    CHECK(hits_at_k({3.0, 2.5}, {1.0, 0.5, 0.2}, 2) == doctest::Approx(1.0));
    CHECK(hits_at_k({0.1, 0.0}, {1.0, 0.9, 0.8}, 2) == doctest::Approx(0.0));
    CHECK(hits_at_k({3.0, -2.0}, {2.0, 0.0, -1.0}, 2) == doctest::Approx(0.5));
    CHECK_THROWS_AS(hits_at_k({1.0}, {0.5}, 2), too_few_negatives_error);
}

TEST_CASE("perturbation: counts, determinism, modes") {
    std::mt19937_64 rng(5);
    graph g = random_graph(20, 0.25, rng);
    const std::size_t e = g.num_undirected_edges();

    CHECK(perturb_graph(g, perturb_mode::drop, 0.0, 3).num_undirected_edges() == e);

    graph dropped = perturb_graph(g, perturb_mode::drop, 0.5, 3);
    CHECK(dropped.num_undirected_edges() == e - std::size_t(std::llround(0.5 * double(e))));
    // dropped edges were edges of g
    for (const auto& [u, v] : dropped.undirected_edges()) CHECK(g.has_edge(u, v));

    graph added = perturb_graph(g, perturb_mode::add, 0.3, 3);
    CHECK(added.num_undirected_edges() == e + std::size_t(std::llround(0.3 * double(e))));
    for (const auto& [u, v] : g.undirected_edges()) CHECK(added.has_edge(u, v));

    graph again = perturb_graph(g, perturb_mode::drop, 0.5, 3);
    CHECK(again.undirected_edges() == dropped.undirected_edges());

    CHECK_THROWS_AS(perturb_graph(g, perturb_mode::drop, 0.7, 1), bad_dimension_error);
}

TEST_CASE("ten-edge example: half the edges survive a 0.5 drop") {
    edge_list edges;
    for (std::size_t i = 0; i < 10; ++i) edges.push_back({i, i + 1});
    graph path = graph::from_edges(11, edges);
    CHECK(perturb_graph(path, perturb_mode::drop, 0.5, 7).num_undirected_edges() == 5);
}

TEST_CASE("training: zero epochs, determinism, history shape") {
    std::mt19937_64 rng(6);
    graph g = random_graph(18, 0.35, rng);
    link_dataset ds = split_links(g, {0.8, 0.1, 0.1}, 11);
    peg_config mcfg = tiny_model_config();

    peg_model m0 = make_peg_model(mcfg, 1, 21);
    train_result r0 = train(m0, ds, tiny_train_config(0, 21));
    CHECK(r0.history.empty());

    peg_model m1 = make_peg_model(mcfg, 1, 21);
    train_result r1 = train(m1, ds, tiny_train_config(6, 21));
    CHECK(r1.history.size() == 6);
    for (std::size_t i = 0; i < 6; ++i) CHECK(r1.history[i].epoch == i);

    peg_model m2 = make_peg_model(mcfg, 1, 21);
    train_result r2 = train(m2, ds, tiny_train_config(6, 21));
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(r1.history[i].loss == r2.history[i].loss);  // bitwise
        CHECK(r1.history[i].val_metric == r2.history[i].val_metric);
    }
}

TEST_CASE("fold training rotates supervision and stays deterministic") {
    std::mt19937_64 rng(7);
    graph g = random_graph(16, 0.4, rng);
    link_dataset ds = split_links(g, {0.9, 0.05, 0.05}, 13);
    peg_config mcfg = tiny_model_config();
    fold_partition(ds, 3, 13, mcfg);

    train_config tcfg = tiny_train_config(6, 13);
    tcfg.use_folds = true;
    peg_model m = make_peg_model(mcfg, 1, 31);
    train_result r = train(m, ds, tcfg);
    CHECK(r.history.size() == 6);

    peg_model m2 = make_peg_model(mcfg, 1, 31);
    train_result r2 = train(m2, ds, tcfg);
    for (std::size_t i = 0; i < 6; ++i) CHECK(r.history[i].loss == r2.history[i].loss);

    train_config no_fold_cfg = tiny_train_config(2, 13);
    no_fold_cfg.use_folds = true;
    link_dataset plain = split_links(g, {0.9, 0.05, 0.05}, 13);
    peg_model m3 = make_peg_model(mcfg, 1, 31);
    CHECK_THROWS_AS(train(m3, plain, no_fold_cfg), bad_dimension_error);
}

TEST_CASE("end-to-end permutation determinism of the loss history") {
    std::mt19937_64 rng(8);
    graph g = random_graph(20, 0.35, rng);
    link_dataset ds = split_links(g, {0.8, 0.1, 0.1}, 17);

    std::vector<std::size_t> m(20);
    std::iota(m.begin(), m.end(), std::size_t{0});
    std::shuffle(m.begin(), m.end(), rng);
    permutation perm(m);
    link_dataset dsp = permute_dataset(ds, perm);

    peg_config mcfg = tiny_model_config();
    train_config tcfg = tiny_train_config(8, 17);

    peg_model model_a = make_peg_model(mcfg, 1, 41);
    train_result ra = train(model_a, ds, tcfg);
    peg_model model_b = make_peg_model(mcfg, 1, 41);
    train_result rb = train(model_b, dsp, tcfg);

    REQUIRE(ra.history.size() == rb.history.size());
    for (std::size_t i = 0; i < ra.history.size(); ++i)
        CHECK(std::abs(ra.history[i].loss - rb.history[i].loss) < 1e-9);
}

TEST_CASE("batch size validation") {
    train_config cfg;
    cfg.batch_size = 100;
    CHECK_THROWS_AS(cfg.validate(), bad_dimension_error);
    for (std::size_t b : {std::size_t{64}, std::size_t{128}, std::size_t{65536}}) {
        cfg.batch_size = b;
        CHECK_NOTHROW(cfg.validate());
    }
}

TEST_CASE("domain shift: same-graph evaluation matches the in-domain path") {
    std::mt19937_64 rng(9);
    graph g = random_graph(22, 0.3, rng);
    link_dataset ds = split_links(g, {0.8, 0.1, 0.1}, 19);
    peg_config mcfg = tiny_model_config();
    peg_model model = make_peg_model(mcfg, 1, 51);
    train(model, ds, tiny_train_config(4, 19));

    const double in_domain = evaluate_auc(model, ds.message_graph, ds.test_pos, ds.test_neg);
    const double again = evaluate_auc(model, ds.message_graph, ds.test_pos, ds.test_neg);
    CHECK(in_domain == again);  // deterministic and reusable

    // width mismatch handling
    graph wide = g.with_features(dense_matrix(22, 5, 1.0));
    domain_shift_options opts;
    opts.allow_projection = false;
    CHECK_THROWS_AS(domain_shift_eval(model, wide, opts), width_mismatch_error);
    opts.allow_projection = true;
    domain_shift_result res = domain_shift_eval(model, wide, opts);
    CHECK(res.auc >= 0.0);
    CHECK(res.auc <= 1.0);
}

TEST_CASE("random projection and row normalization") {
    std::mt19937_64 rng(10);
    std::normal_distribution<double> gauss(0.0, 1.0);
    dense_matrix f(6, 9);
    for (std::size_t k = 0; k < f.size(); ++k) f.data()[k] = gauss(rng);
    dense_matrix p = random_projection(f, 4, 3);
    CHECK(p.rows() == 6);
    CHECK(p.cols() == 4);
    dense_matrix nrm = row_normalize(p);
    for (std::size_t i = 0; i < nrm.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < nrm.cols(); ++j) s += nrm(i, j) * nrm(i, j);
        CHECK(std::sqrt(s) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("edge weight curve: flat and diagonal shapes") {
    std::mt19937_64 rng(11);
    graph g = random_graph(12, 0.4, rng);
    std::normal_distribution<double> gauss(0.0, 1.0);
    dense_matrix z(12, 2);
    for (std::size_t k = 0; k < z.size(); ++k) z.data()[k] = gauss(rng);

    peg_config mcfg = tiny_model_config();
    peg_model model = make_peg_model(mcfg, 1, 61);
    // constant phi
    for (auto& lin : model.layers[0].phi.layers)
        for (std::size_t k = 0; k < lin.w.size(); ++k) lin.w.data()[k] = 0.0;
    model.layers[0].phi.layers.back().b(0, 0) = 2.5;

    propagation_structure prop = build_propagation(g, z);
    edge_weight_curve_result flat = edge_weight_curve(model, prop, 50, 3);
    for (const auto& [d, w] : flat.rows) CHECK(w == doctest::Approx(2.5));
    CHECK(flat.monotone_fraction == doctest::Approx(1.0));

    // identity phi: the curve is the diagonal
    model.layers[0].phi.layers.clear();
    model.layers[0].phi.layers.push_back(
        {dense_matrix::identity(1), dense_matrix(1, 1, 0.0), nn::activation::identity});
    edge_weight_curve_result diag = edge_weight_curve(model, prop, 50, 3);
    for (const auto& [d, w] : diag.rows) CHECK(w == doctest::Approx(d).epsilon(1e-12));

    const std::string path = "curve_test.csv";
    write_edge_weight_csv(diag, path);
    std::remove(path.c_str());
}

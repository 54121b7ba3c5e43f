// Command-line front end: dataset generation, eigengap diagnostics,
// factorization-based positional encodings, and the link-prediction
// train/eval/perturb/domain-shift pipeline.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "peg/datasets.hpp"
#include "peg/errors.hpp"
#include "peg/factorization.hpp"
#include "peg/model.hpp"
#include "peg/pipeline.hpp"
#include "peg/spectral.hpp"

namespace fs = std::filesystem;
using namespace peg;

namespace {

std::vector<std::size_t> parse_blocks(const std::string& spec) {
    std::vector<std::size_t> blocks;
    std::stringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ',')) blocks.push_back(std::stoul(tok));
    if (blocks.empty()) throw CLI::ValidationError("--blocks", "expected e.g. 500,500");
    return blocks;
}

std::vector<double> parse_levels(const std::string& spec) {
    std::vector<double> levels;
    std::stringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ',')) levels.push_back(std::stod(tok));
    return levels;
}

void parse_metric(const std::string& spec, train_config& cfg) {
    if (spec == "auc") {
        cfg.metric = eval_metric_kind::roc_auc;
        return;
    }
    if (spec.rfind("hits@", 0) == 0) {
        cfg.metric = eval_metric_kind::hits_at_k;
        cfg.hits_k = std::stoul(spec.substr(5));
        return;
    }
    throw CLI::ValidationError("--metric", "expected auc or hits@K");
}

struct train_args {
    std::string graph_path, feature_path, out_dir, config_path;
    std::string pe = "le";
    std::size_t dim = 8, folds = 0, epochs = 100, batch = 128;
    std::size_t layers = 2, hidden = 128;
    double lr = 1e-2;
    std::uint64_t seed = 1;
    std::string metric = "auc";
    double train_ratio = 0.85, val_ratio = 0.05, test_ratio = 0.10;
};

peg_config model_config_from(const train_args& a) {
    peg_config cfg;
    if (!a.config_path.empty()) cfg = peg_config::load(a.config_path);
    cfg.num_layers = a.layers;
    cfg.hidden_dim = a.hidden;
    cfg.pe_dim = a.dim;
    cfg.method = a.pe == "le" ? pe_method::laplacian_eigenmap : pe_method::factorization;
    return cfg;
}

int run_train(const train_args& a) {
    graph g = load_graph(a.graph_path, a.feature_path);
    if (g.duplicate_edges_dropped() > 0)
        std::cerr << "warning: dropped " << g.duplicate_edges_dropped()
                  << " duplicate edges while loading\n";

    link_dataset ds = split_links(g, {a.train_ratio, a.val_ratio, a.test_ratio}, a.seed);
    peg_config mcfg = model_config_from(a);

    train_config tcfg;
    tcfg.epochs = a.epochs;
    tcfg.batch_size = a.batch;
    tcfg.learning_rate = a.lr;
    tcfg.seed = a.seed;
    parse_metric(a.metric, tcfg);
    tcfg.use_folds = a.folds > 0;
    if (tcfg.use_folds) fold_partition(ds, a.folds, a.seed, mcfg);

    const std::size_t width =
        ds.message_graph.features().empty() ? 1 : ds.message_graph.feature_dim();
    peg_model model = make_peg_model(mcfg, width, a.seed);
    train_result res = train(model, ds, tcfg);

    // test-split metric with the best-validation weights; one PE/propagation
    // build serves scoring and the edge-weight curve
    positional_encoding pe = compute_pe(ds.message_graph, mcfg, a.seed);
    propagation_structure prop = build_propagation(ds.message_graph.with_self_loops(), pe.z,
                                                   mcfg.edge_weights);
    dense_matrix feats = ds.message_graph.features().empty()
                             ? make_features(ds.message_graph, feature_mode::degree, 0, 0)
                             : ds.message_graph.features();
    dense_matrix x_hat = model_forward(model, prop, feats);
    auto score_set = [&](const edge_list& pairs) {
        std::vector<double> out;
        out.reserve(pairs.size());
        for (const auto& [u, v] : pairs) out.push_back(link_logit(model, x_hat, pe.z, u, v));
        return out;
    };
    std::vector<double> pos = score_set(ds.test_pos);
    std::vector<double> neg = score_set(ds.test_neg);
    double test_metric;
    if (tcfg.metric == eval_metric_kind::hits_at_k) {
        test_metric = hits_at_k(pos, neg, tcfg.hits_k);
    } else {
        std::vector<double> scores = pos;
        scores.insert(scores.end(), neg.begin(), neg.end());
        std::vector<int> labels(pos.size(), 1);
        labels.resize(scores.size(), 0);
        test_metric = roc_auc(scores, labels);
    }

    fs::create_directories(a.out_dir);
    save_model(model, (fs::path(a.out_dir) / "checkpoint.pegw").string());
    mcfg.save((fs::path(a.out_dir) / "config.json").string());
    write_history_csv(res.history, (fs::path(a.out_dir) / "history.csv").string());
    std::map<std::string, metric_summary> metrics;
    metrics[a.metric == "auc" ? "roc_auc" : a.metric] = summarize_runs({test_metric});
    write_metrics_json(metrics, (fs::path(a.out_dir) / "metrics.json").string());

    edge_weight_curve_result curve = edge_weight_curve(model, prop, 500, a.seed);
    write_edge_weight_csv(curve, (fs::path(a.out_dir) / "curve.csv").string());

    std::cout << "best epoch " << res.best_epoch << " val " << res.best_val_metric << " test "
              << test_metric << "\n";
    std::cout << "edge-weight curve: monotone on " << curve.monotone_fraction * 100.0
              << "% of the observed distance range\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"positional-encoding graph networks: experiments and diagnostics"};
    app.require_subcommand(1);

    // ---- sbm ----
    auto* sbm_cmd = app.add_subcommand("sbm", "generate a stochastic block model graph");
    std::string sbm_blocks = "500,500", sbm_out, sbm_features = "degree", sbm_features_out;
    sbm_config sbm_cfg;
    std::size_t sbm_random_dim = 8;
    sbm_cmd->add_option("--blocks", sbm_blocks, "comma-separated block sizes");
    sbm_cmd->add_option("--p-in", sbm_cfg.p_within, "within-block link probability");
    sbm_cmd->add_option("--p-out", sbm_cfg.p_between, "cross-block link probability");
    sbm_cmd->add_option("--seed", sbm_cfg.seed, "rng seed");
    sbm_cmd->add_option("--out", sbm_out, "edge list output path")->required();
    sbm_cmd->add_option("--features", sbm_features, "none | degree | random");
    sbm_cmd->add_option("--random-dim", sbm_random_dim, "width of random features");
    sbm_cmd->add_option("--features-out", sbm_features_out, "feature CSV output path");

    // ---- diagnose ----
    auto* diag_cmd = app.add_subcommand("diagnose", "eigengap diagnostics CSV");
    std::string diag_graph, diag_out;
    std::size_t diag_max_p = 20;
    diag_cmd->add_option("--graph", diag_graph, "edge list path")->required();
    diag_cmd->add_option("--max-p", diag_max_p, "largest encoding width to report");
    diag_cmd->add_option("--out", diag_out, "output CSV path")->required();

    // ---- pe factorize ----
    auto* pe_cmd = app.add_subcommand("pe", "positional encodings");
    auto* fact_cmd = pe_cmd->add_subcommand("factorize", "matrix-factorization encoding");
    std::string fact_graph, fact_method = "line", fact_out;
    std::size_t fact_dim = 8, fact_window = 5, fact_iters = 2000;
    std::uint64_t fact_seed = 1;
    double fact_c = 0.0, fact_lr = 0.05;
    bool fact_no_svd = false;
    fact_cmd->add_option("--graph", fact_graph, "edge list path")->required();
    fact_cmd->add_option("--method", fact_method, "line | deepwalk");
    fact_cmd->add_option("--dim", fact_dim, "encoding width p");
    fact_cmd->add_option("--window", fact_window, "random-walk context size (deepwalk)");
    fact_cmd->add_option("--seed", fact_seed, "rng seed");
    fact_cmd->add_option("--iters", fact_iters, "solver iteration cap");
    fact_cmd->add_option("--lr", fact_lr, "solver learning rate");
    fact_cmd->add_option("--c", fact_c, "negative-mass constant (0 = 1/N)");
    fact_cmd->add_flag("--no-svd", fact_no_svd, "keep the raw factor instead of singular vectors");
    fact_cmd->add_option("--out", fact_out, "encoding CSV output path")->required();

    // ---- train ----
    train_args ta;
    auto* train_cmd = app.add_subcommand("train", "train a link-prediction model");
    train_cmd->add_option("--graph", ta.graph_path, "edge list path")->required();
    train_cmd->add_option("--features", ta.feature_path, "feature CSV path");
    train_cmd->add_option("--pe", ta.pe, "le | deepwalk")->check(CLI::IsMember({"le", "deepwalk"}));
    train_cmd->add_option("--dim", ta.dim, "positional encoding width");
    train_cmd->add_option("--folds", ta.folds, "0 (plain) or 10 (fold rotation)")
        ->check(CLI::IsMember({"0", "10"}));
    train_cmd->add_option("--epochs", ta.epochs, "training epochs");
    train_cmd->add_option("--batch", ta.batch, "batch size (64, 128 or 65536)");
    train_cmd->add_option("--lr", ta.lr, "learning rate");
    train_cmd->add_option("--seed", ta.seed, "rng seed");
    train_cmd->add_option("--metric", ta.metric, "auc | hits@K");
    train_cmd->add_option("--layers", ta.layers, "number of conv layers");
    train_cmd->add_option("--hidden", ta.hidden, "conv hidden width");
    train_cmd->add_option("--config", ta.config_path, "model config JSON");
    train_cmd->add_option("--train-ratio", ta.train_ratio, "train link share");
    train_cmd->add_option("--val-ratio", ta.val_ratio, "validation link share");
    train_cmd->add_option("--test-ratio", ta.test_ratio, "test link share");
    train_cmd->add_option("--out-dir", ta.out_dir, "output directory")->required();

    // ---- eval / perturb-eval ----
    std::string eval_graph, eval_features, eval_model_dir, eval_out, eval_metric = "auc";
    std::uint64_t eval_seed = 1;
    double eval_train_ratio = 0.85, eval_val_ratio = 0.05, eval_test_ratio = 0.10;
    std::string perturb_mode_str = "drop";
    double perturb_fraction = 0.1;
    auto add_eval_opts = [&](CLI::App* cmd) {
        cmd->add_option("--graph", eval_graph, "edge list path")->required();
        cmd->add_option("--features", eval_features, "feature CSV path");
        cmd->add_option("--model-dir", eval_model_dir, "directory written by train")->required();
        cmd->add_option("--seed", eval_seed, "seed used for the original split");
        cmd->add_option("--metric", eval_metric, "auc | hits@K");
        cmd->add_option("--train-ratio", eval_train_ratio, "train link share");
        cmd->add_option("--val-ratio", eval_val_ratio, "validation link share");
        cmd->add_option("--test-ratio", eval_test_ratio, "test link share");
        cmd->add_option("--out", eval_out, "metrics JSON output path");
    };
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a trained model on the test split");
    add_eval_opts(eval_cmd);
    auto* pert_cmd =
        app.add_subcommand("perturb-eval", "evaluate after perturbing the message graph");
    add_eval_opts(pert_cmd);
    pert_cmd->add_option("--mode", perturb_mode_str, "add | drop")
        ->check(CLI::IsMember({"add", "drop"}));
    pert_cmd->add_option("--fraction", perturb_fraction, "perturbed edge share (0..0.5)");

    // ---- domain-shift ----
    auto* shift_cmd = app.add_subcommand("domain-shift", "evaluate on a different graph");
    std::string shift_model_dir, shift_graph, shift_features, shift_out;
    double shift_fraction = 0.10;
    std::uint64_t shift_seed = 7;
    bool shift_no_projection = false;
    shift_cmd->add_option("--model-dir", shift_model_dir, "directory written by train")->required();
    shift_cmd->add_option("--test-graph", shift_graph, "edge list path")->required();
    shift_cmd->add_option("--test-features", shift_features, "feature CSV path");
    shift_cmd->add_option("--test-fraction", shift_fraction, "share of links held out as tests");
    shift_cmd->add_option("--seed", shift_seed, "rng seed");
    shift_cmd->add_flag("--no-projection", shift_no_projection, "fail on feature width mismatch");
    shift_cmd->add_option("--out", shift_out, "metrics JSON output path");

    // ---- sbm-experiment ----
    auto* exp_cmd = app.add_subcommand("sbm-experiment",
                                       "train on one SBM graph, test on fresh ones");
    std::string exp_blocks = "500,500", exp_levels, exp_out_dir;
    sbm_experiment_config exp_cfg;
    exp_cfg.model.pe_dim = 2;             // two blocks -> two structural eigenvectors
    exp_cfg.model.pe_dense_cutoff = 512;  // iterative eigensolver on the usual sizes
    exp_cfg.training.epochs = 15;
    std::size_t exp_seeds = 1;
    exp_cmd->add_option("--blocks", exp_blocks, "comma-separated block sizes");
    exp_cmd->add_option("--p-in", exp_cfg.sbm.p_within, "within-block link probability");
    exp_cmd->add_option("--p-out", exp_cfg.sbm.p_between, "cross-block link probability");
    exp_cmd->add_option("--seed", exp_cfg.sbm.seed, "base rng seed");
    exp_cmd->add_option("--seeds", exp_seeds, "number of repetitions");
    exp_cmd->add_option("--tests", exp_cfg.num_test_graphs, "number of test graphs");
    exp_cmd->add_option("--link-fraction", exp_cfg.link_fraction, "share of links supervised");
    exp_cmd->add_option("--epochs", exp_cfg.training.epochs, "training epochs");
    exp_cmd->add_option("--dim", exp_cfg.model.pe_dim, "positional encoding width");
    exp_cmd->add_option("--drop-levels", exp_levels, "perturbation sweep, e.g. 0.1,0.2,0.3");
    exp_cmd->add_option("--pe-cutoff", exp_cfg.model.pe_dense_cutoff,
                        "dense eigensolver limit; larger graphs use the iterative path");
    exp_cmd->add_option("--out-dir", exp_out_dir, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sbm_cmd) {
            sbm_cfg.blocks = parse_blocks(sbm_blocks);
            if (sbm_features == "none") sbm_cfg.features = feature_mode::none;
            else if (sbm_features == "degree") sbm_cfg.features = feature_mode::degree;
            else if (sbm_features == "random") sbm_cfg.features = feature_mode::random_features;
            else throw CLI::ValidationError("--features", "expected none, degree or random");
            sbm_cfg.random_dim = sbm_random_dim;
            sbm_graph out = sbm_generate(sbm_cfg);
            save_edge_list(out.g, sbm_out);
            if (!sbm_features_out.empty() && !out.g.features().empty())
                save_features_csv(out.g.features(), sbm_features_out);
            std::cout << out.g.num_nodes() << " nodes, " << out.g.num_undirected_edges()
                      << " edges -> " << sbm_out << "\n";
        } else if (*diag_cmd) {
            graph g = load_graph(diag_graph);
            spectral_decomposition dec =
                symmetric_eig(normalized_laplacian(g).to_dense());
            const std::size_t pmax = std::min(diag_max_p, g.num_nodes() - 1);
            std::ofstream os(diag_out);
            if (!os) throw io_error("diagnose: cannot open " + diag_out);
            os.precision(17);
            os << "p,lambda_p,gap_p,rho_p\n";
            for (std::size_t p = 1; p <= pmax; ++p) {
                eigengap_diagnostics_result d = eigengap_diagnostics(dec.eigenvalues, p);
                os << p << "," << dec.eigenvalues[p - 1] << "," << d.gap_p << ","
                   << d.stability_ratio << "\n";
            }
            std::cout << "wrote " << pmax << " rows to " << diag_out << "\n";
        } else if (*fact_cmd) {
            graph g = load_graph(fact_graph);
            const double c = fact_c > 0.0 ? fact_c : 1.0 / double(g.num_nodes());
            factorization_objective obj = fact_method == "line"
                                              ? line_targets(g, c)
                                              : deepwalk_targets(g, fact_window, c);
            factorization_solve_options opts;
            opts.lr = fact_lr;
            opts.use_svd = !fact_no_svd;
            factorization_pe pe = solve_factorization(obj, fact_dim, fact_seed, fact_iters, opts);
            save_features_csv(pe.z, fact_out);
            std::cout << "objective " << pe.objective_value << " after " << pe.trace.iterations
                      << " iterations (grad norm " << pe.trace.final_grad_norm << ")"
                      << (pe.warning_not_converged ? " [not converged]" : "") << "\n";
        } else if (*train_cmd) {
            return run_train(ta);
        } else if (*eval_cmd || *pert_cmd) {
            graph g = load_graph(eval_graph, eval_features);
            link_dataset ds = split_links(g, {eval_train_ratio, eval_val_ratio, eval_test_ratio},
                                          eval_seed);
            peg_config mcfg = peg_config::load(
                (fs::path(eval_model_dir) / "config.json").string());
            const std::size_t width =
                ds.message_graph.features().empty() ? 1 : ds.message_graph.feature_dim();
            peg_model model = make_peg_model(mcfg, width, eval_seed);
            load_model_weights(model, (fs::path(eval_model_dir) / "checkpoint.pegw").string());

            graph message = ds.message_graph;
            if (*pert_cmd) {
                message = perturb_graph(message,
                                        perturb_mode_str == "add" ? perturb_mode::add
                                                                  : perturb_mode::drop,
                                        perturb_fraction, eval_seed + 17);
            }
            train_config mcfg_metric;
            parse_metric(eval_metric, mcfg_metric);
            std::vector<double> pos = score_links(model, message, ds.test_pos, eval_seed);
            std::vector<double> neg = score_links(model, message, ds.test_neg, eval_seed);
            double value;
            if (mcfg_metric.metric == eval_metric_kind::hits_at_k) {
                value = hits_at_k(pos, neg, mcfg_metric.hits_k);
            } else {
                std::vector<double> scores = pos;
                scores.insert(scores.end(), neg.begin(), neg.end());
                std::vector<int> labels(pos.size(), 1);
                labels.resize(scores.size(), 0);
                value = roc_auc(scores, labels);
            }
            std::cout << (*pert_cmd ? "perturbed " : "") << "test metric " << value << "\n";
            if (!eval_out.empty()) {
                std::map<std::string, metric_summary> metrics;
                metrics[eval_metric == "auc" ? "roc_auc" : eval_metric] = summarize_runs({value});
                write_metrics_json(metrics, eval_out);
            }
        } else if (*shift_cmd) {
            graph g_test = load_graph(shift_graph, shift_features);
            peg_config mcfg = peg_config::load(
                (fs::path(shift_model_dir) / "config.json").string());
            // width recorded in the checkpoint drives the model shape
            auto tensors = nn::read_checkpoint(
                (fs::path(shift_model_dir) / "checkpoint.pegw").string());
            const std::size_t width = tensors.at("layer0.w").rows();
            peg_model model = make_peg_model(mcfg, width, shift_seed);
            load_model_weights(model, (fs::path(shift_model_dir) / "checkpoint.pegw").string());
            domain_shift_options opts;
            opts.test_fraction = shift_fraction;
            opts.seed = shift_seed;
            opts.allow_projection = !shift_no_projection;
            domain_shift_result res = domain_shift_eval(model, g_test, opts);
            std::cout << "domain-shift auc " << res.auc << " over " << res.num_pos
                      << " positives\n";
            if (!shift_out.empty()) {
                std::map<std::string, metric_summary> metrics;
                metrics["roc_auc"] = summarize_runs({res.auc});
                write_metrics_json(metrics, shift_out);
            }
        } else if (*exp_cmd) {
            exp_cfg.sbm.blocks = parse_blocks(exp_blocks);
            exp_cfg.training.batch_size = 65536;
            if (!exp_levels.empty()) exp_cfg.drop_levels = parse_levels(exp_levels);
            fs::create_directories(exp_out_dir);
            std::vector<double> means;
            for (std::size_t s = 0; s < exp_seeds; ++s) {
                sbm_experiment_config run_cfg = exp_cfg;
                run_cfg.sbm.seed = exp_cfg.sbm.seed + s;
                run_cfg.training.seed = exp_cfg.training.seed + s;
                sbm_experiment_result res = run_sbm_experiment(run_cfg);
                means.push_back(res.mean_test_auc);
                std::cout << "seed " << run_cfg.sbm.seed << ": mean test auc "
                          << res.mean_test_auc << "\n";
                for (const auto& [level, auc] : res.drop_auc)
                    std::cout << "  drop " << level << ": auc " << auc << "\n";
                if (s == 0) {
                    write_history_csv(res.training.history,
                                      (fs::path(exp_out_dir) / "history.csv").string());
                }
            }
            std::map<std::string, metric_summary> metrics;
            metrics["roc_auc"] = summarize_runs(means);
            write_metrics_json(metrics, (fs::path(exp_out_dir) / "metrics.json").string());
            std::cout << "mean over seeds: " << summarize_runs(means).mean << "\n";
        }
    } catch (const peg::error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

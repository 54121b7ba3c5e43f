#ifndef PEG_PIPELINE_HPP
#define PEG_PIPELINE_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "peg/datasets.hpp"
#include "peg/graph.hpp"
#include "peg/model.hpp"

namespace peg {

/// Positive/negative link samples with the train/val/test partition. The
/// message graph carries only train positives; validation and test links are
/// removed from it. Negatives are frozen at split time.
struct link_dataset {
    graph base_graph;
    graph message_graph;
    edge_list train_pos, val_pos, test_pos;
    edge_list train_neg, val_neg, test_neg;

    // PEG+ fold state (filled by fold_partition)
    std::vector<std::size_t> fold_of_train_edge;
    std::size_t num_folds = 0;
    std::vector<graph> fold_graphs;
    std::vector<positional_encoding> fold_pes;
};

struct split_ratios {
    double train = 0.85;
    double val = 0.05;
    double test = 0.10;
};

/// Seeded split of the link set plus uniform rejection-sampled negatives
/// (equal counts per split, disjoint from every positive set and the graph).
link_dataset split_links(const graph& g, const split_ratios& ratios, std::uint64_t seed);

/// Computes the positional encoding the model config asks for.
positional_encoding compute_pe(const graph& g, const peg_config& cfg, std::uint64_t seed = 0);

/// Assigns each train edge to one of k folds (sizes differ by at most one)
/// and precomputes, per fold, the graph with that fold removed and its PE.
void fold_partition(link_dataset& ds, std::size_t k, std::uint64_t seed, const peg_config& cfg);

enum class eval_metric_kind : int { roc_auc = 0, hits_at_k = 1 };

struct train_config {
    std::size_t epochs = 100;
    std::size_t batch_size = 128;  // 64, 128 or 65536
    double learning_rate = 1e-2;
    std::uint64_t seed = 1;
    bool use_folds = false;  // rotate supervision folds, one per epoch
    eval_metric_kind metric = eval_metric_kind::roc_auc;
    std::size_t hits_k = 20;

    void validate() const;
};

struct train_result {
    std::vector<epoch_record> history;
    std::size_t best_epoch = 0;
    double best_val_metric = 0.0;
};

/// Minibatch BCE training over train positives and negatives with per-epoch
/// validation; the model comes back holding the best-validation weights
/// (earliest epoch wins ties). external_val, when given, replaces the
/// dataset-based validation metric.
train_result train(peg_model& model, const link_dataset& ds, const train_config& cfg,
                   const std::function<double(const peg_model&)>& external_val = nullptr);

/// Rank-based ROC-AUC (ties count one half).
double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels);

/// Fraction of positive scores strictly above the k-th highest negative.
double hits_at_k(const std::vector<double>& pos_scores, const std::vector<double>& neg_scores,
                 std::size_t k);

enum class perturb_mode : int { add = 0, drop = 1 };

/// Inserts or removes round(fraction * |E|) undirected edges, seeded.
graph perturb_graph(const graph& g, perturb_mode mode, double fraction, std::uint64_t seed);

/// Scores a list of node pairs with a frozen model on the given graph:
/// recomputes PE, stacks the layers, applies the decoder.
std::vector<double> score_links(const peg_model& model, const graph& message_graph,
                                const edge_list& pairs, std::uint64_t pe_seed = 0);

/// AUC over explicit positive/negative sets on the given message graph.
double evaluate_auc(const peg_model& model, const graph& message_graph, const edge_list& pos,
                    const edge_list& neg, std::uint64_t pe_seed = 0);

struct domain_shift_options {
    double test_fraction = 0.10;
    std::uint64_t seed = 7;
    bool allow_projection = true;
    std::uint64_t projection_seed = 99;
    /// When block labels are given, positives come from within-block links
    /// and negatives from cross-block missing pairs; otherwise positives are
    /// uniform links and negatives uniform missing pairs.
    const std::vector<std::size_t>* blocks = nullptr;
};

struct domain_shift_result {
    double auc = 0.0;
    std::size_t num_pos = 0;
};

/// Evaluates a frozen model on an unseen graph: samples test links, removes
/// them from the message graph, recomputes PE there, reconciles feature
/// widths by seeded random projection plus row normalization when needed.
domain_shift_result domain_shift_eval(const peg_model& model, const graph& g_test,
                                      const domain_shift_options& opts);

dense_matrix random_projection(const dense_matrix& features, std::size_t out_dim,
                               std::uint64_t seed);
dense_matrix row_normalize(const dense_matrix& features);

struct edge_weight_curve_result {
    std::vector<std::pair<double, double>> rows;  // (distance, weight)
    double monotone_fraction = 0.0;  // share of increasing steps on the grid
};

/// phi of the first layer evaluated over the observed distance range (dense
/// grid) plus `samples` sampled edge distances.
edge_weight_curve_result edge_weight_curve(const peg_model& model,
                                           const propagation_structure& prop,
                                           std::size_t samples, std::uint64_t seed);

void write_edge_weight_csv(const edge_weight_curve_result& curve, const std::string& path);

/// Relabels every stored edge list and both graphs; training on the permuted
/// dataset must reproduce the original loss history.
link_dataset permute_dataset(const link_dataset& ds, const permutation& p);

// ---------------------------------------------------------------------------
// SBM generalization experiment
// ---------------------------------------------------------------------------

struct sbm_experiment_config {
    sbm_config sbm;                      // train-graph parameters
    std::size_t num_test_graphs = 10;
    double link_fraction = 0.10;         // share of within-block links supervised/tested
    train_config training;
    peg_config model;
    std::vector<double> drop_levels;     // optional perturbation sweep on test graphs
};

struct sbm_experiment_result {
    std::vector<double> per_graph_auc;
    double mean_test_auc = 0.0;
    std::vector<std::pair<double, double>> drop_auc;  // (level, mean auc over test graphs)
    train_result training;
};

/// Trains on one generated graph (within-block positives, cross-block
/// negatives), validates on a held-out graph, tests on fresh graphs whose
/// test links are removed before PE recomputation.
sbm_experiment_result run_sbm_experiment(const sbm_experiment_config& cfg);

} // namespace peg

#endif // PEG_PIPELINE_HPP

#ifndef PEG_DATASETS_HPP
#define PEG_DATASETS_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "peg/graph.hpp"

namespace peg {

enum class feature_mode : int { none = 0, degree = 1, random_features = 2 };

/// Two-parameter stochastic block model: independent Bernoulli links with
/// p_within inside a block and p_between across blocks, no self loops.
struct sbm_config {
    std::vector<std::size_t> blocks;
    double p_within = 0.3;
    double p_between = 0.1;
    std::uint64_t seed = 1;
    feature_mode features = feature_mode::degree;
    std::size_t random_dim = 8;
};

struct sbm_graph {
    graph g;
    std::vector<std::size_t> block_of;
};

sbm_graph sbm_generate(const sbm_config& cfg);

/// Attaches features to an already-built graph according to the mode.
dense_matrix make_features(const graph& g, feature_mode mode, std::size_t random_dim,
                           std::uint64_t seed);

/// Edge-list text format: one "u<TAB>v" (any whitespace accepted) pair per
/// line, 0-based, '#' comments. Features: header-less CSV, row i = node i.
graph load_graph(const std::string& edge_path, const std::string& feature_path = "");

void save_edge_list(const graph& g, const std::string& path);
void save_features_csv(const dense_matrix& features, const std::string& path);

struct metric_summary {
    double mean = 0.0;
    double std_dev = 0.0;
    std::vector<double> runs;
};

metric_summary summarize_runs(const std::vector<double>& runs);

struct epoch_record {
    std::size_t epoch = 0;
    double loss = 0.0;
    double val_metric = 0.0;
};

/// metrics.json: {"schema_version": 1, "<name>": {mean, std, runs: [...]}}
/// history.csv: epoch,loss,val_metric
void write_metrics_json(const std::map<std::string, metric_summary>& metrics,
                        const std::string& path);
void write_history_csv(const std::vector<epoch_record>& history, const std::string& path);

} // namespace peg

#endif // PEG_DATASETS_HPP

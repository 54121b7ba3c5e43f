#include "peg/datasets.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "peg/errors.hpp"

namespace peg {

sbm_graph sbm_generate(const sbm_config& cfg) {
    if (cfg.blocks.empty()) throw bad_dimension_error("sbm_generate: no blocks");
    if (cfg.p_within < 0.0 || cfg.p_within > 1.0 || cfg.p_between < 0.0 || cfg.p_between > 1.0)
        throw bad_dimension_error("sbm_generate: probabilities must lie in [0, 1]");
    std::size_t n = 0;
    for (std::size_t b : cfg.blocks) {
        if (b == 0) throw bad_dimension_error("sbm_generate: block sizes must be positive");
        n += b;
    }
    std::vector<std::size_t> block_of(n);
    std::size_t node = 0;
    for (std::size_t b = 0; b < cfg.blocks.size(); ++b)
        for (std::size_t i = 0; i < cfg.blocks[b]; ++i) block_of[node++] = b;

    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    edge_list edges;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double p = block_of[i] == block_of[j] ? cfg.p_within : cfg.p_between;
            if (u01(rng) < p) edges.emplace_back(i, j);
        }

    sbm_graph out;
    out.g = graph::from_edges(n, edges);
    out.block_of = std::move(block_of);
    if (cfg.features != feature_mode::none)
        out.g = out.g.with_features(make_features(out.g, cfg.features, cfg.random_dim, cfg.seed));
    return out;
}

dense_matrix make_features(const graph& g, feature_mode mode, std::size_t random_dim,
                           std::uint64_t seed) {
    const std::size_t n = g.num_nodes();
    switch (mode) {
        case feature_mode::none:
            return {};
        case feature_mode::degree: {
            degree_info d = compute_degrees(g);
            dense_matrix f(n, 1);
            for (std::size_t v = 0; v < n; ++v) f(v, 0) = d.degrees[v];
            return f;
        }
        case feature_mode::random_features: {
            if (random_dim == 0) throw bad_dimension_error("make_features: random_dim must be > 0");
            std::mt19937_64 rng(seed ^ 0x5eedf00dULL);
            std::uniform_real_distribution<double> u01(0.0, 1.0);
            dense_matrix f(n, random_dim);
            for (std::size_t k = 0; k < f.size(); ++k) f.data()[k] = u01(rng);
            return f;
        }
    }
    return {};
}

graph load_graph(const std::string& edge_path, const std::string& feature_path) {
    std::ifstream is(edge_path);
    if (!is) throw io_error("load_graph: cannot open " + edge_path);

    edge_list edges;
    std::size_t max_index = 0;
    bool any = false;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::istringstream ls(line);
        long long u, v;
        if (!(ls >> u)) continue;  // blank or comment-only line
        if (!(ls >> v))
            throw parse_error("load_graph: " + edge_path + ":" + std::to_string(line_no) +
                              ": expected two indices");
        std::string trailing;
        if (ls >> trailing)
            throw parse_error("load_graph: " + edge_path + ":" + std::to_string(line_no) +
                              ": trailing tokens");
        if (u < 0 || v < 0)
            throw index_out_of_range_error("load_graph: negative node index at line " +
                                           std::to_string(line_no));
        edges.emplace_back(static_cast<std::size_t>(u), static_cast<std::size_t>(v));
        max_index = std::max({max_index, static_cast<std::size_t>(u), static_cast<std::size_t>(v)});
        any = true;
    }
    if (!any) throw parse_error("load_graph: " + edge_path + " contains no edges");
    std::size_t n = max_index + 1;

    dense_matrix features;
    if (!feature_path.empty()) {
        std::ifstream fs(feature_path);
        if (!fs) throw io_error("load_graph: cannot open " + feature_path);
        std::vector<std::vector<double>> rows;
        std::size_t fline = 0;
        while (std::getline(fs, line)) {
            ++fline;
            if (line.empty()) continue;
            std::vector<double> row;
            std::stringstream ls(line);
            std::string cell;
            while (std::getline(ls, cell, ',')) {
                try {
                    row.push_back(std::stod(cell));
                } catch (const std::exception&) {
                    throw parse_error("load_graph: " + feature_path + ":" + std::to_string(fline) +
                                      ": bad number '" + cell + "'");
                }
            }
            if (!rows.empty() && row.size() != rows.front().size())
                throw parse_error("load_graph: " + feature_path + ":" + std::to_string(fline) +
                                  ": ragged row");
            rows.push_back(std::move(row));
        }
        if (rows.size() < n)
            throw feature_row_mismatch_error("load_graph: feature rows " +
                                             std::to_string(rows.size()) + " < node count " +
                                             std::to_string(n));
        n = rows.size();  // trailing rows are isolated nodes
        features = dense_matrix(n, rows.front().size());
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < rows[i].size(); ++j) features(i, j) = rows[i][j];
    }
    return graph::from_edges(n, edges, std::move(features));
}

void save_edge_list(const graph& g, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw io_error("save_edge_list: cannot open " + path);
    os << "# " << g.num_nodes() << " nodes, " << g.num_undirected_edges() << " undirected edges\n";
    for (const auto& [u, v] : g.undirected_edges()) os << u << "\t" << v << "\n";
    if (!os) throw io_error("save_edge_list: write failed for " + path);
}

void save_features_csv(const dense_matrix& features, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw io_error("save_features_csv: cannot open " + path);
    os.precision(17);
    for (std::size_t i = 0; i < features.rows(); ++i) {
        for (std::size_t j = 0; j < features.cols(); ++j) {
            if (j) os << ",";
            os << features(i, j);
        }
        os << "\n";
    }
    if (!os) throw io_error("save_features_csv: write failed for " + path);
}

metric_summary summarize_runs(const std::vector<double>& runs) {
    metric_summary s;
    s.runs = runs;
    if (runs.empty()) return s;
    double sum = 0.0;
    for (double r : runs) sum += r;
    s.mean = sum / static_cast<double>(runs.size());
    double sq = 0.0;
    for (double r : runs) sq += (r - s.mean) * (r - s.mean);
    s.std_dev = runs.size() > 1 ? std::sqrt(sq / static_cast<double>(runs.size() - 1)) : 0.0;
    return s;
}

void write_metrics_json(const std::map<std::string, metric_summary>& metrics,
                        const std::string& path) {
    nlohmann::json j;
    j["schema_version"] = 1;
    for (const auto& [name, s] : metrics) {
        j[name] = {{"mean", s.mean}, {"std", s.std_dev}, {"runs", s.runs}};
    }
    std::ofstream os(path);
    if (!os) throw io_error("write_metrics_json: cannot open " + path);
    os << j.dump(2) << "\n";
    if (!os) throw io_error("write_metrics_json: write failed for " + path);
}

void write_history_csv(const std::vector<epoch_record>& history, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw io_error("write_history_csv: cannot open " + path);
    os.precision(17);
    os << "epoch,loss,val_metric\n";
    for (const auto& r : history) os << r.epoch << "," << r.loss << "," << r.val_metric << "\n";
    if (!os) throw io_error("write_history_csv: write failed for " + path);
}

} // namespace peg

#ifndef PEG_MODEL_HPP
#define PEG_MODEL_HPP

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "peg/autodiff.hpp"
#include "peg/graph.hpp"
#include "peg/spectral.hpp"

namespace peg {

enum class edge_weight_mode : int { distance = 0, inner_product = 1 };
enum class decoder_mode : int { inner_product = 0, hadamard = 1 };

/// One graph-convolution layer with positional-feature-controlled edge
/// weights: x_out = psi((A_hat ⊙ Xi) x w), Xi_uv = phi(||z_u - z_v||),
/// positional features passed through unchanged.
struct peg_layer_params {
    dense_matrix w;       // F_in x F_out
    nn::mlp_params phi;   // scalar -> scalar edge-weight MLP
    nn::activation psi = nn::activation::relu;

    double psi_lipschitz() const { return nn::activation_lipschitz(psi); }
    double phi_lipschitz() const { return phi.declared_lipschitz(); }
};

/// Graph-side constants of the masked propagation: normalized adjacency,
/// the undirected-edge indexing that ties its mirrored entries together, and
/// the per-edge positional feature phi consumes.
struct propagation_structure {
    sparse_matrix ahat;
    std::vector<std::size_t> edge_id;       // per CSR entry -> undirected edge
    std::vector<std::pair<std::size_t, std::size_t>> undirected;
    std::vector<double> ahat_per_edge;      // A_hat value per undirected edge
    std::vector<double> pe_feature;         // distance or inner product per edge
    edge_weight_mode mode = edge_weight_mode::distance;
};

propagation_structure build_propagation(const graph& g, const dense_matrix& z,
                                        edge_weight_mode mode = edge_weight_mode::distance,
                                        isolated_policy policy = isolated_policy::pad_self_loop);

/// Xi values on the given edges only; the forward pass uses the copy cached
/// in propagation_structure.
std::vector<double> edge_weights(const dense_matrix& z,
                                 const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                                 const nn::mlp_params& phi,
                                 edge_weight_mode mode = edge_weight_mode::distance);

/// Single-layer inference forward; z is untouched by construction.
dense_matrix peg_forward(const peg_layer_params& layer, const propagation_structure& prop,
                         const dense_matrix& x);

struct peg_config {
    std::size_t num_layers = 2;
    std::size_t hidden_dim = 128;
    nn::activation psi = nn::activation::relu;
    pe_method method = pe_method::laplacian_eigenmap;
    std::size_t pe_dim = 8;
    std::size_t phi_hidden = 32;
    std::vector<std::size_t> decoder_hidden = {64};
    decoder_mode decoder = decoder_mode::inner_product;
    edge_weight_mode edge_weights = edge_weight_mode::distance;
    std::size_t dw_window = 5;       // deepwalk context size
    std::size_t dw_iters = 2000;     // factorization solver iterations
    std::size_t pe_dense_cutoff = 5000;  // above this the iterative eigensolver runs

    std::string to_json() const;
    static peg_config from_json(const std::string& text);
    void save(const std::string& path) const;
    static peg_config load(const std::string& path);
};

struct peg_model {
    peg_config config;
    std::vector<peg_layer_params> layers;
    nn::mlp_params decoder;

    std::size_t in_dim() const { return layers.front().w.rows(); }
    std::vector<std::pair<std::string, dense_matrix*>> named_parameters();
    std::vector<std::pair<std::string, const dense_matrix*>> named_parameters() const;
};

peg_model make_peg_model(const peg_config& cfg, std::size_t in_dim, std::uint64_t seed);

void save_model(const peg_model& m, const std::string& checkpoint_path);
void load_model_weights(peg_model& m, const std::string& checkpoint_path);

/// Stacked inference forward over all layers.
dense_matrix model_forward(const peg_model& m, const propagation_structure& prop,
                           const dense_matrix& x);

/// Decoder input for the pair (u, v): the 2-vector of inner products
/// (x_u . x_v, z_u . z_v) or the elementwise-product variant.
dense_matrix link_pair_features(const peg_model& m, const dense_matrix& x_hat,
                                const dense_matrix& z, std::size_t u, std::size_t v);

double link_logit(const peg_model& m, const dense_matrix& x_hat, const dense_matrix& z,
                  std::size_t u, std::size_t v);

struct equivariance_report {
    double permutation_violation = 0.0;  // conditions on node relabeling
    double orthogonal_violation = 0.0;   // conditions on rotating z
    double max_violation = 0.0;
};

/// Measures both layer conditions over random permutation/rotation trials.
equivariance_report equivariance_check(const peg_layer_params& layer, const graph& g,
                                       const dense_matrix& x, const dense_matrix& z,
                                       std::size_t trials, std::uint64_t seed);

struct stability_certificate {
    double delta = 0.0;       // min of the two inverse eigengaps at p
    double x_opnorm = 0.0;    // ||X1||_op
    double d_max = 0.0;       // max degree of the second graph
    double constant_c = 0.0;  // (7 delta ||X||_op + 2 d_max) l_psi l_phi ||W||_op + 3 delta
    double lhs = 0.0;         // ||X1_out - P* X2_out||_F + eta(Z1, P* Z2)
    double rhs = 0.0;         // constant_c * d(G1, G2)
    double distance = 0.0;    // d(G1, G2)
    bool holds = false;
};

/// Evaluates the layer stability bound on two small attributed graphs using
/// the exhaustive matcher for P*. phi must be Lipschitz-constrained.
stability_certificate verify_stability(const peg_layer_params& layer, const graph& g1,
                                       const graph& g2, std::size_t p);

/// Orthonormalization of a standard-normal matrix (modified Gram-Schmidt,
/// positive pivots); the test-grade random element of O(p).
dense_matrix random_orthogonal(std::size_t p, std::mt19937_64& rng);

} // namespace peg

#endif // PEG_MODEL_HPP

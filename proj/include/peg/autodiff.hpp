#ifndef PEG_AUTODIFF_HPP
#define PEG_AUTODIFF_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "peg/matrix.hpp"

namespace peg::nn {

enum class activation : int { identity = 0, relu = 1, tanh_fn = 2, sigmoid = 3 };

const char* activation_name(activation a);
activation activation_from_name(const std::string& name);

/// Lipschitz constant of the activation as a scalar function.
double activation_lipschitz(activation a);

double apply_activation(activation a, double x);
double activation_grad(activation a, double x);  // relu'(0) = 0 by convention

/// Estimate of the largest singular value by power iteration on W^T W.
double power_iteration_norm(const dense_matrix& w, int iters = 20, double tol = 1e-4);

struct linear_layer {
    dense_matrix w;  // in x out
    dense_matrix b;  // 1 x out
    activation act = activation::identity;
};

/// A plain multilayer perceptron. When lipschitz_constrained is set, weight
/// matrices are spectrally rescaled after every optimizer step so each
/// operator norm stays at or below lipschitz_cap.
struct mlp_params {
    std::vector<linear_layer> layers;
    bool lipschitz_constrained = false;
    double lipschitz_cap = 1.0;

    std::size_t in_dim() const { return layers.front().w.rows(); }
    std::size_t out_dim() const { return layers.back().w.cols(); }

    /// Product of exact weight operator norms and activation constants.
    double declared_lipschitz() const;

    /// Rescales each weight so its power-iteration norm is <= lipschitz_cap.
    void enforce_lipschitz();
};

/// Widths are (in, hidden..., out); acts has one tag per layer. Weights are
/// seeded normal with 1/sqrt(fan_in) scale, biases zero (and kept zero in
/// Lipschitz-constrained mode so the map fixes the origin).
mlp_params make_mlp(const std::vector<std::size_t>& widths, const std::vector<activation>& acts,
                    std::uint64_t seed);

/// Inference-path forward (no gradients).
dense_matrix mlp_forward(const mlp_params& m, const dense_matrix& x);

/// Everything the masked-propagation op needs to push gradients back through
/// both the dense operand and the per-edge scale vector. All pointers must
/// outlive the tape.
struct masked_spmm_context {
    const sparse_matrix* s = nullptr;
    const std::vector<std::size_t>* edge_id = nullptr;   // per CSR entry
    const std::vector<std::pair<std::size_t, std::size_t>>* undirected = nullptr;
    const std::vector<double>* s_per_edge = nullptr;     // S value per undirected edge
};

/// Reverse-mode tape over dense matrices. Forward values are computed
/// eagerly at node construction; backward() fills gradients by a reverse
/// sweep. Shape errors surface at construction time.
class tape {
public:
    using node_id = int;

    node_id constant(dense_matrix value);
    /// Binds a leaf to external storage; repeated binds of the same pointer
    /// return the same node.
    node_id parameter(dense_matrix* p);

    node_id matmul(node_id a, node_id b);
    node_id add(node_id a, node_id b);
    node_id sub(node_id a, node_id b);
    node_id add_row_vector(node_id a, node_id row);  // row is 1 x cols
    node_id hadamard(node_id a, node_id b);
    node_id scale(node_id a, double s);
    node_id apply(node_id a, activation act);
    node_id row_l2_norm(node_id a);                  // (r x c) -> (r x 1)
    node_id concat_cols(node_id a, node_id b);
    node_id masked_spmm(const masked_spmm_context& ctx, node_id edge_scale, node_id x);
    node_id pair_inner(node_id x, std::vector<std::size_t> us, std::vector<std::size_t> vs);
    /// Row b of the result is x[us[b], :] ⊙ x[vs[b], :].
    node_id pair_hadamard(node_id x, std::vector<std::size_t> us, std::vector<std::size_t> vs);
    node_id bce_with_logits(node_id logits, dense_matrix labels);  // scalar mean loss
    node_id weighted_sum(node_id a, dense_matrix weights);         // scalar, for grad checks

    const dense_matrix& value(node_id id) const;
    const dense_matrix& grad(node_id id) const;

    /// Seeds d(root)/d(root) = 1 (root must be 1x1) and back-propagates.
    void backward(node_id root);

    /// Gradient of the last backward() w.r.t. a bound parameter (zeros if the
    /// parameter never entered this tape).
    dense_matrix grad_for(const dense_matrix* p) const;

    /// MLP forward on the tape; records parameter bindings for grad readout.
    node_id apply_mlp(mlp_params& m, node_id x);

private:
    enum class op : int {
        constant, parameter, matmul, add, sub, add_row, hadamard, scale_op, act,
        row_norm, concat, spmm, pair_inner_op, pair_hadamard_op, bce, wsum
    };
    struct node {
        op kind;
        node_id a = -1, b = -1;
        bool requires_grad = false;
        dense_matrix value;
        dense_matrix grad;
        double scalar = 0.0;
        activation act_tag = activation::identity;
        dense_matrix aux;  // labels / weights
        std::vector<std::size_t> idx_u, idx_v;
        masked_spmm_context ctx;
        dense_matrix* bound = nullptr;
    };

    node_id push(node n);
    std::vector<node> nodes_;
    std::map<const dense_matrix*, node_id> param_nodes_;
};

/// Canonical Adam with bias correction. Moment buffers are keyed by the
/// address of the parameter matrix.
class adam_optimizer {
public:
    struct hyperparams {
        double lr = 1e-3;
        double beta1 = 0.9;
        double beta2 = 0.999;
        double eps = 1e-8;
    };

    adam_optimizer() = default;
    explicit adam_optimizer(hyperparams hp) : hp_(hp) {}

    void step(dense_matrix& param, const dense_matrix& grad);
    /// Advances the shared step count once per optimization step; call after
    /// updating every parameter of that step.
    void finish_step() { ++t_; }
    void set_learning_rate(double lr) { hp_.lr = lr; }
    std::int64_t step_count() const { return t_; }
    const hyperparams& params() const { return hp_; }

private:
    struct moments {
        std::vector<double> m, v;
    };
    hyperparams hp_{};
    std::int64_t t_ = 0;  // completed steps
    std::map<const void*, moments> state_;
};

/// Versioned binary checkpoint: magic "PEGW", u32 version, then per record
/// (u32 name length, name bytes, u32 rank, u64 dims, little-endian f64 data).
void write_checkpoint(const std::string& path,
                      const std::vector<std::pair<std::string, const dense_matrix*>>& tensors);
std::map<std::string, dense_matrix> read_checkpoint(const std::string& path);

} // namespace peg::nn

#endif // PEG_AUTODIFF_HPP

#include "peg/autodiff.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "peg/errors.hpp"
#include "peg/kernels.hpp"
#include "peg/spectral.hpp"

namespace peg::nn {

const char* activation_name(activation a) {
    switch (a) {
        case activation::identity: return "identity";
        case activation::relu: return "relu";
        case activation::tanh_fn: return "tanh";
        case activation::sigmoid: return "sigmoid";
    }
    return "identity";
}

activation activation_from_name(const std::string& name) {
    if (name == "identity") return activation::identity;
    if (name == "relu") return activation::relu;
    if (name == "tanh") return activation::tanh_fn;
    if (name == "sigmoid") return activation::sigmoid;
    throw parse_error("unknown activation tag: " + name);
}

double activation_lipschitz(activation a) {
    switch (a) {
        case activation::identity: return 1.0;
        case activation::relu: return 1.0;
        case activation::tanh_fn: return 1.0;
        case activation::sigmoid: return 0.25;
    }
    return 1.0;
}

double apply_activation(activation a, double x) {
    switch (a) {
        case activation::identity: return x;
        case activation::relu: return x > 0.0 ? x : 0.0;
        case activation::tanh_fn: return std::tanh(x);
        case activation::sigmoid: return 1.0 / (1.0 + std::exp(-x));
    }
    return x;
}

double activation_grad(activation a, double x) {
    switch (a) {
        case activation::identity: return 1.0;
        case activation::relu: return x > 0.0 ? 1.0 : 0.0;
        case activation::tanh_fn: {
            const double t = std::tanh(x);
            return 1.0 - t * t;
        }
        case activation::sigmoid: {
            const double s = 1.0 / (1.0 + std::exp(-x));
            return s * (1.0 - s);
        }
    }
    return 1.0;
}

double power_iteration_norm(const dense_matrix& w, int iters, double tol) {
    if (w.empty()) return 0.0;
    const std::size_t n = w.cols();
    std::vector<double> v(n, 1.0 / std::sqrt(static_cast<double>(n)));
    double sigma = 0.0;
    for (int it = 0; it < iters; ++it) {
        // u = W v ; v' = W^T u
        std::vector<double> u(w.rows(), 0.0);
        for (std::size_t i = 0; i < w.rows(); ++i) u[i] = dot(w.row(i), v.data(), n);
        std::vector<double> v2(n, 0.0);
        for (std::size_t i = 0; i < w.rows(); ++i)
            for (std::size_t j = 0; j < n; ++j) v2[j] += w(i, j) * u[i];
        double norm = std::sqrt(dot(v2.data(), v2.data(), n));
        if (norm == 0.0) return 0.0;
        for (double& x : v2) x /= norm;
        const double next = std::sqrt(norm);  // ||W^T W v|| -> sigma^2
        if (it > 0 && std::abs(next - sigma) <= tol * std::max(1.0, sigma)) {
            sigma = next;
            break;
        }
        sigma = next;
        v = std::move(v2);
    }
    return sigma;
}

double mlp_params::declared_lipschitz() const {
    double l = 1.0;
    for (const auto& layer : layers) l *= operator_norm(layer.w) * activation_lipschitz(layer.act);
    return l;
}

void mlp_params::enforce_lipschitz() {
    if (!lipschitz_constrained) return;
    for (auto& layer : layers) {
        const double sigma = power_iteration_norm(layer.w, 20, 1e-4);
        if (sigma > lipschitz_cap && sigma > 0.0) layer.w *= lipschitz_cap / sigma;
    }
}

mlp_params make_mlp(const std::vector<std::size_t>& widths, const std::vector<activation>& acts,
                    std::uint64_t seed) {
    if (widths.size() < 2 || acts.size() != widths.size() - 1)
        throw shape_mismatch_error("make_mlp: widths/activations disagree");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    mlp_params m;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        linear_layer layer;
        layer.w = dense_matrix(widths[l], widths[l + 1]);
        const double scale = 1.0 / std::sqrt(static_cast<double>(widths[l]));
        for (std::size_t i = 0; i < widths[l]; ++i)
            for (std::size_t j = 0; j < widths[l + 1]; ++j) layer.w(i, j) = scale * gauss(rng);
        layer.b = dense_matrix(1, widths[l + 1]);
        layer.act = acts[l];
        m.layers.push_back(std::move(layer));
    }
    return m;
}

dense_matrix mlp_forward(const mlp_params& m, const dense_matrix& x) {
    if (x.cols() != m.in_dim()) throw shape_mismatch_error("mlp_forward: input width mismatch");
    dense_matrix h = x;
    for (const auto& layer : m.layers) {
        dense_matrix z = kernels::matmul(h, layer.w);
        for (std::size_t i = 0; i < z.rows(); ++i)
            for (std::size_t j = 0; j < z.cols(); ++j)
                z(i, j) = apply_activation(layer.act, z(i, j) + layer.b(0, j));
        h = std::move(z);
    }
    return h;
}

// ---------------------------------------------------------------------------
// tape
// ---------------------------------------------------------------------------

tape::node_id tape::push(node n) {
    nodes_.push_back(std::move(n));
    return static_cast<node_id>(nodes_.size() - 1);
}

tape::node_id tape::constant(dense_matrix value) {
    node n;
    n.kind = op::constant;
    n.value = std::move(value);
    n.requires_grad = false;
    return push(std::move(n));
}

tape::node_id tape::parameter(dense_matrix* p) {
    auto it = param_nodes_.find(p);
    if (it != param_nodes_.end()) return it->second;
    node n;
    n.kind = op::parameter;
    n.value = *p;
    n.requires_grad = true;
    n.bound = p;
    node_id id = push(std::move(n));
    param_nodes_[p] = id;
    return id;
}

tape::node_id tape::matmul(node_id a, node_id b) {
    node n;
    n.kind = op::matmul;
    n.a = a;
    n.b = b;
    n.value = kernels::matmul(nodes_[a].value, nodes_[b].value);
    n.requires_grad = nodes_[a].requires_grad || nodes_[b].requires_grad;
    return push(std::move(n));
}

tape::node_id tape::add(node_id a, node_id b) {
    if (!nodes_[a].value.same_shape(nodes_[b].value))
        throw shape_mismatch_error("tape::add: shapes differ");
    node n;
    n.kind = op::add;
    n.a = a;
    n.b = b;
    n.value = nodes_[a].value + nodes_[b].value;
    n.requires_grad = nodes_[a].requires_grad || nodes_[b].requires_grad;
    return push(std::move(n));
}

tape::node_id tape::sub(node_id a, node_id b) {
    if (!nodes_[a].value.same_shape(nodes_[b].value))
        throw shape_mismatch_error("tape::sub: shapes differ");
    node n;
    n.kind = op::sub;
    n.a = a;
    n.b = b;
    n.value = nodes_[a].value - nodes_[b].value;
    n.requires_grad = nodes_[a].requires_grad || nodes_[b].requires_grad;
    return push(std::move(n));
}

tape::node_id tape::add_row_vector(node_id a, node_id row) {
    const auto& av = nodes_[a].value;
    const auto& rv = nodes_[row].value;
    if (rv.rows() != 1 || rv.cols() != av.cols())
        throw shape_mismatch_error("tape::add_row_vector: row must be 1 x cols");
    node n;
    n.kind = op::add_row;
    n.a = a;
    n.b = row;
    n.value = av;
    for (std::size_t i = 0; i < av.rows(); ++i)
        for (std::size_t j = 0; j < av.cols(); ++j) n.value(i, j) += rv(0, j);
    n.requires_grad = nodes_[a].requires_grad || nodes_[row].requires_grad;
    return push(std::move(n));
}

tape::node_id tape::hadamard(node_id a, node_id b) {
    if (!nodes_[a].value.same_shape(nodes_[b].value))
        throw shape_mismatch_error("tape::hadamard: shapes differ");
    node n;
    n.kind = op::hadamard;
    n.a = a;
    n.b = b;
    n.value = nodes_[a].value;
    const auto& bv = nodes_[b].value;
    for (std::size_t k = 0; k < n.value.size(); ++k) n.value.data()[k] *= bv.data()[k];
    n.requires_grad = nodes_[a].requires_grad || nodes_[b].requires_grad;
    return push(std::move(n));
}

tape::node_id tape::scale(node_id a, double s) {
    node n;
    n.kind = op::scale_op;
    n.a = a;
    n.scalar = s;
    n.value = nodes_[a].value * s;
    n.requires_grad = nodes_[a].requires_grad;
    return push(std::move(n));
}

tape::node_id tape::apply(node_id a, activation act) {
    node n;
    n.kind = op::act;
    n.a = a;
    n.act_tag = act;
    n.value = nodes_[a].value;
    for (std::size_t k = 0; k < n.value.size(); ++k)
        n.value.data()[k] = apply_activation(act, nodes_[a].value.data()[k]);
    n.requires_grad = nodes_[a].requires_grad;
    return push(std::move(n));
}

tape::node_id tape::row_l2_norm(node_id a) {
    const auto& av = nodes_[a].value;
    node n;
    n.kind = op::row_norm;
    n.a = a;
    n.value = dense_matrix(av.rows(), 1);
    for (std::size_t i = 0; i < av.rows(); ++i)
        n.value(i, 0) = std::sqrt(dot(av.row(i), av.row(i), av.cols()));
    n.requires_grad = nodes_[a].requires_grad;
    return push(std::move(n));
}

tape::node_id tape::concat_cols(node_id a, node_id b) {
    const auto& av = nodes_[a].value;
    const auto& bv = nodes_[b].value;
    if (av.rows() != bv.rows()) throw shape_mismatch_error("tape::concat_cols: row counts differ");
    node n;
    n.kind = op::concat;
    n.a = a;
    n.b = b;
    n.value = dense_matrix(av.rows(), av.cols() + bv.cols());
    for (std::size_t i = 0; i < av.rows(); ++i) {
        for (std::size_t j = 0; j < av.cols(); ++j) n.value(i, j) = av(i, j);
        for (std::size_t j = 0; j < bv.cols(); ++j) n.value(i, av.cols() + j) = bv(i, j);
    }
    n.requires_grad = nodes_[a].requires_grad || nodes_[b].requires_grad;
    return push(std::move(n));
}

tape::node_id tape::masked_spmm(const masked_spmm_context& ctx, node_id edge_scale, node_id x) {
    const auto& ev = nodes_[edge_scale].value;
    const auto& xv = nodes_[x].value;
    if (ev.cols() != 1 || ev.rows() != ctx.undirected->size())
        throw shape_mismatch_error("tape::masked_spmm: edge_scale must be E x 1");
    if (xv.rows() != ctx.s->n) throw shape_mismatch_error("tape::masked_spmm: x rows != N");
    node n;
    n.kind = op::spmm;
    n.a = edge_scale;
    n.b = x;
    n.ctx = ctx;
    std::vector<double> scales(ev.rows());
    for (std::size_t e = 0; e < scales.size(); ++e) scales[e] = ev(e, 0);
    n.value = kernels::spmm_scaled(*ctx.s, *ctx.edge_id, scales, xv);
    n.requires_grad = nodes_[edge_scale].requires_grad || nodes_[x].requires_grad;
    return push(std::move(n));
}

tape::node_id tape::pair_inner(node_id x, std::vector<std::size_t> us, std::vector<std::size_t> vs) {
    if (us.size() != vs.size()) throw shape_mismatch_error("tape::pair_inner: index lists differ");
    const auto& xv = nodes_[x].value;
    for (std::size_t b = 0; b < us.size(); ++b)
        if (us[b] >= xv.rows() || vs[b] >= xv.rows())
            throw index_out_of_range_error("tape::pair_inner: node index out of range");
    node n;
    n.kind = op::pair_inner_op;
    n.a = x;
    n.idx_u = std::move(us);
    n.idx_v = std::move(vs);
    n.value = dense_matrix(n.idx_u.size(), 1);
    for (std::size_t b = 0; b < n.idx_u.size(); ++b)
        n.value(b, 0) = dot(xv.row(n.idx_u[b]), xv.row(n.idx_v[b]), xv.cols());
    n.requires_grad = nodes_[x].requires_grad;
    return push(std::move(n));
}

tape::node_id tape::pair_hadamard(node_id x, std::vector<std::size_t> us,
                                  std::vector<std::size_t> vs) {
    if (us.size() != vs.size()) throw shape_mismatch_error("tape::pair_hadamard: index lists differ");
    const auto& xv = nodes_[x].value;
    for (std::size_t b = 0; b < us.size(); ++b)
        if (us[b] >= xv.rows() || vs[b] >= xv.rows())
            throw index_out_of_range_error("tape::pair_hadamard: node index out of range");
    node n;
    n.kind = op::pair_hadamard_op;
    n.a = x;
    n.idx_u = std::move(us);
    n.idx_v = std::move(vs);
    n.value = dense_matrix(n.idx_u.size(), xv.cols());
    for (std::size_t b = 0; b < n.idx_u.size(); ++b)
        for (std::size_t j = 0; j < xv.cols(); ++j)
            n.value(b, j) = xv(n.idx_u[b], j) * xv(n.idx_v[b], j);
    n.requires_grad = nodes_[x].requires_grad;
    return push(std::move(n));
}

tape::node_id tape::bce_with_logits(node_id logits, dense_matrix labels) {
    const auto& lv = nodes_[logits].value;
    if (!lv.same_shape(labels)) throw shape_mismatch_error("tape::bce_with_logits: shapes differ");
    if (lv.size() == 0) throw shape_mismatch_error("tape::bce_with_logits: empty input");
    node n;
    n.kind = op::bce;
    n.a = logits;
    n.aux = std::move(labels);
    double loss = 0.0;
    for (std::size_t k = 0; k < lv.size(); ++k) {
        const double x = lv.data()[k];
        const double y = n.aux.data()[k];
        loss += std::max(x, 0.0) - x * y + std::log1p(std::exp(-std::abs(x)));
    }
    n.value = dense_matrix(1, 1);
    n.value(0, 0) = loss / static_cast<double>(lv.size());
    n.requires_grad = nodes_[logits].requires_grad;
    return push(std::move(n));
}

tape::node_id tape::weighted_sum(node_id a, dense_matrix weights) {
    const auto& av = nodes_[a].value;
    if (!av.same_shape(weights)) throw shape_mismatch_error("tape::weighted_sum: shapes differ");
    node n;
    n.kind = op::wsum;
    n.a = a;
    n.aux = std::move(weights);
    double s = 0.0;
    for (std::size_t k = 0; k < av.size(); ++k) s += av.data()[k] * n.aux.data()[k];
    n.value = dense_matrix(1, 1);
    n.value(0, 0) = s;
    n.requires_grad = nodes_[a].requires_grad;
    return push(std::move(n));
}

const dense_matrix& tape::value(node_id id) const { return nodes_[id].value; }
const dense_matrix& tape::grad(node_id id) const { return nodes_[id].grad; }

dense_matrix tape::grad_for(const dense_matrix* p) const {
    auto it = param_nodes_.find(p);
    if (it == param_nodes_.end()) return dense_matrix(p->rows(), p->cols());
    const auto& g = nodes_[it->second].grad;
    if (g.empty()) return dense_matrix(p->rows(), p->cols());
    return g;
}

void tape::backward(node_id root) {
    if (nodes_[root].value.rows() != 1 || nodes_[root].value.cols() != 1)
        throw shape_mismatch_error("tape::backward: root must be 1x1");
    for (auto& n : nodes_) n.grad = dense_matrix(n.value.rows(), n.value.cols());
    nodes_[root].grad(0, 0) = 1.0;

    for (node_id id = root; id >= 0; --id) {
        node& n = nodes_[id];
        if (!n.requires_grad || n.grad.empty()) continue;
        const dense_matrix& gy = n.grad;
        switch (n.kind) {
            case op::constant:
            case op::parameter:
                break;
            case op::matmul: {
                node& na = nodes_[n.a];
                node& nb = nodes_[n.b];
                if (na.requires_grad) na.grad += kernels::matmul_a_bt(gy, nb.value);
                if (nb.requires_grad) nb.grad += kernels::matmul_at_b(na.value, gy);
                break;
            }
            case op::add: {
                if (nodes_[n.a].requires_grad) nodes_[n.a].grad += gy;
                if (nodes_[n.b].requires_grad) nodes_[n.b].grad += gy;
                break;
            }
            case op::sub: {
                if (nodes_[n.a].requires_grad) nodes_[n.a].grad += gy;
                if (nodes_[n.b].requires_grad) nodes_[n.b].grad -= gy;
                break;
            }
            case op::add_row: {
                if (nodes_[n.a].requires_grad) nodes_[n.a].grad += gy;
                if (nodes_[n.b].requires_grad) {
                    dense_matrix& gb = nodes_[n.b].grad;
                    for (std::size_t i = 0; i < gy.rows(); ++i)
                        for (std::size_t j = 0; j < gy.cols(); ++j) gb(0, j) += gy(i, j);
                }
                break;
            }
            case op::hadamard: {
                node& na = nodes_[n.a];
                node& nb = nodes_[n.b];
                if (na.requires_grad)
                    for (std::size_t k = 0; k < gy.size(); ++k)
                        na.grad.data()[k] += gy.data()[k] * nb.value.data()[k];
                if (nb.requires_grad)
                    for (std::size_t k = 0; k < gy.size(); ++k)
                        nb.grad.data()[k] += gy.data()[k] * na.value.data()[k];
                break;
            }
            case op::scale_op: {
                if (nodes_[n.a].requires_grad)
                    for (std::size_t k = 0; k < gy.size(); ++k)
                        nodes_[n.a].grad.data()[k] += n.scalar * gy.data()[k];
                break;
            }
            case op::act: {
                node& na = nodes_[n.a];
                if (na.requires_grad)
                    for (std::size_t k = 0; k < gy.size(); ++k)
                        na.grad.data()[k] +=
                            gy.data()[k] * activation_grad(n.act_tag, na.value.data()[k]);
                break;
            }
            case op::row_norm: {
                node& na = nodes_[n.a];
                if (na.requires_grad) {
                    for (std::size_t i = 0; i < na.value.rows(); ++i) {
                        const double norm = n.value(i, 0);
                        if (norm == 0.0) continue;  // subgradient 0 at the kink
                        const double g = gy(i, 0) / norm;
                        for (std::size_t j = 0; j < na.value.cols(); ++j)
                            na.grad(i, j) += g * na.value(i, j);
                    }
                }
                break;
            }
            case op::concat: {
                node& na = nodes_[n.a];
                node& nb = nodes_[n.b];
                if (na.requires_grad)
                    for (std::size_t i = 0; i < na.value.rows(); ++i)
                        for (std::size_t j = 0; j < na.value.cols(); ++j)
                            na.grad(i, j) += gy(i, j);
                if (nb.requires_grad)
                    for (std::size_t i = 0; i < nb.value.rows(); ++i)
                        for (std::size_t j = 0; j < nb.value.cols(); ++j)
                            nb.grad(i, j) += gy(i, na.value.cols() + j);
                break;
            }
            case op::spmm: {
                node& ne = nodes_[n.a];
                node& nx = nodes_[n.b];
                std::vector<double> scales(ne.value.rows());
                for (std::size_t e = 0; e < scales.size(); ++e) scales[e] = ne.value(e, 0);
                if (nx.requires_grad) {
                    // (S ⊙ Xi) is symmetric, so dX = (S ⊙ Xi) dY
                    nx.grad += kernels::spmm_scaled(*n.ctx.s, *n.ctx.edge_id, scales, gy);
                }
                if (ne.requires_grad) {
                    const auto& und = *n.ctx.undirected;
                    const auto& sval = *n.ctx.s_per_edge;
                    const std::size_t f = nx.value.cols();
                    dense_matrix& ge = ne.grad;
#pragma omp parallel for schedule(static) if (und.size() > 2047)
                    for (long long ee = 0; ee < static_cast<long long>(und.size()); ++ee) {
                        const std::size_t e = static_cast<std::size_t>(ee);
                        const auto [u, v] = und[e];
                        double acc = sval[e] * dot(nx.value.row(v), gy.row(u), f);
                        if (u != v) acc += sval[e] * dot(nx.value.row(u), gy.row(v), f);
                        ge(e, 0) += acc;
                    }
                }
                break;
            }
            case op::pair_inner_op: {
                node& nx = nodes_[n.a];
                if (nx.requires_grad) {
                    dense_matrix& gx = nx.grad;
                    const std::size_t f = nx.value.cols();
                    for (std::size_t b = 0; b < n.idx_u.size(); ++b) {
                        const double g = gy(b, 0);
                        const std::size_t u = n.idx_u[b], v = n.idx_v[b];
                        for (std::size_t j = 0; j < f; ++j) {
                            gx(u, j) += g * nx.value(v, j);
                            gx(v, j) += g * nx.value(u, j);
                        }
                    }
                }
                break;
            }
            case op::pair_hadamard_op: {
                node& nx = nodes_[n.a];
                if (nx.requires_grad) {
                    dense_matrix& gx = nx.grad;
                    for (std::size_t b = 0; b < n.idx_u.size(); ++b) {
                        const std::size_t u = n.idx_u[b], v = n.idx_v[b];
                        for (std::size_t j = 0; j < nx.value.cols(); ++j) {
                            const double g = gy(b, j);
                            gx(u, j) += g * nx.value(v, j);
                            gx(v, j) += g * nx.value(u, j);
                        }
                    }
                }
                break;
            }
            case op::bce: {
                node& nl = nodes_[n.a];
                if (nl.requires_grad) {
                    const double g = gy(0, 0) / static_cast<double>(nl.value.size());
                    for (std::size_t k = 0; k < nl.value.size(); ++k) {
                        const double x = nl.value.data()[k];
                        const double s = 1.0 / (1.0 + std::exp(-x));
                        nl.grad.data()[k] += g * (s - n.aux.data()[k]);
                    }
                }
                break;
            }
            case op::wsum: {
                node& na = nodes_[n.a];
                if (na.requires_grad) {
                    const double g = gy(0, 0);
                    for (std::size_t k = 0; k < na.value.size(); ++k)
                        na.grad.data()[k] += g * n.aux.data()[k];
                }
                break;
            }
        }
    }
}

tape::node_id tape::apply_mlp(mlp_params& m, node_id x) {
    if (nodes_[x].value.cols() != m.in_dim())
        throw shape_mismatch_error("tape::apply_mlp: input width mismatch");
    node_id h = x;
    for (auto& layer : m.layers) {
        node_id w = parameter(&layer.w);
        node_id b = parameter(&layer.b);
        h = add_row_vector(matmul(h, w), b);
        if (layer.act != activation::identity) h = apply(h, layer.act);
    }
    return h;
}

void adam_optimizer::step(dense_matrix& param, const dense_matrix& grad) {
    if (!param.same_shape(grad)) throw shape_mismatch_error("adam: parameter/gradient shapes differ");
    moments& mo = state_[&param];
    if (mo.m.empty()) {
        mo.m.assign(param.size(), 0.0);
        mo.v.assign(param.size(), 0.0);
    }
    const double t = static_cast<double>(t_ + 1);
    const double bc1 = 1.0 - std::pow(hp_.beta1, t);
    const double bc2 = 1.0 - std::pow(hp_.beta2, t);
    for (std::size_t k = 0; k < param.size(); ++k) {
        const double g = grad.data()[k];
        mo.m[k] = hp_.beta1 * mo.m[k] + (1.0 - hp_.beta1) * g;
        mo.v[k] = hp_.beta2 * mo.v[k] + (1.0 - hp_.beta2) * g * g;
        const double mhat = mo.m[k] / bc1;
        const double vhat = mo.v[k] / bc2;
        param.data()[k] -= hp_.lr * mhat / (std::sqrt(vhat) + hp_.eps);
    }
}

// ---------------------------------------------------------------------------
// checkpoint io
// ---------------------------------------------------------------------------

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 8);
}

void put_f64(std::ostream& os, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, 8);
    put_u64(os, bits);
}

bool get_u32(std::istream& is, std::uint32_t& v) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) return false;
    v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return true;
}

bool get_u64(std::istream& is, std::uint64_t& v) {
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8)) return false;
    v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return true;
}

} // namespace

void write_checkpoint(const std::string& path,
                      const std::vector<std::pair<std::string, const dense_matrix*>>& tensors) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw io_error("write_checkpoint: cannot open " + path);
    os.write("PEGW", 4);
    put_u32(os, 1);
    for (const auto& [name, mat] : tensors) {
        put_u32(os, static_cast<std::uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        put_u32(os, 2);
        put_u64(os, mat->rows());
        put_u64(os, mat->cols());
        for (std::size_t k = 0; k < mat->size(); ++k) put_f64(os, mat->data()[k]);
    }
    if (!os) throw io_error("write_checkpoint: write failed for " + path);
}

std::map<std::string, dense_matrix> read_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw io_error("read_checkpoint: cannot open " + path);
    char magic[4];
    if (!is.read(magic, 4) || std::string(magic, 4) != "PEGW")
        throw parse_error("read_checkpoint: bad magic in " + path);
    std::uint32_t version = 0;
    if (!get_u32(is, version) || version != 1)
        throw parse_error("read_checkpoint: unsupported version");
    std::map<std::string, dense_matrix> out;
    for (;;) {
        std::uint32_t name_len = 0;
        if (!get_u32(is, name_len)) break;  // clean EOF
        std::string name(name_len, '\0');
        if (!is.read(name.data(), name_len)) throw parse_error("read_checkpoint: truncated name");
        std::uint32_t rank = 0;
        if (!get_u32(is, rank) || rank != 2)
            throw parse_error("read_checkpoint: only rank-2 tensors supported");
        std::uint64_t rows = 0, cols = 0;
        if (!get_u64(is, rows) || !get_u64(is, cols))
            throw parse_error("read_checkpoint: truncated dims");
        dense_matrix m(rows, cols);
        for (std::size_t k = 0; k < m.size(); ++k) {
            std::uint64_t bits = 0;
            if (!get_u64(is, bits)) throw parse_error("read_checkpoint: truncated data");
            double d;
            std::memcpy(&d, &bits, 8);
            m.data()[k] = d;
        }
        out.emplace(std::move(name), std::move(m));
    }
    return out;
}

} // namespace peg::nn

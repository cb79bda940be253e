#pragma once

// Small deterministic feed-forward engine with splittable forward passes.
// Scalar type is a template parameter: the product path runs float, the
// gradient-check oracle instantiates double.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "gradapt/common.hpp"
#include "gradapt/mat.hpp"

namespace gradapt {

enum class Act { identity, relu, tanh };

inline const char* act_name(Act a) {
    switch (a) {
        case Act::identity: return "identity";
        case Act::relu: return "relu";
        case Act::tanh: return "tanh";
    }
    return "identity";
}

inline Act act_from_name(const std::string& s) {
    if (s == "identity") return Act::identity;
    if (s == "relu") return Act::relu;
    if (s == "tanh") return Act::tanh;
    throw ConfigError("unknown activation tag: " + s);
}

template <typename T>
struct DenseLayer {
    Mat<T> w;           // out_dim x in_dim, row-major
    std::vector<T> b;   // out_dim
    Act act = Act::identity;

    int in_dim() const { return w.cols; }
    int out_dim() const { return w.rows; }
};

// A feed-forward network plus a snapshot of its parameters taken at
// construction (or at a designated reset point). The snapshot anchors the
// proximal regularizer.
template <typename T>
struct Network {
    std::vector<DenseLayer<T>> layers;
    std::vector<DenseLayer<T>> init_snapshot;

    int num_layers() const { return static_cast<int>(layers.size()); }
    int input_dim() const { return layers.empty() ? 0 : layers.front().in_dim(); }
    int output_dim() const { return layers.empty() ? 0 : layers.back().out_dim(); }

    // Width of the feature space at split point L (L=0 is the input space).
    int feature_dim(int L) const {
        if (L < 0 || L > num_layers()) throw ShapeError("split point out of range");
        return L == 0 ? input_dim() : layers[L - 1].out_dim();
    }
};

using NetworkF = Network<float>;

// Split point: layer index in [0, num_layers]; 0 denotes the raw input space.
struct SplitPoint {
    int layer = 0;
};

template <typename T>
void check_split(const Network<T>& net, int L) {
    if (L < 0 || L > net.num_layers()) throw ShapeError("split point out of range");
}

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

// Parameters drawn from scaled uniform fan-in init: w ~ U(-1/sqrt(in), 1/sqrt(in)),
// biases zero. Identical seed gives identical parameters.
template <typename T = float>
Network<T> init_network(const std::vector<int>& dims, const std::vector<Act>& acts, std::uint64_t seed) {
    if (dims.size() < 2) throw ConfigError("invalid network spec: need at least one layer");
    for (int d : dims)
        if (d < 1) throw ConfigError("invalid network spec: nonpositive dimension");
    if (acts.size() != dims.size() - 1) throw ConfigError("invalid network spec: one activation tag per layer required");

    Network<T> net;
    Rng rng(seed);
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        DenseLayer<T> layer;
        layer.w = Mat<T>(dims[i + 1], dims[i]);
        layer.b.assign(static_cast<std::size_t>(dims[i + 1]), T(0));
        layer.act = acts[i];
        const double scale = 1.0 / std::sqrt(static_cast<double>(dims[i]));
        std::uniform_real_distribution<double> dist(-scale, scale);
        for (T& v : layer.w.data) v = static_cast<T>(dist(rng));
        net.layers.push_back(std::move(layer));
    }
    net.init_snapshot = net.layers;
    return net;
}

// Convenience: ReLU (or given) hidden activations, identity output.
template <typename T = float>
Network<T> init_mlp(const std::vector<int>& dims, std::uint64_t seed, Act hidden = Act::relu) {
    if (dims.size() < 2) throw ConfigError("invalid network spec: need at least one layer");
    std::vector<Act> acts(dims.size() - 1, hidden);
    acts.back() = Act::identity;
    return init_network<T>(dims, acts, seed);
}

template <typename T>
Network<T> clone_network(const Network<T>& net) {
    return net;  // deep copy by value semantics
}

// Re-anchor the proximal regularizer at the current parameters.
template <typename T>
void reset_init_snapshot(Network<T>& net) {
    net.init_snapshot = net.layers;
}

template <typename T>
bool networks_equal(const Network<T>& a, const Network<T>& b) {
    if (a.num_layers() != b.num_layers()) return false;
    for (int i = 0; i < a.num_layers(); ++i) {
        if (a.layers[i].act != b.layers[i].act) return false;
        if (a.layers[i].w.rows != b.layers[i].w.rows || a.layers[i].w.cols != b.layers[i].w.cols) return false;
        if (a.layers[i].w.data != b.layers[i].w.data) return false;
        if (a.layers[i].b != b.layers[i].b) return false;
    }
    return true;
}

// Flat parameter view (weights then bias, layer by layer); used by the
// finite-difference oracle and the checkpoint tests.
template <typename T>
std::size_t param_count(const Network<T>& net) {
    std::size_t n = 0;
    for (const auto& l : net.layers) n += l.w.size() + l.b.size();
    return n;
}

template <typename T>
T get_param(const Network<T>& net, std::size_t idx) {
    for (const auto& l : net.layers) {
        if (idx < l.w.size()) return l.w.data[idx];
        idx -= l.w.size();
        if (idx < l.b.size()) return l.b[idx];
        idx -= l.b.size();
    }
    throw ShapeError("parameter index out of range");
}

template <typename T>
void set_param(Network<T>& net, std::size_t idx, T v) {
    for (auto& l : net.layers) {
        if (idx < l.w.size()) { l.w.data[idx] = v; return; }
        idx -= l.w.size();
        if (idx < l.b.size()) { l.b[idx] = v; return; }
        idx -= l.b.size();
    }
    throw ShapeError("parameter index out of range");
}

template <typename T>
double param_distance_to_init_sq(const Network<T>& net) {
    double d = 0;
    for (int i = 0; i < net.num_layers(); ++i) {
        const auto& l = net.layers[i];
        const auto& s = net.init_snapshot[i];
        for (std::size_t j = 0; j < l.w.size(); ++j) {
            const double diff = static_cast<double>(l.w.data[j]) - static_cast<double>(s.w.data[j]);
            d += diff * diff;
        }
        for (std::size_t j = 0; j < l.b.size(); ++j) {
            const double diff = static_cast<double>(l.b[j]) - static_cast<double>(s.b[j]);
            d += diff * diff;
        }
    }
    return d;
}

// ---------------------------------------------------------------------------
// Forward passes
// ---------------------------------------------------------------------------

template <typename T>
struct ForwardCache {
    int from = 0;
    int to = 0;
    std::vector<Mat<T>> pre;  // pre-activations of layers [from, to)
    std::vector<Mat<T>> act;  // act[0] = input, act[i+1] = output of layer from+i
};

namespace detail {

template <typename T>
void apply_act(Act a, Mat<T>& m) {
    switch (a) {
        case Act::identity: break;
        case Act::relu:
            for (T& v : m.data) v = v > T(0) ? v : T(0);
            break;
        case Act::tanh:
            for (T& v : m.data) v = std::tanh(v);
            break;
    }
}

template <typename T>
Mat<T> dense_forward(const DenseLayer<T>& l, const Mat<T>& x) {
    Mat<T> out(x.rows, l.out_dim());
    for (int r = 0; r < x.rows; ++r) {
        const T* xr = x.row(r);
        T* orow = out.row(r);
        for (int o = 0; o < l.out_dim(); ++o) {
            const T* wr = l.w.row(o);
            T acc = l.b[o];
            for (int i = 0; i < l.in_dim(); ++i) acc += wr[i] * xr[i];
            orow[o] = acc;
        }
    }
    return out;
}

}  // namespace detail

// Runs layers [from, to); with from=0, to=num_layers this is the full map.
template <typename T>
Mat<T> forward_range(const Network<T>& net, const Mat<T>& x, int from, int to, ForwardCache<T>* cache = nullptr) {
    check_split(net, from);
    check_split(net, to);
    if (from > to) throw ShapeError("forward range reversed");
    if (x.cols != net.feature_dim(from)) throw ShapeError("input width does not match feature width at split point");

    if (cache) {
        cache->from = from;
        cache->to = to;
        cache->pre.clear();
        cache->act.clear();
        cache->act.push_back(x);
    }
    Mat<T> cur = x;
    for (int li = from; li < to; ++li) {
        Mat<T> pre = detail::dense_forward(net.layers[li], cur);
        if (cache) cache->pre.push_back(pre);
        detail::apply_act(net.layers[li].act, pre);
        cur = std::move(pre);
        if (cache) cache->act.push_back(cur);
    }
    return cur;
}

// Activations after layer L; L=0 returns the input unchanged.
template <typename T>
Mat<T> forward_to_layer(const Network<T>& net, const Mat<T>& x, int L) {
    check_split(net, L);
    return forward_range(net, x, 0, L);
}

// Logits from features at layer L; L=num_layers returns z unchanged.
template <typename T>
Mat<T> forward_from_layer(const Network<T>& net, const Mat<T>& z, int L) {
    check_split(net, L);
    return forward_range(net, z, L, net.num_layers());
}

template <typename T>
Mat<T> forward_full(const Network<T>& net, const Mat<T>& x) {
    return forward_range(net, x, 0, net.num_layers());
}

// ---------------------------------------------------------------------------
// Loss
// ---------------------------------------------------------------------------

// Softmax cross-entropy against target distributions (soft or one-hot),
// mean over the batch. Accumulates in double; gradient already divided by m.
template <typename T>
double softmax_cross_entropy(const Mat<T>& logits, const Mat<T>& targets, Mat<T>* dlogits = nullptr) {
    if (!logits.same_shape(targets)) throw ShapeError("logits/targets shape mismatch");
    if (logits.cols < 1 || logits.rows < 1) throw ShapeError("empty logits batch");
    const int m = logits.rows;
    const int k = logits.cols;
    if (dlogits) *dlogits = Mat<T>(m, k);
    double loss = 0;
    std::vector<double> p(static_cast<std::size_t>(k));
    for (int r = 0; r < m; ++r) {
        const T* lr = logits.row(r);
        const T* tr = targets.row(r);
        double mx = static_cast<double>(lr[0]);
        for (int j = 1; j < k; ++j) mx = std::max(mx, static_cast<double>(lr[j]));
        double sum = 0;
        for (int j = 0; j < k; ++j) {
            p[j] = std::exp(static_cast<double>(lr[j]) - mx);
            sum += p[j];
        }
        const double log_sum = std::log(sum) + mx;
        for (int j = 0; j < k; ++j) {
            p[j] /= sum;
            loss -= static_cast<double>(tr[j]) * (static_cast<double>(lr[j]) - log_sum);
        }
        if (dlogits) {
            T* dr = dlogits->row(r);
            for (int j = 0; j < k; ++j) dr[j] = static_cast<T>((p[j] - static_cast<double>(tr[j])) / m);
        }
    }
    return loss / m;
}

// ---------------------------------------------------------------------------
// Gradients
// ---------------------------------------------------------------------------

template <typename T>
struct Grads {
    std::vector<Mat<T>> dw;
    std::vector<std::vector<T>> db;
};

template <typename T>
Grads<T> make_grads(const Network<T>& net) {
    Grads<T> g;
    for (const auto& l : net.layers) {
        g.dw.emplace_back(l.w.rows, l.w.cols);
        g.db.emplace_back(l.b.size(), T(0));
    }
    return g;
}

namespace detail {

// Backprop through the cached range, accumulating parameter gradients.
// Returns dL/d(range input) when want_d_input is set (needed when a prefix
// sits below the differentiated range); otherwise the return value is empty.
template <typename T>
Mat<T> backward_range(const Network<T>& net, const ForwardCache<T>& cache, const Mat<T>& d_out, Grads<T>& grads,
                      bool want_d_input = false) {
    Mat<T> delta = d_out;
    for (int li = cache.to - 1; li >= cache.from; --li) {
        const DenseLayer<T>& l = net.layers[li];
        const int ci = li - cache.from;  // index within the cache
        const Mat<T>& pre = cache.pre[ci];
        const Mat<T>& out = cache.act[ci + 1];
        const Mat<T>& in = cache.act[ci];

        // delta <- dL/d(pre-activation)
        switch (l.act) {
            case Act::identity: break;
            case Act::relu:
                for (std::size_t j = 0; j < delta.data.size(); ++j)
                    if (pre.data[j] <= T(0)) delta.data[j] = T(0);
                break;
            case Act::tanh:
                for (std::size_t j = 0; j < delta.data.size(); ++j)
                    delta.data[j] *= T(1) - out.data[j] * out.data[j];
                break;
        }

        Mat<T>& dw = grads.dw[li];
        std::vector<T>& db = grads.db[li];
        for (int r = 0; r < delta.rows; ++r) {
            const T* dr = delta.row(r);
            const T* ir = in.row(r);
            for (int o = 0; o < l.out_dim(); ++o) {
                const T c = dr[o];
                if (c == T(0)) continue;
                T* dwr = dw.row(o);
                for (int i = 0; i < l.in_dim(); ++i) dwr[i] += c * ir[i];
                db[o] += c;
            }
        }

        if (li == cache.from && !want_d_input) return Mat<T>();
        Mat<T> d_in(delta.rows, l.in_dim());
        for (int r = 0; r < delta.rows; ++r) {
            const T* dr = delta.row(r);
            T* dir = d_in.row(r);
            for (int o = 0; o < l.out_dim(); ++o) {
                const T c = dr[o];
                if (c == T(0)) continue;
                const T* wr = l.w.row(o);
                for (int i = 0; i < l.in_dim(); ++i) dir[i] += c * wr[i];
            }
        }
        delta = std::move(d_in);
    }
    return delta;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Regularizers and optimizers
// ---------------------------------------------------------------------------

// weight_decay * ||params||^2 + proximal_weight * ||params - init_snapshot||^2,
// applied to the parameters trained by the step.
struct RegularizerConfig {
    double weight_decay = 0.0;
    double proximal_weight = 0.0;
};

enum class OptKind { sgd_momentum, adam };

struct OptimizerConfig {
    OptKind kind = OptKind::sgd_momentum;
    double learning_rate = 0.01;
    double momentum = 0.9;   // sgd_momentum
    double beta1 = 0.9;      // adam
    double beta2 = 0.999;    // adam
    double epsilon = 1e-8;   // adam
};

template <typename T>
struct OptimizerState {
    OptimizerConfig cfg;
    long step_count = 0;
    // first/second moment (adam) or velocity (sgd, first only)
    std::vector<Mat<T>> mw, vw;
    std::vector<std::vector<T>> mb, vb;
};

template <typename T>
OptimizerState<T> make_optimizer(const Network<T>& net, const OptimizerConfig& cfg) {
    if (cfg.learning_rate <= 0) throw ConfigError("learning rate must be positive");
    if (cfg.momentum < 0 || cfg.momentum >= 1) throw ConfigError("momentum must lie in [0,1)");
    if (cfg.beta1 < 0 || cfg.beta1 >= 1 || cfg.beta2 < 0 || cfg.beta2 >= 1)
        throw ConfigError("adam betas must lie in [0,1)");
    OptimizerState<T> st;
    st.cfg = cfg;
    for (const auto& l : net.layers) {
        st.mw.emplace_back(l.w.rows, l.w.cols);
        st.vw.emplace_back(l.w.rows, l.w.cols);
        st.mb.emplace_back(l.b.size(), T(0));
        st.vb.emplace_back(l.b.size(), T(0));
    }
    return st;
}

namespace detail {

// Regularizer contribution over layers [from, n): loss value plus gradient.
template <typename T>
double add_reg(const Network<T>& net, const RegularizerConfig& reg, int from, Grads<T>& grads) {
    double loss = 0;
    if (reg.weight_decay == 0 && reg.proximal_weight == 0) return 0;
    for (int li = from; li < net.num_layers(); ++li) {
        const auto& l = net.layers[li];
        const auto& s = net.init_snapshot[li];
        for (std::size_t j = 0; j < l.w.size(); ++j) {
            const double p = static_cast<double>(l.w.data[j]);
            const double p0 = static_cast<double>(s.w.data[j]);
            loss += reg.weight_decay * p * p + reg.proximal_weight * (p - p0) * (p - p0);
            grads.dw[li].data[j] += static_cast<T>(2 * reg.weight_decay * p + 2 * reg.proximal_weight * (p - p0));
        }
        for (std::size_t j = 0; j < l.b.size(); ++j) {
            const double p = static_cast<double>(l.b[j]);
            const double p0 = static_cast<double>(s.b[j]);
            loss += reg.weight_decay * p * p + reg.proximal_weight * (p - p0) * (p - p0);
            grads.db[li][j] += static_cast<T>(2 * reg.weight_decay * p + 2 * reg.proximal_weight * (p - p0));
        }
    }
    return loss;
}

template <typename T>
void apply_update(Network<T>& net, OptimizerState<T>& opt, const Grads<T>& grads, int from) {
    opt.step_count += 1;
    const auto& cfg = opt.cfg;
    const T lr = static_cast<T>(cfg.learning_rate);
    if (cfg.kind == OptKind::sgd_momentum) {
        const T mu = static_cast<T>(cfg.momentum);
        for (int li = from; li < net.num_layers(); ++li) {
            auto& l = net.layers[li];
            for (std::size_t j = 0; j < l.w.size(); ++j) {
                T& v = opt.mw[li].data[j];
                v = mu * v + grads.dw[li].data[j];
                l.w.data[j] -= lr * v;
            }
            for (std::size_t j = 0; j < l.b.size(); ++j) {
                T& v = opt.mb[li][j];
                v = mu * v + grads.db[li][j];
                l.b[j] -= lr * v;
            }
        }
    } else {
        const double b1 = cfg.beta1, b2 = cfg.beta2;
        const double c1 = 1.0 - std::pow(b1, static_cast<double>(opt.step_count));
        const double c2 = 1.0 - std::pow(b2, static_cast<double>(opt.step_count));
        const double eps = cfg.epsilon;
        for (int li = from; li < net.num_layers(); ++li) {
            auto& l = net.layers[li];
            for (std::size_t j = 0; j < l.w.size(); ++j) {
                const double g = static_cast<double>(grads.dw[li].data[j]);
                opt.mw[li].data[j] = static_cast<T>(b1 * opt.mw[li].data[j] + (1 - b1) * g);
                opt.vw[li].data[j] = static_cast<T>(b2 * opt.vw[li].data[j] + (1 - b2) * g * g);
                const double mhat = static_cast<double>(opt.mw[li].data[j]) / c1;
                const double vhat = static_cast<double>(opt.vw[li].data[j]) / c2;
                l.w.data[j] -= static_cast<T>(cfg.learning_rate * mhat / (std::sqrt(vhat) + eps));
            }
            for (std::size_t j = 0; j < l.b.size(); ++j) {
                const double g = static_cast<double>(grads.db[li][j]);
                opt.mb[li][j] = static_cast<T>(b1 * opt.mb[li][j] + (1 - b1) * g);
                opt.vb[li][j] = static_cast<T>(b2 * opt.vb[li][j] + (1 - b2) * g * g);
                const double mhat = static_cast<double>(opt.mb[li][j]) / c1;
                const double vhat = static_cast<double>(opt.vb[li][j]) / c2;
                l.b[j] -= static_cast<T>(cfg.learning_rate * mhat / (std::sqrt(vhat) + eps));
            }
        }
    }
}

inline void check_loss_finite(double loss) {
    if (!std::isfinite(loss)) throw NumericError("non-finite training loss");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Training steps. Each returns the pre-step objective (data loss plus
// regularizers over the parameters the step trains).
// ---------------------------------------------------------------------------

// One step on raw inputs; gradients flow through every layer.
template <typename T>
double train_step(Network<T>& net, OptimizerState<T>& opt, const RegularizerConfig& reg, const Mat<T>& x,
                  const Mat<T>& targets) {
    ForwardCache<T> cache;
    Mat<T> logits = forward_range(net, x, 0, net.num_layers(), &cache);
    Mat<T> dlogits;
    double loss = softmax_cross_entropy(logits, targets, &dlogits);
    Grads<T> grads = make_grads(net);
    detail::backward_range(net, cache, dlogits, grads);
    loss += detail::add_reg(net, reg, 0, grads);
    detail::check_loss_finite(loss);
    detail::apply_update(net, opt, grads, 0);
    return loss;
}

// One step on a feature batch at split point L; only suffix parameters train.
template <typename T>
double train_step_features(Network<T>& net, OptimizerState<T>& opt, const RegularizerConfig& reg, const Mat<T>& z,
                           const Mat<T>& targets, int L) {
    check_split(net, L);
    if (z.cols != net.feature_dim(L)) throw ShapeError("feature width does not match split point");
    ForwardCache<T> cache;
    Mat<T> logits = forward_range(net, z, L, net.num_layers(), &cache);
    Mat<T> dlogits;
    double loss = softmax_cross_entropy(logits, targets, &dlogits);
    Grads<T> grads = make_grads(net);
    detail::backward_range(net, cache, dlogits, grads);
    loss += detail::add_reg(net, reg, L, grads);
    detail::check_loss_finite(loss);
    detail::apply_update(net, opt, grads, L);
    return loss;
}

// One step on zhat = scale_a * prefix(x_a) + constant_part, the interpolated
// feature batch of the adaptation loop. With stop_gradient the prefix is a
// leaf and only the suffix trains; otherwise gradients flow to the prefix
// scaled by scale_a.
template <typename T>
double train_step_blend(Network<T>& net, OptimizerState<T>& opt, const RegularizerConfig& reg, const Mat<T>& x_a,
                        const Mat<T>& constant_part, T scale_a, const Mat<T>& targets, int L, bool stop_gradient) {
    check_split(net, L);
    ForwardCache<T> prefix_cache;
    Mat<T> z_a = forward_range(net, x_a, 0, L, &prefix_cache);
    if (!z_a.same_shape(constant_part)) throw ShapeError("blend operands shape mismatch");

    Mat<T> zhat = z_a;
    for (std::size_t j = 0; j < zhat.data.size(); ++j)
        zhat.data[j] = scale_a * zhat.data[j] + constant_part.data[j];

    if (stop_gradient) return train_step_features(net, opt, reg, zhat, targets, L);

    ForwardCache<T> suffix_cache;
    Mat<T> logits = forward_range(net, zhat, L, net.num_layers(), &suffix_cache);
    Mat<T> dlogits;
    double loss = softmax_cross_entropy(logits, targets, &dlogits);
    Grads<T> grads = make_grads(net);
    Mat<T> dzhat = detail::backward_range(net, suffix_cache, dlogits, grads, true);
    for (T& v : dzhat.data) v *= scale_a;
    if (L > 0) detail::backward_range(net, prefix_cache, dzhat, grads);
    loss += detail::add_reg(net, reg, 0, grads);
    detail::check_loss_finite(loss);
    detail::apply_update(net, opt, grads, 0);
    return loss;
}

// One step on zhat = (1-lambda) * prefix(x_a) + lambda * prefix(x_b); both
// arms run the same prefix, so their gradients add. Used by manifold mixup.
template <typename T>
double train_step_pair(Network<T>& net, OptimizerState<T>& opt, const RegularizerConfig& reg, const Mat<T>& x_a,
                       const Mat<T>& x_b, T lambda, const Mat<T>& targets, int L) {
    check_split(net, L);
    if (!x_a.same_shape(x_b)) throw ShapeError("pair operands shape mismatch");
    ForwardCache<T> cache_a, cache_b;
    Mat<T> z_a = forward_range(net, x_a, 0, L, &cache_a);
    Mat<T> z_b = forward_range(net, x_b, 0, L, &cache_b);

    Mat<T> zhat = z_a;
    for (std::size_t j = 0; j < zhat.data.size(); ++j)
        zhat.data[j] = (T(1) - lambda) * zhat.data[j] + lambda * z_b.data[j];

    ForwardCache<T> suffix_cache;
    Mat<T> logits = forward_range(net, zhat, L, net.num_layers(), &suffix_cache);
    Mat<T> dlogits;
    double loss = softmax_cross_entropy(logits, targets, &dlogits);
    Grads<T> grads = make_grads(net);
    Mat<T> dzhat = detail::backward_range(net, suffix_cache, dlogits, grads, true);
    if (L > 0) {
        Mat<T> d_a = dzhat;
        for (T& v : d_a.data) v *= (T(1) - lambda);
        Mat<T> d_b = std::move(dzhat);
        for (T& v : d_b.data) v *= lambda;
        detail::backward_range(net, cache_a, d_a, grads);
        detail::backward_range(net, cache_b, d_b, grads);
    }
    loss += detail::add_reg(net, reg, 0, grads);
    detail::check_loss_finite(loss);
    detail::apply_update(net, opt, grads, 0);
    return loss;
}

}  // namespace gradapt

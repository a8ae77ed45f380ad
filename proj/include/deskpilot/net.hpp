#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "deskpilot/image.hpp"
#include "deskpilot/rng.hpp"
#include "deskpilot/stream.hpp"

namespace deskpilot {

// Numeric blow-up (NaN/inf loss or gradient) — distinct from data errors so
// callers can map it to its own failure path.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Minimal contiguous tensor; shape is (n, h, w, c) for rasters or
// (n, features) for flat activations.
template <typename T>
struct Tensor {
    std::vector<long long> shape;
    std::vector<T> data;

    long long numel() const {
        long long p = 1;
        for (auto d : shape) p *= d;
        return p;
    }
    void validate() const {
        if (numel() != static_cast<long long>(data.size()))
            throw std::invalid_argument("Tensor: data length != product of shape");
    }
};

struct ConvSpec {
    int kernel = 0;
    int stride = 0;
    int filters = 0;
};

// Architecture description. Convolutions use valid (no) padding, so each
// spatial dim maps h -> floor((h - k)/s) + 1; activations are ReLU except
// the linear output unit. Dropout entries pair with fc layers; only the
// hidden ones are active (the output layer is never dropped).
struct NetSpec {
    int input_h = 64;
    int input_w = 64;
    int input_c = 3;
    std::vector<ConvSpec> conv;
    std::vector<int> fc;
    std::vector<double> dropout;

    static NetSpec default_spec() {
        NetSpec s;
        s.conv = {{11, 5, 8}, {5, 2, 16}, {3, 2, 24}};
        s.fc = {64, 32, 1};
        s.dropout = {0.25, 0.25, 0.25};
        return s;
    }

    struct Dims {
        std::vector<int> h, w, c;  // per conv layer output
        int flatten = 0;
    };

    Dims dims() const {
        if (input_h < 1 || input_w < 1 || input_c < 1)
            throw std::invalid_argument("NetSpec: bad input dims");
        if (fc.empty()) throw std::invalid_argument("NetSpec: at least one fc layer required");
        if (!dropout.empty() && dropout.size() != fc.size())
            throw std::invalid_argument("NetSpec: dropout list must match fc list");
        for (double p : dropout)
            if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("NetSpec: dropout p in [0,1)");
        Dims d;
        int h = input_h, w = input_w, c = input_c;
        for (const auto& l : conv) {
            if (l.kernel < 1 || l.stride < 1 || l.filters < 1)
                throw std::invalid_argument("NetSpec: bad conv layer");
            if (l.kernel > h || l.kernel > w)
                throw std::invalid_argument("NetSpec: kernel larger than its input");
            h = (h - l.kernel) / l.stride + 1;
            w = (w - l.kernel) / l.stride + 1;
            c = l.filters;
            d.h.push_back(h);
            d.w.push_back(w);
            d.c.push_back(c);
        }
        for (int u : fc)
            if (u < 1) throw std::invalid_argument("NetSpec: bad fc layer");
        d.flatten = h * w * c;
        return d;
    }

    int layer_count() const { return static_cast<int>(conv.size() + fc.size()); }

    long long param_count() const {
        Dims d = dims();
        long long total = 0;
        int c = input_c;
        for (const auto& l : conv) {
            total += static_cast<long long>(l.kernel) * l.kernel * c * l.filters + l.filters;
            c = l.filters;
        }
        int in = d.flatten;
        for (int u : fc) {
            total += static_cast<long long>(in) * u + u;
            in = u;
        }
        return total;
    }

    double dropout_p(std::size_t fc_index) const {
        return fc_index < dropout.size() ? dropout[fc_index] : 0.0;
    }
};

// Learnable state: conv layers first, then fc layers. Conv weights are laid
// out [ky][kx][c_in][filter]; fc weights [in][out].
template <typename T>
struct NetParamsT {
    struct Layer {
        std::vector<T> w;
        std::vector<T> b;
    };
    std::vector<Layer> layers;
};

using NetParams = NetParamsT<float>;

// Samples count values from U(-L, L), L = sqrt(6 / (fan_in + fan_out)).
template <typename T>
std::vector<T> glorot_uniform_init(int fan_in, int fan_out, std::size_t count, Rng& rng) {
    if (fan_in < 1 || fan_out < 1) throw std::invalid_argument("glorot_uniform_init: fans >= 1");
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    std::vector<T> out(count);
    for (auto& v : out) v = static_cast<T>(rng.uniform(-limit, limit));
    return out;
}

// Glorot-uniform weights, zero biases.
template <typename T>
NetParamsT<T> init_params(const NetSpec& spec, Rng& rng) {
    const auto d = spec.dims();
    NetParamsT<T> p;
    int c = spec.input_c;
    for (const auto& l : spec.conv) {
        const int fan_in = l.kernel * l.kernel * c;
        const int fan_out = l.kernel * l.kernel * l.filters;
        typename NetParamsT<T>::Layer layer;
        layer.w = glorot_uniform_init<T>(fan_in, fan_out,
                                         static_cast<std::size_t>(l.kernel) * l.kernel * c * l.filters,
                                         rng);
        layer.b.assign(l.filters, T(0));
        p.layers.push_back(std::move(layer));
        c = l.filters;
    }
    int in = d.flatten;
    for (int u : spec.fc) {
        typename NetParamsT<T>::Layer layer;
        layer.w = glorot_uniform_init<T>(in, u, static_cast<std::size_t>(in) * u, rng);
        layer.b.assign(u, T(0));
        p.layers.push_back(std::move(layer));
        in = u;
    }
    return p;
}

enum class NetMode { train, eval };

// Everything backward (and the activation visualizer) needs from a forward
// pass. conv_act / fc_act hold post-ReLU values; drop_mask holds the
// inverted-dropout scale actually applied to each hidden fc activation.
template <typename T>
struct ForwardCache {
    int n = 0;
    std::vector<T> input;
    std::vector<std::vector<T>> conv_act;
    std::vector<std::vector<T>> fc_in;
    std::vector<std::vector<T>> fc_act;
    std::vector<std::vector<T>> drop_mask;
};

namespace detail {

// One strided valid-padding cross-correlation plus bias.
// in: (n, ih, iw, ic) NHWC; w: [ky][kx][ic][f]; out: (n, oh, ow, f).
template <typename T>
void conv2d_forward(const T* in, int n, int ih, int iw, int ic, const T* w, const T* b, int k,
                    int s, int f, T* out, int oh, int ow) {
    std::vector<T> acc(static_cast<std::size_t>(f));
    for (int ni = 0; ni < n; ++ni) {
        const T* in_n = in + static_cast<std::size_t>(ni) * ih * iw * ic;
        T* out_n = out + static_cast<std::size_t>(ni) * oh * ow * f;
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                for (int fo = 0; fo < f; ++fo) acc[fo] = b[fo];
                for (int ky = 0; ky < k; ++ky) {
                    const T* row = in_n + (static_cast<std::size_t>(oy) * s + ky) * iw * ic;
                    for (int kx = 0; kx < k; ++kx) {
                        const T* px = row + (static_cast<std::size_t>(ox) * s + kx) * ic;
                        const T* wk = w + ((static_cast<std::size_t>(ky) * k + kx) * ic) * f;
                        for (int ci = 0; ci < ic; ++ci) {
                            const T a = px[ci];
                            const T* wf = wk + static_cast<std::size_t>(ci) * f;
                            for (int fo = 0; fo < f; ++fo) acc[fo] += a * wf[fo];
                        }
                    }
                }
                T* dst = out_n + (static_cast<std::size_t>(oy) * ow + ox) * f;
                for (int fo = 0; fo < f; ++fo) dst[fo] = acc[fo];
            }
        }
    }
}

}  // namespace detail

// Runs the network on a flat NHWC batch. In train mode hidden fc
// activations pass through inverted dropout (scale 1/(1-p) on kept units),
// so eval mode needs no rescaling; eval mode consumes no rng draws. The
// cache, when given, retains every layer activation for backward and for
// activation_maps.
template <typename T>
std::vector<T> forward(const NetSpec& spec, const NetParamsT<T>& params, const std::vector<T>& input,
                       int n, NetMode mode, Rng* rng = nullptr, ForwardCache<T>* cache = nullptr) {
    const auto d = spec.dims();
    if (static_cast<long long>(input.size()) !=
        static_cast<long long>(n) * spec.input_h * spec.input_w * spec.input_c)
        throw std::invalid_argument("forward: input size does not match spec");
    if (static_cast<int>(params.layers.size()) != spec.layer_count())
        throw std::invalid_argument("forward: params do not match spec");
    if (mode == NetMode::train && rng == nullptr)
        throw std::invalid_argument("forward: train mode needs an rng");

    if (cache) {
        *cache = {};
        cache->n = n;
        cache->input = input;
    }

    std::vector<T> cur = input;
    int h = spec.input_h, w = spec.input_w, c = spec.input_c;
    std::size_t li = 0;
    for (std::size_t ci = 0; ci < spec.conv.size(); ++ci, ++li) {
        const auto& l = spec.conv[ci];
        const int oh = d.h[ci], ow = d.w[ci];
        std::vector<T> out(static_cast<std::size_t>(n) * oh * ow * l.filters);
        detail::conv2d_forward(cur.data(), n, h, w, c, params.layers[li].w.data(),
                               params.layers[li].b.data(), l.kernel, l.stride, l.filters,
                               out.data(), oh, ow);
        for (auto& v : out)
            if (v < T(0)) v = T(0);
        if (cache) cache->conv_act.push_back(out);
        cur = std::move(out);
        h = oh;
        w = ow;
        c = l.filters;
    }

    int in_units = d.flatten;
    const std::size_t fc_count = spec.fc.size();
    for (std::size_t fi = 0; fi < fc_count; ++fi, ++li) {
        const int units = spec.fc[fi];
        if (cache) cache->fc_in.push_back(cur);
        std::vector<T> out(static_cast<std::size_t>(n) * units);
        const T* W = params.layers[li].w.data();
        const T* B = params.layers[li].b.data();
        for (int ni = 0; ni < n; ++ni) {
            const T* x = cur.data() + static_cast<std::size_t>(ni) * in_units;
            T* y = out.data() + static_cast<std::size_t>(ni) * units;
            for (int o = 0; o < units; ++o) y[o] = B[o];
            for (int i = 0; i < in_units; ++i) {
                const T xi = x[i];
                const T* wrow = W + static_cast<std::size_t>(i) * units;
                for (int o = 0; o < units; ++o) y[o] += xi * wrow[o];
            }
        }
        const bool hidden = fi + 1 < fc_count;
        if (hidden)
            for (auto& v : out)
                if (v < T(0)) v = T(0);
        if (cache) cache->fc_act.push_back(out);
        const double p = hidden ? spec.dropout_p(fi) : 0.0;
        if (hidden && mode == NetMode::train && p > 0.0) {
            std::vector<T> mask(out.size());
            const T keep_scale = static_cast<T>(1.0 / (1.0 - p));
            for (std::size_t i = 0; i < out.size(); ++i) {
                mask[i] = rng->uniform() < p ? T(0) : keep_scale;
                out[i] *= mask[i];
            }
            if (cache) cache->drop_mask.push_back(std::move(mask));
        } else if (cache && hidden) {
            cache->drop_mask.emplace_back();  // empty = identity
        }
        cur = std::move(out);
        in_units = units;
    }
    return cur;  // (n, last fc units); steering nets end in 1 unit
}

// (1/n) sum of squared residuals.
template <typename T>
double mse_loss(const std::vector<T>& pred, const std::vector<T>& truth) {
    if (pred.size() != truth.size()) throw std::invalid_argument("mse_loss: length mismatch");
    if (pred.empty()) throw std::invalid_argument("mse_loss: empty batch");
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double r = static_cast<double>(pred[i]) - static_cast<double>(truth[i]);
        acc += r * r;
    }
    return acc / static_cast<double>(pred.size());
}

// Full backward pass from the MSE loss; returns gradients shaped like the
// parameters. Uses the cache of the matching train-mode forward.
template <typename T>
NetParamsT<T> backward(const NetSpec& spec, const NetParamsT<T>& params, const ForwardCache<T>& cache,
                       const std::vector<T>& pred, const std::vector<T>& truth) {
    const auto d = spec.dims();
    const int n = cache.n;
    if (pred.size() != truth.size() || static_cast<int>(pred.size()) != n * spec.fc.back())
        throw std::invalid_argument("backward: prediction shape mismatch");

    NetParamsT<T> grads;
    grads.layers.resize(params.layers.size());
    for (std::size_t i = 0; i < params.layers.size(); ++i) {
        grads.layers[i].w.assign(params.layers[i].w.size(), T(0));
        grads.layers[i].b.assign(params.layers[i].b.size(), T(0));
    }

    // d(loss)/d(output)
    std::vector<T> delta(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i)
        delta[i] = static_cast<T>(2.0 * (static_cast<double>(pred[i]) - truth[i]) / n);

    const std::size_t fc_count = spec.fc.size();
    int li = spec.layer_count() - 1;
    for (std::size_t fi = fc_count; fi-- > 0; --li) {
        const int units = spec.fc[fi];
        const int in_units = fi == 0 ? d.flatten : spec.fc[fi - 1];
        const bool hidden = fi + 1 < fc_count;
        if (hidden) {
            // through dropout, then ReLU
            const auto& mask = cache.drop_mask[fi];
            const auto& act = cache.fc_act[fi];
            for (std::size_t i = 0; i < delta.size(); ++i) {
                if (!mask.empty()) delta[i] *= mask[i];
                if (act[i] <= T(0)) delta[i] = T(0);
            }
        }
        const auto& x = cache.fc_in[fi];
        auto& gw = grads.layers[li].w;
        auto& gb = grads.layers[li].b;
        const T* W = params.layers[li].w.data();
        std::vector<T> dx(static_cast<std::size_t>(n) * in_units, T(0));
        for (int ni = 0; ni < n; ++ni) {
            const T* xn = x.data() + static_cast<std::size_t>(ni) * in_units;
            const T* dn = delta.data() + static_cast<std::size_t>(ni) * units;
            T* dxn = dx.data() + static_cast<std::size_t>(ni) * in_units;
            for (int o = 0; o < units; ++o) gb[o] += dn[o];
            for (int i = 0; i < in_units; ++i) {
                const T xi = xn[i];
                T acc = T(0);
                const T* wrow = W + static_cast<std::size_t>(i) * units;
                T* gwrow = gw.data() + static_cast<std::size_t>(i) * units;
                for (int o = 0; o < units; ++o) {
                    gwrow[o] += xi * dn[o];
                    acc += wrow[o] * dn[o];
                }
                dxn[i] = acc;
            }
        }
        delta = std::move(dx);
    }

    for (std::size_t ci = spec.conv.size(); ci-- > 0; --li) {
        const auto& l = spec.conv[ci];
        const int oh = d.h[ci], ow = d.w[ci], f = l.filters;
        const int ih = ci == 0 ? spec.input_h : d.h[ci - 1];
        const int iw = ci == 0 ? spec.input_w : d.w[ci - 1];
        const int ic = ci == 0 ? spec.input_c : d.c[ci - 1];
        const auto& act = cache.conv_act[ci];
        const std::vector<T>& x = ci == 0 ? cache.input : cache.conv_act[ci - 1];
        for (std::size_t i = 0; i < delta.size(); ++i)
            if (act[i] <= T(0)) delta[i] = T(0);

        auto& gw = grads.layers[li].w;
        auto& gb = grads.layers[li].b;
        const T* W = params.layers[li].w.data();
        std::vector<T> dx(static_cast<std::size_t>(n) * ih * iw * ic, T(0));
        for (int ni = 0; ni < n; ++ni) {
            const T* xn = x.data() + static_cast<std::size_t>(ni) * ih * iw * ic;
            const T* dn = delta.data() + static_cast<std::size_t>(ni) * oh * ow * f;
            T* dxn = dx.data() + static_cast<std::size_t>(ni) * ih * iw * ic;
            for (int oy = 0; oy < oh; ++oy) {
                for (int ox = 0; ox < ow; ++ox) {
                    const T* dz = dn + (static_cast<std::size_t>(oy) * ow + ox) * f;
                    for (int fo = 0; fo < f; ++fo) gb[fo] += dz[fo];
                    for (int ky = 0; ky < l.kernel; ++ky) {
                        const std::size_t y_in = static_cast<std::size_t>(oy) * l.stride + ky;
                        for (int kx = 0; kx < l.kernel; ++kx) {
                            const std::size_t x_in = static_cast<std::size_t>(ox) * l.stride + kx;
                            const T* px = xn + (y_in * iw + x_in) * ic;
                            T* dpx = dxn + (y_in * iw + x_in) * ic;
                            const std::size_t wbase =
                                (static_cast<std::size_t>(ky) * l.kernel + kx) * ic;
                            for (int cin = 0; cin < ic; ++cin) {
                                const T a = px[cin];
                                const T* wf = W + (wbase + cin) * f;
                                T* gwf = gw.data() + (wbase + cin) * f;
                                T acc = T(0);
                                for (int fo = 0; fo < f; ++fo) {
                                    gwf[fo] += a * dz[fo];
                                    acc += wf[fo] * dz[fo];
                                }
                                dpx[cin] += acc;
                            }
                        }
                    }
                }
            }
        }
        delta = std::move(dx);
    }
    return grads;
}

// Adam moment buffers, one slot per parameter layer.
template <typename T>
struct AdamStateT {
    struct Slot {
        std::vector<T> mw, vw, mb, vb;
    };
    std::vector<Slot> slots;
    long long t = 0;

    static AdamStateT zeros_like(const NetParamsT<T>& p) {
        AdamStateT s;
        s.slots.resize(p.layers.size());
        for (std::size_t i = 0; i < p.layers.size(); ++i) {
            s.slots[i].mw.assign(p.layers[i].w.size(), T(0));
            s.slots[i].vw.assign(p.layers[i].w.size(), T(0));
            s.slots[i].mb.assign(p.layers[i].b.size(), T(0));
            s.slots[i].vb.assign(p.layers[i].b.size(), T(0));
        }
        return s;
    }
};

using AdamState = AdamStateT<float>;

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;

// One bias-corrected Adam update over every parameter array.
template <typename T>
void adam_step(NetParamsT<T>& params, AdamStateT<T>& state, const NetParamsT<T>& grads, double lr) {
    if (params.layers.size() != grads.layers.size() || params.layers.size() != state.slots.size())
        throw std::invalid_argument("adam_step: shape mismatch");
    state.t += 1;
    const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(state.t));
    auto update = [&](std::vector<T>& p, std::vector<T>& m, std::vector<T>& v,
                      const std::vector<T>& g) {
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double gi = static_cast<double>(g[i]);
            if (!std::isfinite(gi)) throw NumericError("adam_step: non-finite gradient");
            const double mi = kAdamBeta1 * m[i] + (1.0 - kAdamBeta1) * gi;
            const double vi = kAdamBeta2 * v[i] + (1.0 - kAdamBeta2) * gi * gi;
            m[i] = static_cast<T>(mi);
            v[i] = static_cast<T>(vi);
            p[i] -= static_cast<T>(lr * (mi / bc1) / (std::sqrt(vi / bc2) + kAdamEpsilon));
        }
    };
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        update(params.layers[l].w, state.slots[l].mw, state.slots[l].vw, grads.layers[l].w);
        update(params.layers[l].b, state.slots[l].mb, state.slots[l].vb, grads.layers[l].b);
    }
}

struct TrainConfig {
    double learning_rate = 1e-3;
    int epochs = 5;
    std::uint64_t seed = 0;
};

struct EpochStats {
    double train_loss = 0.0;
    double val_loss = 0.0;
    double seconds = 0.0;
};

struct TrainResult {
    NetParams params;
    std::vector<EpochStats> history;
    double total_seconds = 0.0;
};

// Concatenates a batch of preprocessed frames into one flat NHWC input plus
// its label vector, checking dimensions against the spec.
template <typename T>
std::pair<std::vector<T>, std::vector<T>> flatten_batch(const Batch& batch, const NetSpec& spec) {
    std::vector<T> input;
    input.reserve(batch.inputs.size() * static_cast<std::size_t>(spec.input_h) * spec.input_w *
                  spec.input_c);
    for (const auto& img : batch.inputs) {
        if (img.width != spec.input_w || img.height != spec.input_h)
            throw std::invalid_argument("flatten_batch: frame dims do not match net input");
        for (float v : img.data) input.push_back(static_cast<T>(v));
    }
    std::vector<T> labels(batch.labels.begin(), batch.labels.end());
    return {std::move(input), std::move(labels)};
}

// Full optimization run: epochs x steps_per_epoch Adam steps over the
// augmented stream, with a whole-validation-set MSE after every epoch
// (eval mode, never augmented). Aborts on NaN loss with step diagnostics.
inline TrainResult train(const NetSpec& spec, BatchStream& stream, ValidationStream& val,
                         const TrainConfig& cfg,
                         const std::function<void(const std::string&)>& log = {}) {
    if (cfg.epochs < 1) throw std::invalid_argument("train: epochs >= 1");
    Rng init_rng = Rng::derive(cfg.seed, 0x1217);
    Rng drop_rng = Rng::derive(cfg.seed, 0xD707);
    TrainResult result;
    result.params = init_params<float>(spec, init_rng);
    AdamState adam = AdamState::zeros_like(result.params);

    const auto t0 = std::chrono::steady_clock::now();
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto e0 = std::chrono::steady_clock::now();
        double train_acc = 0.0;
        const long long steps = stream.steps_per_epoch();
        for (long long step = 0; step < steps; ++step) {
            Batch batch = stream.next();
            auto [input, labels] = flatten_batch<float>(batch, spec);
            ForwardCache<float> cache;
            auto pred = forward(spec, result.params, input, static_cast<int>(batch.size()),
                                NetMode::train, &drop_rng, &cache);
            const double loss = mse_loss(pred, labels);
            if (!std::isfinite(loss))
                throw NumericError("train: non-finite loss at epoch " +
                                         std::to_string(epoch + 1) + " step " +
                                         std::to_string(step + 1));
            train_acc += loss;
            auto grads = backward(spec, result.params, cache, pred, labels);
            adam_step(result.params, adam, grads, cfg.learning_rate);
        }

        double val_acc = 0.0;
        std::size_t val_count = 0;
        val.reset();
        while (!val.done()) {
            Batch batch = val.next();
            auto [input, labels] = flatten_batch<float>(batch, spec);
            auto pred = forward(spec, result.params, input, static_cast<int>(batch.size()),
                                NetMode::eval);
            val_acc += mse_loss(pred, labels) * static_cast<double>(batch.size());
            val_count += batch.size();
        }

        EpochStats stats;
        stats.train_loss = train_acc / static_cast<double>(steps);
        stats.val_loss = val_acc / static_cast<double>(val_count);
        stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - e0).count();
        result.history.push_back(stats);
        if (log)
            log("epoch " + std::to_string(epoch + 1) + "/" + std::to_string(cfg.epochs) +
                "  train mse " + std::to_string(stats.train_loss) + "  val mse " +
                std::to_string(stats.val_loss) + "  (" + std::to_string(stats.seconds) + " s)");
    }
    result.total_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

// Deployment-path inference: preprocess one camera frame, eval-mode forward,
// clamp the single output to the normalized steering range.
inline double predict(const NetSpec& spec, const NetParams& params, const ImageU8& frame) {
    const ImageF32 input = preprocess(frame, spec.input_w, spec.input_h);
    std::vector<float> flat(input.data.begin(), input.data.end());
    const auto out = forward(spec, params, flat, 1, NetMode::eval);
    return std::clamp(static_cast<double>(out.back()), -1.0, 1.0);
}

// Post-ReLU feature maps of every conv layer for one frame, each map
// min-max normalized to an 8-bit grayscale raster (uniform maps come out
// all zero).
struct ActivationMaps {
    struct Layer {
        int height = 0;
        int width = 0;
        std::vector<std::vector<std::uint8_t>> maps;  // one per filter
    };
    std::vector<Layer> layers;
};

inline ActivationMaps activation_maps(const NetSpec& spec, const NetParams& params,
                                      const ImageU8& frame) {
    const ImageF32 input = preprocess(frame, spec.input_w, spec.input_h);
    std::vector<float> flat(input.data.begin(), input.data.end());
    ForwardCache<float> cache;
    forward(spec, params, flat, 1, NetMode::eval, nullptr, &cache);
    const auto d = spec.dims();
    ActivationMaps maps;
    for (std::size_t ci = 0; ci < spec.conv.size(); ++ci) {
        ActivationMaps::Layer layer;
        layer.height = d.h[ci];
        layer.width = d.w[ci];
        const int f = d.c[ci];
        const auto& act = cache.conv_act[ci];
        for (int fo = 0; fo < f; ++fo) {
            float lo = act[fo], hi = act[fo];
            for (int i = 0; i < layer.height * layer.width; ++i) {
                const float v = act[static_cast<std::size_t>(i) * f + fo];
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            std::vector<std::uint8_t> map(static_cast<std::size_t>(layer.height) * layer.width);
            const float span = hi - lo;
            for (int i = 0; i < layer.height * layer.width; ++i) {
                const float v = act[static_cast<std::size_t>(i) * f + fo];
                map[i] = span > 0.0f ? static_cast<std::uint8_t>(
                                           std::lround((v - lo) / span * 255.0f))
                                     : 0;
            }
            layer.maps.push_back(std::move(map));
        }
        maps.layers.push_back(std::move(layer));
    }
    return maps;
}

}  // namespace deskpilot

#include "invnet/credit.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "invnet/rng.hpp"

namespace invnet {

UpdateSet UpdateSet::scaled(double alpha) const {
    UpdateSet out = *this;
    for (Entry& e : out.layers) {
        e.weight = invnet::scaled(e.weight, alpha);
        e.bias = invnet::scaled(e.bias, alpha);
    }
    return out;
}

void UpdateSet::ensure_finite() const {
    for (std::size_t l = 0; l < layers.size(); ++l) {
        layers[l].weight.ensure_finite(algorithm + " update, layer " +
                                       std::to_string(l) + " weight");
        layers[l].bias.ensure_finite(algorithm + " update, layer " +
                                     std::to_string(l) + " bias");
    }
}

std::vector<const Tensor*> UpdateSet::flat_parameters() const {
    std::vector<const Tensor*> out;
    for (const Entry& e : layers) {
        out.push_back(&e.weight);
        out.push_back(&e.bias);
    }
    return out;
}

FeedbackMatrices make_feedback_matrices(const Network& net, std::uint64_t seed) {
    FeedbackMatrices fb;
    fb.seed = seed;
    fb.feedback.resize(net.depth());
    for (std::size_t l = 1; l < net.depth(); ++l) {
        const std::uint64_t sub = mix_seed(seed, l);
        if (const auto* dense = std::get_if<DenseLayer>(&net.layer(l))) {
            fb.feedback[l] = orthogonal_init(dense->width(), sub).tensor();
        } else {
            const auto& conv = std::get<ConvLayer>(net.layer(l));
            fb.feedback[l] = orthogonal_init(conv.out_channels(), sub)
                                 .tensor()
                                 .reshaped({conv.out_channels(),
                                            conv.in_channels(), conv.kernel_h(),
                                            conv.kernel_w()});
        }
    }
    return fb;
}

Tensor softmax_rows(const Tensor& logits) {
    const std::size_t cols =
        logits.rank() == 1 ? logits.size() : logits.extent(logits.rank() - 1);
    const std::size_t rows = logits.size() / cols;
    Tensor p = logits;
    for (std::size_t i = 0; i < rows; ++i) {
        double* row = p.data() + i * cols;
        double m = row[0];
        for (std::size_t j = 1; j < cols; ++j) {
            m = std::max(m, row[j]);
        }
        double sum = 0.0;
        for (std::size_t j = 0; j < cols; ++j) {
            row[j] = std::exp(row[j] - m);
            sum += row[j];
        }
        for (std::size_t j = 0; j < cols; ++j) {
            row[j] /= sum;
        }
    }
    p.quantize();
    return p;
}

double cross_entropy_loss(const Tensor& logits, const Tensor& labels_onehot) {
    if (!logits.same_shape(labels_onehot)) {
        throw ShapeError("cross_entropy_loss: logits and labels differ in shape");
    }
    const std::size_t cols =
        logits.rank() == 1 ? logits.size() : logits.extent(logits.rank() - 1);
    const std::size_t rows = logits.size() / cols;
    double total = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
        const double* row = logits.data() + i * cols;
        const double* y = labels_onehot.data() + i * cols;
        double m = row[0];
        for (std::size_t j = 1; j < cols; ++j) {
            m = std::max(m, row[j]);
        }
        double sum = 0.0;
        double picked = 0.0;
        for (std::size_t j = 0; j < cols; ++j) {
            sum += std::exp(row[j] - m);
            picked += y[j] * (row[j] - m);
        }
        total += std::log(sum) - picked;
    }
    return total / static_cast<double>(rows);
}

Tensor output_target(const Tensor& a_L, const Tensor& labels_onehot,
                     double beta) {
    if (!a_L.same_shape(labels_onehot)) {
        throw ShapeError("output_target: activation and label shapes differ");
    }
    if (!(beta > 0.0)) {
        throw Error("output_target: beta must be positive");
    }
    Tensor p = softmax_rows(a_L);
    Tensor t = a_L;
    for (std::size_t i = 0; i < t.size(); ++i) {
        t[i] -= beta * (p[i] - labels_onehot[i]);
    }
    t.quantize();
    t.ensure_finite("output_target");
    return t;
}

namespace {

void check_cache(const Network& net, const ForwardCache& cache) {
    if (cache.version != net.version()) {
        throw Error("stale forward cache: network parameters changed since the "
                    "forward pass");
    }
    if (cache.layers.size() != net.depth()) {
        throw ShapeError("forward cache depth does not match network depth");
    }
}

// Input to layer l, shaped as the layer expects, batch axis first.
Tensor layer_input(const Network& net, const ForwardCache& cache,
                   std::size_t l) {
    std::vector<std::size_t> shape = {cache.batch};
    const std::vector<std::size_t>& feature = net.layer_input_shape(l);
    shape.insert(shape.end(), feature.begin(), feature.end());
    if (l == 0) {
        return cache.input.reshaped(shape);
    }
    return cache.layers[l - 1].a_fwd.reshaped(shape);
}

// Embeds forwarded-slice values into the full-channel shape of layer l,
// zero on auxiliary channels.
Tensor embed_forward_slice(const Network& net, const ForwardCache& cache,
                           std::size_t l, const Tensor& fwd_values) {
    const LayerCache& lc = cache.layers[l];
    if (const auto* conv = std::get_if<ConvLayer>(&net.layer(l))) {
        Tensor full(lc.a_full.shape());
        const std::size_t plane = conv->out_h() * conv->out_w();
        const std::size_t full_block = conv->out_channels() * plane;
        const std::size_t fwd_block = conv->forward_channels * plane;
        for (std::size_t n = 0; n < cache.batch; ++n) {
            std::copy(fwd_values.data() + n * fwd_block,
                      fwd_values.data() + (n + 1) * fwd_block,
                      full.data() + n * full_block);
        }
        return full;
    }
    return fwd_values.reshaped(lc.a_full.shape());
}

// Writes forwarded-slice values over the matching channels of `full`,
// leaving auxiliary channels untouched.
void inject_forward_slice(const Network& net, const ForwardCache& cache,
                          std::size_t l, const Tensor& fwd_values,
                          Tensor& full) {
    const LayerCache& lc = cache.layers[l];
    if (const auto* conv = std::get_if<ConvLayer>(&net.layer(l))) {
        const std::size_t plane = conv->out_h() * conv->out_w();
        const std::size_t full_block = conv->out_channels() * plane;
        const std::size_t fwd_block = conv->forward_channels * plane;
        for (std::size_t n = 0; n < cache.batch; ++n) {
            std::copy(fwd_values.data() + n * fwd_block,
                      fwd_values.data() + (n + 1) * fwd_block,
                      full.data() + n * full_block);
        }
        return;
    }
    (void)lc;
    std::copy(fwd_values.data(), fwd_values.data() + fwd_values.size(),
              full.data());
}

// Layer-local update entry from an effective output delta (already
// activation-scaled): the negative batch-mean gradient.
UpdateSet::Entry local_entry(const Layer& layer, const Tensor& delta_z,
                             const Tensor& input, std::size_t batch) {
    UpdateSet::Entry entry;
    const double inv_batch = 1.0 / static_cast<double>(batch);
    if (const auto* dense = std::get_if<DenseLayer>(&layer)) {
        const std::size_t n = dense->width();
        const std::size_t in_n = input.size() / batch;
        Tensor dw(std::vector<std::size_t>{n, in_n});
        Tensor db(std::vector<std::size_t>{n});
        for (std::size_t i = 0; i < batch; ++i) {
            const double* d = delta_z.data() + i * n;
            const double* x = input.data() + i * in_n;
            for (std::size_t r = 0; r < n; ++r) {
                const double g = d[r];
                db[r] -= g * inv_batch;
                if (g == 0.0) {
                    continue;
                }
                double* row = dw.data() + r * in_n;
                const double gi = g * inv_batch;
                for (std::size_t c = 0; c < in_n; ++c) {
                    row[c] -= gi * x[c];
                }
            }
        }
        entry.weight = std::move(dw);
        entry.bias = std::move(db);
    } else {
        const auto& conv = std::get<ConvLayer>(layer);
        Tensor dk = conv_weight_adjoint(
            delta_z, input,
            {conv.out_channels(), conv.in_channels(), conv.kernel_h(),
             conv.kernel_w()},
            conv.stride);
        entry.weight = scaled(dk, -1.0);
        Tensor db(std::vector<std::size_t>{conv.out_channels()});
        const std::size_t plane = conv.out_h() * conv.out_w();
        for (std::size_t n = 0; n < batch; ++n) {
            const double* d = delta_z.data() + n * conv.out_channels() * plane;
            for (std::size_t co = 0; co < conv.out_channels(); ++co) {
                double s = 0.0;
                const double* dc = d + co * plane;
                for (std::size_t i = 0; i < plane; ++i) {
                    s += dc[i];
                }
                db[co] -= s * inv_batch;
            }
        }
        entry.bias = std::move(db);
    }
    return entry;
}

double layer_slope(const Layer& layer) {
    if (const auto* dense = std::get_if<DenseLayer>(&layer)) {
        return dense->slope;
    }
    return std::get<ConvLayer>(layer).slope;
}

// Shared delta walk for bp (feedback == nullptr) and fa.
UpdateSet delta_backward(const Network& net, const ForwardCache& cache,
                         const Tensor& labels_onehot,
                         const FeedbackMatrices* feedback, const char* tag) {
    check_cache(net, cache);
    if (!cache.logits.same_shape(labels_onehot)) {
        throw ShapeError(std::string(tag) + ": label shape " +
                         shape_to_string(labels_onehot.shape()) +
                         " does not match logits " +
                         shape_to_string(cache.logits.shape()));
    }
    if (feedback != nullptr && feedback->feedback.size() != net.depth()) {
        throw ShapeError("feedback matrices do not match network depth");
    }

    const std::size_t depth = net.depth();
    UpdateSet updates;
    updates.algorithm = tag;
    updates.layers.resize(depth);

    Tensor p = softmax_rows(cache.logits);
    Tensor delta_fwd = sub(p, labels_onehot);  // d(CE)/d(a_fwd), per sample

    for (std::size_t l = depth; l-- > 0;) {
        const Layer& layer = net.layer(l);
        const LayerCache& lc = cache.layers[l];
        Tensor delta_full = embed_forward_slice(net, cache, l, delta_fwd);
        Tensor delta_z = hadamard(
            activation_derivative(lc.z, layer_slope(layer)), delta_full);

        Tensor input = layer_input(net, cache, l);
        updates.layers[l] = local_entry(layer, delta_z, input, cache.batch);

        if (l == 0) {
            break;
        }
        if (const auto* dense = std::get_if<DenseLayer>(&layer)) {
            const std::size_t n = dense->width();
            Tensor prev(std::vector<std::size_t>{cache.batch, n});
            const Tensor& op = (feedback != nullptr) ? feedback->feedback[l]
                                                     : dense->W.tensor();
            const double* w = op.data();
            for (std::size_t i = 0; i < cache.batch; ++i) {
                const double* d = delta_z.data() + i * n;
                double* out = prev.data() + i * n;
                if (feedback != nullptr) {
                    // delta_prev = B * delta
                    for (std::size_t c = 0; c < n; ++c) {
                        const double* row = w + c * n;
                        double acc = 0.0;
                        for (std::size_t r = 0; r < n; ++r) {
                            acc += row[r] * d[r];
                        }
                        out[c] = acc;
                    }
                } else {
                    // delta_prev = W^T * delta
                    for (std::size_t r = 0; r < n; ++r) {
                        const double g = d[r];
                        if (g == 0.0) {
                            continue;
                        }
                        const double* row = w + r * n;
                        for (std::size_t c = 0; c < n; ++c) {
                            out[c] += row[c] * g;
                        }
                    }
                }
            }
            delta_fwd = std::move(prev);
        } else {
            const auto& conv = std::get<ConvLayer>(layer);
            const Tensor& op = (feedback != nullptr) ? feedback->feedback[l]
                                                     : conv.kernel;
            delta_fwd =
                transposed_conv(delta_z, op, conv.stride, conv.input_shape);
        }
    }
    updates.ensure_finite();
    return updates;
}

// Inverse image of a full-channel target through layer l.
Tensor layer_inverse(const Network& net, const ForwardCache& cache,
                     std::size_t l, const Tensor& target_full) {
    const std::string name = "layer " + std::to_string(l);
    if (const auto* dense = std::get_if<DenseLayer>(&net.layer(l))) {
        return dense_inverse(*dense, target_full, name);
    }
    const auto& conv = std::get<ConvLayer>(net.layer(l));
    return conv_inverse(conv, target_full, layer_input(net, cache, l), name);
}

}  // namespace

UpdateSet bp_backward(const Network& net, const ForwardCache& cache,
                      const Tensor& labels_onehot) {
    return delta_backward(net, cache, labels_onehot, nullptr, "bp");
}

UpdateSet fa_backward(const Network& net, const ForwardCache& cache,
                      const Tensor& labels_onehot, const FeedbackMatrices& fb) {
    return delta_backward(net, cache, labels_onehot, &fb, "fa");
}

UpdateSet tp_backward(const Network& net, const ForwardCache& cache,
                      const Tensor& t_out) {
    check_cache(net, cache);
    if (!cache.logits.same_shape(t_out)) {
        throw ShapeError("tp_backward: output target shape mismatch");
    }

    const std::size_t depth = net.depth();
    UpdateSet updates;
    updates.algorithm = "tp";
    updates.layers.resize(depth);

    Tensor t_fwd = t_out;
    for (std::size_t l = depth; l-- > 0;) {
        const Layer& layer = net.layer(l);
        const LayerCache& lc = cache.layers[l];

        Tensor t_full = lc.a_full;
        inject_forward_slice(net, cache, l, t_fwd, t_full);

        Tensor e = sub(lc.a_full, t_full);
        Tensor delta_like =
            hadamard(activation_derivative(lc.z, layer_slope(layer)), e);
        Tensor input = layer_input(net, cache, l);
        updates.layers[l] = local_entry(layer, delta_like, input, cache.batch);

        if (l > 0) {
            t_fwd = layer_inverse(net, cache, l, t_full);
        }
    }
    updates.ensure_finite();
    return updates;
}

std::pair<UpdateSet, TargetState> gp_backward(const Network& net,
                                              const ForwardCache& cache,
                                              const Tensor& t_out,
                                              const GpOptions& options) {
    check_cache(net, cache);
    if (!cache.logits.same_shape(t_out)) {
        throw ShapeError("gp_backward: output target shape mismatch");
    }
    if (options.mode == GpMode::vanilla && !(options.gamma > 0.0)) {
        throw Error("gp_backward: vanilla mode requires gamma > 0");
    }
    if (options.mode == GpMode::normalized && !(options.eta > 0.0)) {
        throw Error("gp_backward: normalized mode requires eta > 0");
    }
    if (options.norm_power != 1 && options.norm_power != 2) {
        throw Error("gp_backward: norm_power must be 1 or 2");
    }

    const std::size_t depth = net.depth();
    const std::size_t batch = cache.batch;

    UpdateSet updates;
    updates.algorithm = options.mode == GpMode::vanilla ? "vgp" : "gp";
    updates.layers.resize(depth);

    TargetState state;
    state.mode = options.mode;
    state.eta = options.eta;
    state.gamma = options.gamma;
    state.layers.resize(depth);

    Tensor t_fwd = t_out;
    for (std::size_t l = depth; l-- > 0;) {
        const Layer& layer = net.layer(l);
        const LayerCache& lc = cache.layers[l];
        const double slope = layer_slope(layer);

        Tensor t_full = lc.a_full;
        inject_forward_slice(net, cache, l, t_fwd, t_full);

        Tensor e = sub(lc.a_full, t_full);
        Tensor d = activation_derivative(lc.z, slope);
        Tensor delta_like = hadamard(d, e);
        Tensor input = layer_input(net, cache, l);
        updates.layers[l] = local_entry(layer, delta_like, input, batch);

        TargetState::LayerState& ls = state.layers[l];
        ls.target = t_full;

        // Incremental factor from the batch-wide target-activation distance.
        double sq = 0.0;
        for (std::size_t j = 0; j < e.size(); ++j) {
            sq += e[j] * e[j];
        }
        const double dist = std::sqrt(sq);
        ls.distance = dist;
        const bool shortcut = dist == 0.0;
        if (!shortcut) {
            double gamma_l = options.gamma;
            if (options.mode == GpMode::normalized) {
                gamma_l = options.norm_power == 2 ? options.eta / sq
                                                  : options.eta / dist;
            }
            if (!std::isfinite(gamma_l)) {
                throw NumericError(
                    "gp_backward: non-finite incremental factor at layer " +
                    std::to_string(l));
            }
            ls.gamma = gamma_l;
        }

        if (l == 0) {
            break;
        }

        if (shortcut) {
            t_fwd = layer_input(net, cache, l);
            continue;
        }

        // Perturbed activity (I - eps) a + eps t = a - eps (a - t), with
        // eps = gamma_l D^2 applied elementwise.
        Tensor y = lc.a_full;
        const double g = ls.gamma;
        for (std::size_t j = 0; j < y.size(); ++j) {
            y[j] -= g * d[j] * d[j] * e[j];
        }
        y.quantize();
        t_fwd = layer_inverse(net, cache, l, y);
    }
    updates.ensure_finite();
    return {std::move(updates), std::move(state)};
}

Matrix orthogonality_update(const Matrix& W, double kappa) {
    if (W.rows() != W.cols()) {
        throw ShapeError("orthogonality_update: matrix must be square");
    }
    if (kappa < 0.0) {
        throw Error("orthogonality_update: kappa must be non-negative");
    }
    const std::size_t n = W.rows();
    Matrix e = matmul(W, transpose(W));
    for (std::size_t i = 0; i < n; ++i) {
        e(i, i) -= 1.0;
    }
    Matrix g = matmul(e, W);
    return Matrix(scaled(g.tensor(), -kappa));
}

Tensor orthogonality_update_kernel(const Tensor& kernel, double kappa) {
    const std::size_t c_out = kernel.extent(0);
    const std::size_t patch = kernel.size() / c_out;
    Matrix m(kernel.reshaped({c_out, patch}));
    Matrix g = orthogonality_update(m, kappa);
    return g.tensor().reshaped(kernel.shape());
}

void add_orthogonality_updates(const Network& net, double kappa,
                               UpdateSet& updates) {
    if (updates.layers.size() != net.depth()) {
        throw ShapeError("add_orthogonality_updates: update depth mismatch");
    }
    if (kappa == 0.0) {
        return;
    }
    for (std::size_t l = 0; l < net.depth(); ++l) {
        if (const auto* dense = std::get_if<DenseLayer>(&net.layer(l))) {
            updates.layers[l].weight =
                add(updates.layers[l].weight,
                    orthogonality_update(dense->W, kappa).tensor());
        } else {
            const auto& conv = std::get<ConvLayer>(net.layer(l));
            updates.layers[l].weight =
                add(updates.layers[l].weight,
                    orthogonality_update_kernel(conv.kernel, kappa));
        }
    }
}

AdamState::AdamState(const std::vector<const Tensor*>& params,
                     AdamOptions options)
    : options_(options) {
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (const Tensor* p : params) {
        m_.emplace_back(p->shape(), 0.0, p->precision());
        v_.emplace_back(p->shape(), 0.0, p->precision());
    }
}

void AdamState::apply(const std::vector<Tensor*>& params,
                      const std::vector<const Tensor*>& updates) {
    if (params.size() != m_.size() || updates.size() != m_.size()) {
        throw ShapeError("adam: parameter list does not match optimizer state");
    }
    ++step_;
    const double c1 = 1.0 - std::pow(options_.beta1, static_cast<double>(step_));
    const double c2 = 1.0 - std::pow(options_.beta2, static_cast<double>(step_));
    for (std::size_t k = 0; k < params.size(); ++k) {
        Tensor& p = *params[k];
        const Tensor& u = *updates[k];
        if (!p.same_shape(u)) {
            throw ShapeError("adam: update shape " + shape_to_string(u.shape()) +
                             " does not match parameter " +
                             shape_to_string(p.shape()));
        }
        Tensor& m = m_[k];
        Tensor& v = v_[k];
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double g = -u[i];  // updates are descent directions
            m[i] = options_.beta1 * m[i] + (1.0 - options_.beta1) * g;
            v[i] = options_.beta2 * v[i] + (1.0 - options_.beta2) * g * g;
            const double mhat = m[i] / c1;
            const double vhat = v[i] / c2;
            p[i] -= options_.alpha * mhat / (std::sqrt(vhat) + options_.epsilon);
        }
        m.quantize();
        v.quantize();
        p.quantize();
        p.ensure_finite("adam parameter " + std::to_string(k));
    }
}

void AdamState::apply(Network& net, const UpdateSet& updates) {
    if (updates.layers.size() != net.depth()) {
        throw ShapeError("adam: update set depth does not match network");
    }
    apply(net.parameters(), updates.flat_parameters());
    net.bump_version();
}

}  // namespace invnet

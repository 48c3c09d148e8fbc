#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "invnet/layers.hpp"

namespace invnet {

/// Per-layer parameter deltas produced by one algorithm for one batch.
/// Entries are descent directions (negative loss gradients averaged over
/// the batch), so doubling a learning-rate scale doubles every entry.
struct UpdateSet {
    struct Entry {
        Tensor weight;  // matrix shape (dense) or kernel shape (conv)
        Tensor bias;
    };

    std::string algorithm;
    long step = 0;
    std::vector<Entry> layers;

    UpdateSet scaled(double alpha) const;
    void ensure_finite() const;

    /// weight, bias per layer; order matches Network::parameters().
    std::vector<const Tensor*> flat_parameters() const;
};

/// Fixed random feedback operators. feedback[l] replaces layer l's weight
/// transpose in the backward pass, for l in [1, depth); index 0 is unused
/// (the first layer propagates no delta further back).
struct FeedbackMatrices {
    std::vector<Tensor> feedback;
    std::uint64_t seed = 0;
};

/// Draws feedback weights with the same orthogonal initializer used for
/// forward weights, from `seed` (one sub-stream per layer).
FeedbackMatrices make_feedback_matrices(const Network& net, std::uint64_t seed);

/// Row-wise softmax over [N, n] (or a single row [n]).
Tensor softmax_rows(const Tensor& logits);

/// Mean categorical cross-entropy between logits and one-hot labels.
double cross_entropy_loss(const Tensor& logits, const Tensor& labels_onehot);

/// Output-layer target t_L = a_L - beta * (softmax(a_L) - labels). With
/// beta = 1 the output-layer local error equals the cross-entropy delta.
Tensor output_target(const Tensor& a_L, const Tensor& labels_onehot, double beta);

UpdateSet bp_backward(const Network& net, const ForwardCache& cache,
                      const Tensor& labels_onehot);

UpdateSet fa_backward(const Network& net, const ForwardCache& cache,
                      const Tensor& labels_onehot, const FeedbackMatrices& fb);

/// Pure target propagation: t_{l-1} = G_l(t_l) through exact inverses,
/// with layer-local quadratic-loss updates.
UpdateSet tp_backward(const Network& net, const ForwardCache& cache,
                      const Tensor& t_out);

enum class GpMode { vanilla, normalized };

struct GpOptions {
    GpMode mode = GpMode::normalized;
    double gamma = 1e-2;  // fixed incremental factor (vanilla)
    double eta = 1e-4;    // target-distance normalizer (normalized)
    int norm_power = 2;   // exponent on ||a - t|| in the normalizer
};

/// Per-layer targets and the incremental factor actually used. The factor
/// is computed from the batch-wide target-activation distance; gamma is
/// recorded as 0 where propagation short-circuited.
struct TargetState {
    struct LayerState {
        Tensor target;    // full-channel target, batched
        double gamma = 0.0;
        double distance = 0.0;  // ||a_l - t_l|| over the whole batch
    };
    std::vector<LayerState> layers;
    GpMode mode = GpMode::normalized;
    double eta = 0.0;
    double gamma = 0.0;
};

/// Incremental target propagation: the layer-local update plus the
/// gradient-adjusted target transport
///   t_{l-1} = G_l((I - eps_l) a_l + eps_l t_l),  eps_l = gamma_l D_l^2,
/// with gamma_l fixed (vanilla) or eta / ||a_l - t_l||^p (normalized).
std::pair<UpdateSet, TargetState> gp_backward(const Network& net,
                                              const ForwardCache& cache,
                                              const Tensor& t_out,
                                              const GpOptions& options);

/// Gradient step of the penalty 1/4 ||W W^T - I||_F^2, scaled by -kappa.
Matrix orthogonality_update(const Matrix& W, double kappa);

/// Same penalty applied to the reshaped square kernel matrix.
Tensor orthogonality_update_kernel(const Tensor& kernel, double kappa);

/// Adds the orthogonality step for every layer weight to `updates`.
void add_orthogonality_updates(const Network& net, double kappa,
                               UpdateSet& updates);

struct AdamOptions {
    double alpha = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Bias-corrected adaptive-moment optimizer over a fixed parameter list.
class AdamState {
public:
    AdamState() = default;
    AdamState(const std::vector<const Tensor*>& params, AdamOptions options);

    /// One optimizer step; `updates` are descent directions matching the
    /// construction order.
    void apply(const std::vector<Tensor*>& params,
               const std::vector<const Tensor*>& updates);

    /// Applies an UpdateSet to a network and bumps its version.
    void apply(Network& net, const UpdateSet& updates);

    long step_count() const noexcept { return step_; }
    const AdamOptions& options() const noexcept { return options_; }
    void set_options(AdamOptions options) { options_ = options; }

    // Checkpoint access.
    std::vector<Tensor>& first_moments() noexcept { return m_; }
    std::vector<Tensor>& second_moments() noexcept { return v_; }
    const std::vector<Tensor>& first_moments() const noexcept { return m_; }
    const std::vector<Tensor>& second_moments() const noexcept { return v_; }
    void set_step_count(long step) { step_ = step; }

private:
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
    long step_ = 0;
    AdamOptions options_;
};

}  // namespace invnet

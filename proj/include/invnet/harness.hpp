#pragma once

#include <string>
#include <vector>

#include "invnet/checkpoint.hpp"
#include "invnet/config.hpp"
#include "invnet/data.hpp"
#include "invnet/diagnostics.hpp"

namespace invnet {

struct MetricsRow {
    long step = 0;
    long epoch = 0;
    std::string layer;   // layer index or "all"
    std::string metric;  // angle_deg, loss, train_acc, test_acc,
                         // ortho_residual, target_distance
    double value = 0.0;
};

/// Append-only metrics sink with monotonically non-decreasing steps.
class MetricsLog {
public:
    void append(long step, long epoch, std::string layer, std::string metric,
                double value);
    const std::vector<MetricsRow>& rows() const noexcept { return rows_; }

    /// CSV with header step,epoch,layer,metric,value; UTF-8, LF endings,
    /// values printed with %.17g so equal runs are byte-identical.
    std::string to_csv() const;
    void write_csv(const std::string& path) const;

private:
    std::vector<MetricsRow> rows_;
    long last_step_ = -1;
};

/// Builds the configured network with orthogonal weights and zero biases,
/// deterministically from the config seed.
Network build_network(const ExperimentConfig& config);

/// Materializes one split ("train" or "test") of the configured dataset.
Dataset load_dataset(const DatasetConfig& config, const std::string& split);

struct TrainOptions {
    bool measurement_only = false;    // force angles on, skip accuracy evals
    const Checkpoint* resume = nullptr;
};

struct TrainResult {
    MetricsLog log;
    Network net;
    AdamState opt;
    long steps = 0;
    std::string algorithm;
};

/// The full training loop: per step a forward pass, the configured
/// algorithm's update (with the BP reference computed but never applied
/// when measuring angles), the orthogonality step for GP modes, and one
/// Adam step; per epoch, train/test accuracy.
TrainResult run_training(const ExperimentConfig& config,
                         const TrainOptions& options = {});

/// Fraction of samples whose top-k logits contain the true class. Ties
/// break toward lower indices.
double evaluate(const Network& net, const Dataset& dataset, int top_k = 1);

}  // namespace invnet

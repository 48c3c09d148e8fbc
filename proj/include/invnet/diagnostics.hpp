#pragma once

#include <string>
#include <vector>

#include "invnet/credit.hpp"

namespace invnet {

/// Angle in degrees between one algorithm's update and the reference update
/// for one layer; layer == -1 aggregates the whole network.
struct AngleRecord {
    long step = 0;
    int layer = 0;
    std::string algorithm;
    double degrees = 0.0;
};

/// Angle in degrees between two same-shaped tensors viewed as flat vectors.
/// Identical inputs give exactly 0. Throws NumericError on zero-norm input.
double update_angle(const Tensor& u, const Tensor& v);

struct AngleReportOptions {
    bool include_bias = false;
};

/// One record per layer (weights only by default) plus a whole-network
/// record over the concatenation of all layers. Layers whose updates have
/// zero norm are omitted rather than reported as zero degrees.
std::vector<AngleRecord> angle_report(const UpdateSet& alg,
                                      const UpdateSet& ref, long step,
                                      AngleReportOptions options = {});

/// Central-difference gradients of the mean cross-entropy loss for every
/// parameter, returned negated like bp_backward. Refuses networks with more
/// than 100000 parameters.
UpdateSet finite_difference_grads(const Network& net, const Tensor& input,
                                  const Tensor& labels_onehot,
                                  double step_size);

/// Per-layer Euclidean target-activation distance (over the whole batch).
std::vector<double> target_distance_trace(const TargetState& state);

}  // namespace invnet

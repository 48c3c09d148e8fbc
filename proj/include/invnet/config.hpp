#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "invnet/credit.hpp"
#include "invnet/data.hpp"

namespace invnet {

enum class Algorithm { bp, fa, tp, vgp, gp };

std::string to_string(Algorithm algorithm);
Algorithm algorithm_from_string(const std::string& name, int line = 0);

struct LayerSpec {
    enum class Kind { dense, conv };
    Kind kind = Kind::dense;
    std::size_t width = 0;  // dense; 0 means "match the incoming size"
    std::size_t kernel_h = 0;
    std::size_t kernel_w = 0;
    std::size_t stride = 1;
    std::size_t out_channels = 0;
    std::size_t forward_channels = 0;  // 0 means "all channels"
    double slope = 0.1;
};

struct DatasetConfig {
    enum class Kind { synthetic, idx, cifar10 };
    Kind kind = Kind::synthetic;

    // synthetic
    SyntheticSpec synthetic;
    std::size_t per_class_test = 0;  // 0 -> per_class / 5, at least 1

    // idx
    std::string train_images, train_labels, test_images, test_labels;
    int idx_classes = 10;

    // cifar10
    std::string dir;

    bool standardize = false;
    std::vector<std::size_t> input_shape;  // resolved feature shape
};

struct ExperimentConfig {
    Algorithm algorithm = Algorithm::bp;
    double beta = 1.0;
    std::optional<double> eta;    // required for gp
    std::optional<double> gamma;  // required for vgp
    double kappa = 0.0;
    int norm_power = 2;
    AdamOptions adam;
    long epochs = 1;
    std::size_t batch_size = 32;
    std::uint64_t seed = 1;
    Precision precision = Precision::f64;
    bool measure_angles = true;
    long angle_stride = 1;
    bool angle_include_bias = false;
    OverlapCorrection overlap = OverlapCorrection::subtract_forward;
    DatasetConfig data;
    std::vector<LayerSpec> layers;

    GpOptions gp_options() const;
};

/// Parses the sectioned key = value experiment format (see the README for
/// the grammar). Every invariant is validated; errors carry line numbers.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

/// Canonical text form with all defaults filled in; parse(echo(parse(x)))
/// is stable.
std::string echo_config(const ExperimentConfig& config);

/// One-line dataset selector, e.g.
///   synthetic:classes=10,features=64,per_class=100,separation=3,seed=5,split=test
///   idx:images=<path>,labels=<path>
///   cifar10:dir=<path>,split=test
DatasetConfig parse_dataset_spec(const std::string& spec);
std::string dataset_spec_split(const std::string& spec);  // "train" or "test"

}  // namespace invnet

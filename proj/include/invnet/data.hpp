#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "invnet/tensor.hpp"

namespace invnet {

struct Dataset {
    Tensor inputs;            // [N, ...feature shape]
    std::vector<int> labels;  // class ids in [0, classes)
    int classes = 0;
    std::string split;        // "train" or "test"

    std::size_t size() const { return labels.size(); }
    std::vector<std::size_t> feature_shape() const;
    std::size_t feature_size() const;
};

/// Reads an IDX image/label file pair (big-endian, magic 0x00000803 for
/// rank-3 images and 0x00000801 for rank-1 labels). Pixels are scaled to
/// [0, 1]; the image and label counts are cross-validated.
Dataset load_idx(const std::string& images_path,
                 const std::string& labels_path);

/// One binary batch file: records of 1 label byte + 3072 channel-planar
/// pixel bytes (R, G, B planes of a row-major 32x32 image).
Dataset load_cifar10_batch(const std::string& path);

/// The standard five training batches plus the test batch from `dir`.
std::pair<Dataset, Dataset> load_cifar10(const std::string& dir);

struct SyntheticSpec {
    int classes = 2;
    std::vector<std::size_t> feature_shape = {2};
    std::size_t per_class = 100;
    double separation = 6.0;
    std::uint64_t seed = 1;
    std::string split = "train";  // selects the noise stream only
};

/// Gaussian class clusters with unit within-class variance. Class means
/// depend on the seed but not on the split, so train and test splits are
/// drawn around identical means. Linearly separable at separation >= 6.
Dataset synthetic_dataset(const SyntheticSpec& spec);

/// Seeded permutation of sample indices cut into batches of `batch_size`;
/// the final short batch is kept.
std::vector<std::vector<std::size_t>> batches(const Dataset& dataset,
                                              std::size_t batch_size,
                                              std::uint64_t epoch_seed);

struct MiniBatch {
    Tensor inputs;
    std::vector<int> labels;
};

/// Gathers a batch. `flatten` produces [N, feature_size] rows for dense
/// networks; otherwise samples keep their spatial shape, with rank-2 images
/// promoted to a single channel [1, H, W].
MiniBatch make_batch(const Dataset& dataset,
                     std::span<const std::size_t> indices, bool flatten);

struct ChannelStats {
    std::vector<double> mean;
    std::vector<double> stddev;
};

/// Per-channel (leading feature axis) statistics for standardization.
ChannelStats compute_channel_stats(const Dataset& dataset);
void apply_standardization(Dataset& dataset, const ChannelStats& stats);

/// One-hot labels padded to `width` columns (width >= dataset classes).
Tensor one_hot(std::span<const int> labels, std::size_t width);

}  // namespace invnet

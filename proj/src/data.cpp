#include "invnet/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "invnet/linalg.hpp"
#include "invnet/rng.hpp"

namespace invnet {

namespace {

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;
constexpr std::size_t kCifarRecordBytes = 3073;  // 1 label + 3*32*32 pixels

std::vector<unsigned char> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open file: " + path);
    }
    return std::vector<unsigned char>(std::istreambuf_iterator<char>(in),
                                      std::istreambuf_iterator<char>());
}

std::uint32_t read_be32(const std::vector<unsigned char>& bytes,
                        std::size_t offset, const std::string& path) {
    if (offset + 4 > bytes.size()) {
        throw IoError(path + ": truncated at byte offset " +
                      std::to_string(offset));
    }
    return (static_cast<std::uint32_t>(bytes[offset]) << 24) |
           (static_cast<std::uint32_t>(bytes[offset + 1]) << 16) |
           (static_cast<std::uint32_t>(bytes[offset + 2]) << 8) |
           static_cast<std::uint32_t>(bytes[offset + 3]);
}

}  // namespace

std::vector<std::size_t> Dataset::feature_shape() const {
    return std::vector<std::size_t>(inputs.shape().begin() + 1,
                                    inputs.shape().end());
}

std::size_t Dataset::feature_size() const {
    return size() == 0 ? 0 : inputs.size() / size();
}

Dataset load_idx(const std::string& images_path,
                 const std::string& labels_path) {
    const std::vector<unsigned char> img = read_file(images_path);
    const std::vector<unsigned char> lbl = read_file(labels_path);

    if (read_be32(img, 0, images_path) != kIdxImagesMagic) {
        throw IoError(images_path + ": bad magic at byte offset 0 (expected " +
                      std::to_string(kIdxImagesMagic) + ")");
    }
    if (read_be32(lbl, 0, labels_path) != kIdxLabelsMagic) {
        throw IoError(labels_path + ": bad magic at byte offset 0 (expected " +
                      std::to_string(kIdxLabelsMagic) + ")");
    }

    const std::size_t n_images = read_be32(img, 4, images_path);
    const std::size_t rows = read_be32(img, 8, images_path);
    const std::size_t cols = read_be32(img, 12, images_path);
    const std::size_t n_labels = read_be32(lbl, 4, labels_path);

    if (n_images != n_labels) {
        throw IoError("image/label count mismatch: " + std::to_string(n_images) +
                      " images vs " + std::to_string(n_labels) + " labels");
    }
    if (n_images == 0 || rows == 0 || cols == 0) {
        throw IoError(images_path + ": empty dimension in header");
    }
    const std::size_t pixel_bytes = n_images * rows * cols;
    if (img.size() != 16 + pixel_bytes) {
        throw IoError(images_path + ": expected " +
                      std::to_string(16 + pixel_bytes) + " bytes, got " +
                      std::to_string(img.size()) + " (truncated at byte offset " +
                      std::to_string(std::min(img.size(), 16 + pixel_bytes)) +
                      ")");
    }
    if (lbl.size() != 8 + n_labels) {
        throw IoError(labels_path + ": expected " + std::to_string(8 + n_labels) +
                      " bytes, got " + std::to_string(lbl.size()));
    }

    Dataset ds;
    ds.inputs = Tensor({n_images, rows, cols});
    for (std::size_t i = 0; i < pixel_bytes; ++i) {
        ds.inputs[i] = static_cast<double>(img[16 + i]) / 255.0;
    }
    ds.labels.resize(n_labels);
    int max_label = 0;
    for (std::size_t i = 0; i < n_labels; ++i) {
        ds.labels[i] = static_cast<int>(lbl[8 + i]);
        max_label = std::max(max_label, ds.labels[i]);
    }
    ds.classes = max_label + 1;
    ds.split = "train";
    return ds;
}

Dataset load_cifar10_batch(const std::string& path) {
    const std::vector<unsigned char> bytes = read_file(path);
    if (bytes.empty() || bytes.size() % kCifarRecordBytes != 0) {
        throw IoError(path + ": size " + std::to_string(bytes.size()) +
                      " is not a multiple of the " +
                      std::to_string(kCifarRecordBytes) + "-byte record length");
    }
    const std::size_t n = bytes.size() / kCifarRecordBytes;

    Dataset ds;
    ds.inputs = Tensor({n, 3, 32, 32});
    ds.labels.resize(n);
    ds.classes = 10;
    for (std::size_t i = 0; i < n; ++i) {
        const unsigned char* rec = bytes.data() + i * kCifarRecordBytes;
        const int label = static_cast<int>(rec[0]);
        if (label < 0 || label > 9) {
            throw IoError(path + ": label " + std::to_string(label) +
                          " out of range in record " + std::to_string(i));
        }
        ds.labels[i] = label;
        double* dst = ds.inputs.data() + i * 3072;
        for (std::size_t p = 0; p < 3072; ++p) {
            dst[p] = static_cast<double>(rec[1 + p]) / 255.0;
        }
    }
    return ds;
}

std::pair<Dataset, Dataset> load_cifar10(const std::string& dir) {
    Dataset train;
    for (int b = 1; b <= 5; ++b) {
        Dataset part =
            load_cifar10_batch(dir + "/data_batch_" + std::to_string(b) + ".bin");
        if (train.size() == 0) {
            train = std::move(part);
        } else {
            const std::size_t old_n = train.size();
            Tensor merged({old_n + part.size(), 3, 32, 32});
            std::copy(train.inputs.data(), train.inputs.data() + train.inputs.size(),
                      merged.data());
            std::copy(part.inputs.data(), part.inputs.data() + part.inputs.size(),
                      merged.data() + train.inputs.size());
            train.inputs = std::move(merged);
            train.labels.insert(train.labels.end(), part.labels.begin(),
                                part.labels.end());
        }
    }
    if (train.size() != 50000) {
        throw IoError(dir + ": expected 50000 training records, got " +
                      std::to_string(train.size()));
    }
    train.split = "train";

    Dataset test = load_cifar10_batch(dir + "/test_batch.bin");
    if (test.size() != 10000) {
        throw IoError(dir + ": expected 10000 test records, got " +
                      std::to_string(test.size()));
    }
    test.split = "test";
    return {std::move(train), std::move(test)};
}

Dataset synthetic_dataset(const SyntheticSpec& spec) {
    if (spec.classes <= 0) {
        throw Error("synthetic_dataset: class count must be positive");
    }
    if (spec.per_class == 0) {
        throw Error("synthetic_dataset: empty dataset (per_class == 0)");
    }
    const std::size_t features = shape_size(spec.feature_shape);
    if (features == 0) {
        throw ShapeError("synthetic_dataset: empty feature shape");
    }

    // Class means are split-independent: orthogonal directions when the
    // feature count allows, otherwise random unit directions.
    Rng mean_rng(mix_seed(spec.seed, 0));
    std::vector<std::vector<double>> means(
        spec.classes, std::vector<double>(features, 0.0));
    if (features >= static_cast<std::size_t>(spec.classes)) {
        Matrix q = orthogonal_init(features, mean_rng.next_u64());
        for (int c = 0; c < spec.classes; ++c) {
            for (std::size_t f = 0; f < features; ++f) {
                means[c][f] = spec.separation * q(f, static_cast<std::size_t>(c));
            }
        }
    } else {
        for (int c = 0; c < spec.classes; ++c) {
            double norm = 0.0;
            for (std::size_t f = 0; f < features; ++f) {
                means[c][f] = mean_rng.normal();
                norm += means[c][f] * means[c][f];
            }
            norm = std::sqrt(norm);
            for (std::size_t f = 0; f < features; ++f) {
                means[c][f] *= spec.separation / norm;
            }
        }
    }

    const std::uint64_t noise_stream = spec.split == "test" ? 2 : 1;
    Rng noise_rng(mix_seed(spec.seed, noise_stream));

    const std::size_t n = spec.per_class * static_cast<std::size_t>(spec.classes);
    std::vector<std::size_t> shape = {n};
    shape.insert(shape.end(), spec.feature_shape.begin(),
                 spec.feature_shape.end());

    Dataset ds;
    ds.inputs = Tensor(shape);
    ds.labels.resize(n);
    ds.classes = spec.classes;
    ds.split = spec.split;
    std::size_t row = 0;
    for (int c = 0; c < spec.classes; ++c) {
        for (std::size_t k = 0; k < spec.per_class; ++k, ++row) {
            double* dst = ds.inputs.data() + row * features;
            for (std::size_t f = 0; f < features; ++f) {
                dst[f] = means[c][f] + noise_rng.normal();
            }
            ds.labels[row] = c;
        }
    }
    return ds;
}

std::vector<std::vector<std::size_t>> batches(const Dataset& dataset,
                                              std::size_t batch_size,
                                              std::uint64_t epoch_seed) {
    if (batch_size == 0) {
        throw Error("batches: batch size must be positive");
    }
    const std::size_t n = dataset.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) {
        order[i] = i;
    }
    Rng rng(epoch_seed);
    for (std::size_t i = n; i > 1; --i) {
        std::swap(order[i - 1], order[rng.index(i)]);
    }

    std::vector<std::vector<std::size_t>> out;
    for (std::size_t start = 0; start < n; start += batch_size) {
        const std::size_t end = std::min(start + batch_size, n);
        out.emplace_back(order.begin() + start, order.begin() + end);
    }
    return out;
}

MiniBatch make_batch(const Dataset& dataset,
                     std::span<const std::size_t> indices, bool flatten) {
    if (indices.empty()) {
        throw Error("make_batch: empty index list");
    }
    const std::size_t fsize = dataset.feature_size();
    std::vector<std::size_t> shape;
    if (flatten) {
        shape = {indices.size(), fsize};
    } else {
        shape.push_back(indices.size());
        std::vector<std::size_t> feature = dataset.feature_shape();
        if (feature.size() == 2) {
            shape.push_back(1);  // single-channel promotion for [H, W] data
        }
        shape.insert(shape.end(), feature.begin(), feature.end());
    }

    MiniBatch batch;
    batch.inputs = Tensor(shape);
    batch.labels.reserve(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const std::size_t idx = indices[i];
        if (idx >= dataset.size()) {
            throw Error("make_batch: index out of range");
        }
        std::copy(dataset.inputs.data() + idx * fsize,
                  dataset.inputs.data() + (idx + 1) * fsize,
                  batch.inputs.data() + i * fsize);
        batch.labels.push_back(dataset.labels[idx]);
    }
    return batch;
}

ChannelStats compute_channel_stats(const Dataset& dataset) {
    const std::vector<std::size_t> feature = dataset.feature_shape();
    const std::size_t channels = feature.empty() ? 1 : feature[0];
    const std::size_t per_channel =
        dataset.feature_size() / std::max<std::size_t>(channels, 1);

    ChannelStats stats;
    stats.mean.assign(channels, 0.0);
    stats.stddev.assign(channels, 0.0);
    const std::size_t n = dataset.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < channels; ++c) {
            const double* src =
                dataset.inputs.data() + (i * channels + c) * per_channel;
            for (std::size_t p = 0; p < per_channel; ++p) {
                stats.mean[c] += src[p];
            }
        }
    }
    const double count = static_cast<double>(n * per_channel);
    for (std::size_t c = 0; c < channels; ++c) {
        stats.mean[c] /= count;
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < channels; ++c) {
            const double* src =
                dataset.inputs.data() + (i * channels + c) * per_channel;
            for (std::size_t p = 0; p < per_channel; ++p) {
                const double d = src[p] - stats.mean[c];
                stats.stddev[c] += d * d;
            }
        }
    }
    for (std::size_t c = 0; c < channels; ++c) {
        stats.stddev[c] = std::sqrt(stats.stddev[c] / count);
        if (stats.stddev[c] == 0.0) {
            stats.stddev[c] = 1.0;
        }
    }
    return stats;
}

void apply_standardization(Dataset& dataset, const ChannelStats& stats) {
    const std::vector<std::size_t> feature = dataset.feature_shape();
    const std::size_t channels = feature.empty() ? 1 : feature[0];
    const std::size_t per_channel =
        dataset.feature_size() / std::max<std::size_t>(channels, 1);
    if (stats.mean.size() != channels) {
        throw ShapeError("apply_standardization: channel count mismatch");
    }
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        for (std::size_t c = 0; c < channels; ++c) {
            double* dst = dataset.inputs.data() + (i * channels + c) * per_channel;
            for (std::size_t p = 0; p < per_channel; ++p) {
                dst[p] = (dst[p] - stats.mean[c]) / stats.stddev[c];
            }
        }
    }
}

Tensor one_hot(std::span<const int> labels, std::size_t width) {
    Tensor out(std::vector<std::size_t>{labels.size(), width});
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int c = labels[i];
        if (c < 0 || static_cast<std::size_t>(c) >= width) {
            throw Error("one_hot: label " + std::to_string(c) +
                        " out of range for width " + std::to_string(width));
        }
        out[i * width + static_cast<std::size_t>(c)] = 1.0;
    }
    return out;
}

}  // namespace invnet

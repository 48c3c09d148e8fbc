#include "invnet/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "invnet/rng.hpp"

namespace invnet {

namespace {

std::string format_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double layer_ortho_residual(const Layer& layer) {
    if (const auto* dense = std::get_if<DenseLayer>(&layer)) {
        return orthogonality_residual(dense->W);
    }
    const auto& conv = std::get<ConvLayer>(layer);
    const std::size_t c_out = conv.out_channels();
    return orthogonality_residual(
        Matrix(conv.kernel.reshaped({c_out, conv.kernel.size() / c_out})));
}

}  // namespace

void MetricsLog::append(long step, long epoch, std::string layer,
                        std::string metric, double value) {
    if (step < last_step_) {
        throw Error("metrics log: step values must be non-decreasing");
    }
    last_step_ = step;
    rows_.push_back(MetricsRow{step, epoch, std::move(layer), std::move(metric),
                               value});
}

std::string MetricsLog::to_csv() const {
    std::string out = "step,epoch,layer,metric,value\n";
    for (const MetricsRow& row : rows_) {
        out += std::to_string(row.step);
        out += ',';
        out += std::to_string(row.epoch);
        out += ',';
        out += row.layer;
        out += ',';
        out += row.metric;
        out += ',';
        out += format_value(row.value);
        out += '\n';
    }
    return out;
}

void MetricsLog::write_csv(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open metrics file for writing: " + path);
    }
    const std::string csv = to_csv();
    out.write(csv.data(), static_cast<std::streamsize>(csv.size()));
    if (!out) {
        throw IoError("failed writing metrics file: " + path);
    }
}

Network build_network(const ExperimentConfig& config) {
    std::vector<std::size_t> shape = config.data.input_shape;
    if (shape.empty()) {
        throw ConfigError("config has no resolved input shape; parse_config "
                          "must be used to build experiment configs");
    }
    if (!config.layers.empty() &&
        config.layers[0].kind == LayerSpec::Kind::conv && shape.size() == 2) {
        shape.insert(shape.begin(), 1);
    }
    if (!config.layers.empty() &&
        config.layers[0].kind == LayerSpec::Kind::dense) {
        shape = {shape_size(shape)};
    }

    Network net(shape, config.precision);
    std::vector<std::size_t> boundary = shape;
    for (std::size_t l = 0; l < config.layers.size(); ++l) {
        const LayerSpec& spec = config.layers[l];
        const std::uint64_t seed = mix_seed(config.seed, 1000 + l);
        if (spec.kind == LayerSpec::Kind::dense) {
            const std::size_t width =
                spec.width > 0 ? spec.width : shape_size(boundary);
            DenseLayer layer = make_dense_layer(
                orthogonal_init(width, seed),
                Tensor(std::vector<std::size_t>{width}), spec.slope);
            boundary = {width};
            net.add(std::move(layer));
        } else {
            if (boundary.size() != 3) {
                throw ConfigError("conv layer " + std::to_string(l + 1) +
                                  " requires a [C, H, W] input");
            }
            const std::size_t c_in = boundary[0];
            const std::size_t c_out = c_in * spec.kernel_h * spec.kernel_w;
            Tensor kernel = orthogonal_init(c_out, seed).tensor().reshaped(
                {c_out, c_in, spec.kernel_h, spec.kernel_w});
            const std::size_t fwd =
                spec.forward_channels > 0 ? spec.forward_channels : c_out;
            ConvLayer layer = make_conv_layer(
                std::move(kernel), Tensor(std::vector<std::size_t>{c_out}),
                spec.stride, spec.slope, fwd, boundary, config.overlap);
            boundary = layer.forward_output_shape();
            net.add(std::move(layer));
        }
    }
    return net;
}

Dataset load_dataset(const DatasetConfig& config, const std::string& split) {
    Dataset ds;
    switch (config.kind) {
        case DatasetConfig::Kind::synthetic: {
            SyntheticSpec spec = config.synthetic;
            spec.split = split;
            if (split == "test") {
                spec.per_class = config.per_class_test > 0
                                     ? config.per_class_test
                                     : std::max<std::size_t>(
                                           1, config.synthetic.per_class / 5);
            }
            ds = synthetic_dataset(spec);
            break;
        }
        case DatasetConfig::Kind::idx: {
            const std::string& images =
                split == "test" ? config.test_images : config.train_images;
            const std::string& labels =
                split == "test" ? config.test_labels : config.train_labels;
            if (images.empty() || labels.empty()) {
                throw ConfigError("idx dataset: missing " + split +
                                  " image/label paths");
            }
            ds = load_idx(images, labels);
            ds.classes = std::max(ds.classes, config.idx_classes);
            ds.split = split;
            break;
        }
        case DatasetConfig::Kind::cifar10: {
            auto [train, test] = load_cifar10(config.dir);
            ds = split == "test" ? std::move(test) : std::move(train);
            break;
        }
    }
    if (config.standardize) {
        apply_standardization(ds, compute_channel_stats(ds));
    }
    return ds;
}

double evaluate(const Network& net, const Dataset& dataset, int top_k) {
    if (dataset.size() == 0) {
        throw Error("evaluate: empty dataset");
    }
    const std::size_t out_width = net.output_size();
    if (top_k < 1 || static_cast<std::size_t>(top_k) > out_width) {
        throw Error("evaluate: top_k must lie in [1, output size]");
    }
    const bool flatten =
        std::holds_alternative<DenseLayer>(net.layer(0));

    std::size_t hits = 0;
    const std::size_t chunk = 512;
    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<std::size_t> ranked(out_width);
    for (std::size_t start = 0; start < dataset.size(); start += chunk) {
        const std::size_t end = std::min(start + chunk, dataset.size());
        const std::span<const std::size_t> idx(order.data() + start,
                                               end - start);
        MiniBatch mb = make_batch(dataset, idx, flatten);
        ForwardCache cache = net.forward(mb.inputs);
        for (std::size_t i = 0; i < idx.size(); ++i) {
            const double* row = cache.logits.data() + i * out_width;
            std::iota(ranked.begin(), ranked.end(), 0);
            std::stable_sort(ranked.begin(), ranked.end(),
                             [row](std::size_t a, std::size_t b) {
                                 return row[a] > row[b];
                             });
            const int label = mb.labels[i];
            for (int k = 0; k < top_k; ++k) {
                if (static_cast<int>(ranked[static_cast<std::size_t>(k)]) ==
                    label) {
                    ++hits;
                    break;
                }
            }
        }
    }
    return static_cast<double>(hits) / static_cast<double>(dataset.size());
}

TrainResult run_training(const ExperimentConfig& config,
                         const TrainOptions& options) {
    const Algorithm algorithm = config.algorithm;
    const bool gp_mode =
        algorithm == Algorithm::gp || algorithm == Algorithm::vgp;

    Dataset train = load_dataset(config.data, "train");
    Dataset test;
    if (!options.measurement_only) {
        test = load_dataset(config.data, "test");
    }

    TrainResult result;
    result.algorithm = to_string(algorithm);

    long step = 0;
    long start_epoch = 0;
    AdamState opt;
    Network net;
    if (options.resume != nullptr) {
        net = options.resume->net;
        opt = options.resume->opt;
        opt.set_options(config.adam);
        step = options.resume->step;
        start_epoch = options.resume->epoch;
        if (options.resume->algorithm != to_string(algorithm)) {
            throw Error("resume checkpoint was trained with algorithm '" +
                        options.resume->algorithm + "', config requests '" +
                        to_string(algorithm) + "'");
        }
    } else {
        net = build_network(config);
        opt = AdamState(static_cast<const Network&>(net).parameters(),
                        config.adam);
    }

    if (train.feature_size() != net.input_size()) {
        throw Error("dataset feature size " +
                    std::to_string(train.feature_size()) +
                    " does not match network input size " +
                    std::to_string(net.input_size()));
    }
    const std::size_t out_width = net.output_size();
    if (static_cast<std::size_t>(train.classes) > out_width) {
        throw Error("dataset has more classes than network outputs");
    }

    FeedbackMatrices feedback;
    if (algorithm == Algorithm::fa) {
        feedback = make_feedback_matrices(net, mix_seed(config.seed, 0xFAFA));
    }

    const bool flatten = std::holds_alternative<DenseLayer>(net.layer(0));
    const bool measure = config.measure_angles || options.measurement_only;
    const GpOptions gp_options = config.gp_options();

    for (long epoch = start_epoch; epoch < config.epochs; ++epoch) {
        const std::vector<std::vector<std::size_t>> epoch_batches = batches(
            train, config.batch_size, mix_seed(config.seed, 0xE000 + epoch));
        for (const std::vector<std::size_t>& batch_idx : epoch_batches) {
            ++step;
            try {
                MiniBatch mb = make_batch(train, batch_idx, flatten);
                Tensor labels = one_hot(mb.labels, out_width);
                ForwardCache cache = net.forward(mb.inputs);
                const double loss = cross_entropy_loss(cache.logits, labels);

                UpdateSet updates;
                TargetState targets;
                bool have_targets = false;
                switch (algorithm) {
                    case Algorithm::bp:
                        updates = bp_backward(net, cache, labels);
                        break;
                    case Algorithm::fa:
                        updates = fa_backward(net, cache, labels, feedback);
                        break;
                    case Algorithm::tp: {
                        Tensor t_out =
                            output_target(cache.logits, labels, config.beta);
                        updates = tp_backward(net, cache, t_out);
                        break;
                    }
                    case Algorithm::vgp:
                    case Algorithm::gp: {
                        Tensor t_out =
                            output_target(cache.logits, labels, config.beta);
                        auto [u, ts] =
                            gp_backward(net, cache, t_out, gp_options);
                        updates = std::move(u);
                        targets = std::move(ts);
                        have_targets = true;
                        break;
                    }
                }

                result.log.append(step, epoch, "all", "loss", loss);

                const bool measuring =
                    measure && ((step - 1) % config.angle_stride == 0);
                if (measuring) {
                    // The BP reference shares the forward cache and is never
                    // applied unless BP is the trainer.
                    const UpdateSet& reference =
                        algorithm == Algorithm::bp
                            ? updates
                            : bp_backward(net, cache, labels);
                    const std::vector<AngleRecord> records = angle_report(
                        updates, reference, step,
                        AngleReportOptions{config.angle_include_bias});
                    for (const AngleRecord& rec : records) {
                        result.log.append(step, epoch,
                                          rec.layer < 0
                                              ? "all"
                                              : std::to_string(rec.layer),
                                          "angle_deg", rec.degrees);
                    }
                    for (std::size_t l = 0; l < net.depth(); ++l) {
                        result.log.append(step, epoch, std::to_string(l),
                                          "ortho_residual",
                                          layer_ortho_residual(net.layer(l)));
                    }
                    if (have_targets) {
                        const std::vector<double> trace =
                            target_distance_trace(targets);
                        for (std::size_t l = 0; l < trace.size(); ++l) {
                            result.log.append(step, epoch, std::to_string(l),
                                              "target_distance", trace[l]);
                        }
                    }
                }

                if (gp_mode && config.kappa > 0.0) {
                    add_orthogonality_updates(net, config.kappa, updates);
                }
                opt.apply(net, updates);
            } catch (const std::exception& e) {
                throw Error("training aborted at step " + std::to_string(step) +
                            " (epoch " + std::to_string(epoch) + "): " +
                            e.what());
            }
        }

        if (!options.measurement_only) {
            result.log.append(step, epoch, "all", "train_acc",
                              evaluate(net, train));
            result.log.append(step, epoch, "all", "test_acc",
                              evaluate(net, test));
        }
    }

    result.net = std::move(net);
    result.opt = std::move(opt);
    result.steps = step;
    return result;
}

}  // namespace invnet

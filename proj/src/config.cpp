#include "invnet/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace invnet {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) {
        ++b;
    }
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) {
        --e;
    }
    return s.substr(b, e - b);
}

double parse_double(const std::string& value, const std::string& key, int line) {
    std::size_t pos = 0;
    double out = 0.0;
    try {
        out = std::stod(value, &pos);
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': expected a number, got '" + value +
                          "'", line);
    }
    if (pos != value.size()) {
        throw ConfigError("key '" + key + "': trailing characters in '" + value +
                          "'", line);
    }
    return out;
}

long parse_long(const std::string& value, const std::string& key, int line) {
    std::size_t pos = 0;
    long out = 0;
    try {
        out = std::stol(value, &pos);
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': expected an integer, got '" +
                          value + "'", line);
    }
    if (pos != value.size()) {
        throw ConfigError("key '" + key + "': trailing characters in '" + value +
                          "'", line);
    }
    return out;
}

std::size_t parse_size(const std::string& value, const std::string& key,
                       int line) {
    const long v = parse_long(value, key, line);
    if (v < 0) {
        throw ConfigError("key '" + key + "': must be non-negative", line);
    }
    return static_cast<std::size_t>(v);
}

std::uint64_t parse_u64(const std::string& value, const std::string& key,
                        int line) {
    std::size_t pos = 0;
    unsigned long long out = 0;
    try {
        out = std::stoull(value, &pos);
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': expected an unsigned integer",
                          line);
    }
    if (pos != value.size()) {
        throw ConfigError("key '" + key + "': trailing characters", line);
    }
    return out;
}

bool parse_bool(const std::string& value, const std::string& key, int line) {
    if (value == "true" || value == "on" || value == "1") {
        return true;
    }
    if (value == "false" || value == "off" || value == "0") {
        return false;
    }
    throw ConfigError("key '" + key + "': expected true/false, got '" + value +
                      "'", line);
}

// "4", "4x4", or "1x16x16".
std::vector<std::size_t> parse_shape(const std::string& value,
                                     const std::string& key, int line) {
    std::vector<std::size_t> out;
    std::string part;
    std::istringstream in(value);
    while (std::getline(in, part, 'x')) {
        out.push_back(parse_size(trim(part), key, line));
    }
    if (out.empty()) {
        throw ConfigError("key '" + key + "': empty shape", line);
    }
    return out;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string shape_text(const std::vector<std::size_t>& shape) {
    std::string out;
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i > 0) {
            out += "x";
        }
        out += std::to_string(shape[i]);
    }
    return out;
}

struct RawEntry {
    std::string value;
    int line = 0;
};

void resolve_input_shape(ExperimentConfig& config) {
    DatasetConfig& data = config.data;
    if (!data.input_shape.empty()) {
        return;
    }
    switch (data.kind) {
        case DatasetConfig::Kind::synthetic:
            data.input_shape = data.synthetic.feature_shape;
            return;
        case DatasetConfig::Kind::cifar10:
            data.input_shape = {3, 32, 32};
            return;
        case DatasetConfig::Kind::idx:
            if (!config.layers.empty() &&
                config.layers[0].kind == LayerSpec::Kind::dense &&
                config.layers[0].width > 0) {
                data.input_shape = {config.layers[0].width};
                return;
            }
            throw ConfigError(
                "key 'input' is required in [data] for idx datasets unless the "
                "first layer is a dense layer with an explicit width");
    }
}

int dataset_classes(const DatasetConfig& data) {
    switch (data.kind) {
        case DatasetConfig::Kind::synthetic:
            return data.synthetic.classes;
        case DatasetConfig::Kind::cifar10:
            return 10;
        case DatasetConfig::Kind::idx:
            return data.idx_classes;
    }
    return 0;
}

void validate(ExperimentConfig& config) {
    if (config.layers.empty()) {
        throw ConfigError("at least one [layer.N] section is required");
    }
    if (!(config.beta > 0.0)) {
        throw ConfigError("key 'beta': must be positive");
    }
    if (config.kappa < 0.0) {
        throw ConfigError("key 'kappa': must be non-negative");
    }
    if (config.norm_power != 1 && config.norm_power != 2) {
        throw ConfigError("key 'norm_power': must be 1 or 2");
    }
    if (config.epochs < 1) {
        throw ConfigError("key 'epochs': must be at least 1");
    }
    if (config.batch_size < 1) {
        throw ConfigError("key 'batch_size': must be at least 1");
    }
    if (config.angle_stride < 1) {
        throw ConfigError("key 'angle_stride': must be at least 1");
    }
    if (!(config.adam.alpha > 0.0)) {
        throw ConfigError("key 'learning_rate': must be positive");
    }
    if (config.algorithm == Algorithm::gp && !config.eta.has_value()) {
        throw ConfigError("algorithm 'gp' requires key 'eta' in [experiment]");
    }
    if (config.algorithm == Algorithm::vgp && !config.gamma.has_value()) {
        throw ConfigError("algorithm 'vgp' requires key 'gamma' in [experiment]");
    }
    if (config.eta.has_value() && !(*config.eta > 0.0)) {
        throw ConfigError("key 'eta': must be positive");
    }
    if (config.gamma.has_value() && !(*config.gamma > 0.0)) {
        throw ConfigError("key 'gamma': must be positive");
    }

    const DatasetConfig& data = config.data;
    if (data.kind == DatasetConfig::Kind::synthetic) {
        if (data.synthetic.classes < 1) {
            throw ConfigError("key 'classes': must be positive");
        }
        if (data.synthetic.per_class == 0) {
            throw ConfigError("key 'per_class': must be positive");
        }
        if (!(data.synthetic.separation > 0.0)) {
            throw ConfigError("key 'separation': must be positive");
        }
    }

    resolve_input_shape(config);

    // Walk the layer chain, resolving implicit sizes and checking every
    // geometry invariant.
    std::vector<std::size_t> shape = config.data.input_shape;
    if (config.layers[0].kind == LayerSpec::Kind::conv && shape.size() == 2) {
        shape.insert(shape.begin(), 1);  // single-channel promotion
    }
    for (std::size_t i = 0; i < config.layers.size(); ++i) {
        LayerSpec& spec = config.layers[i];
        const std::string where = "[layer." + std::to_string(i + 1) + "]";
        if (!(spec.slope > 0.0 && spec.slope < 1.0)) {
            throw ConfigError(where + " key 'slope': must lie in (0, 1)");
        }
        if (spec.kind == LayerSpec::Kind::dense) {
            std::size_t flat = 1;
            for (std::size_t e : shape) {
                flat *= e;
            }
            if (spec.width == 0) {
                spec.width = flat;
            } else if (spec.width != flat) {
                throw ConfigError(where + ": dense layers must be square; width " +
                                  std::to_string(spec.width) +
                                  " does not match incoming size " +
                                  std::to_string(flat));
            }
            shape = {spec.width};
        } else {
            if (shape.size() != 3) {
                throw ConfigError(where + ": conv layers must precede dense "
                                          "layers and require a [C, H, W] input");
            }
            if (spec.kernel_h == 0 || spec.kernel_w == 0) {
                throw ConfigError(where + ": key 'kernel' is required for conv "
                                          "layers");
            }
            const std::size_t c_in = shape[0];
            const std::size_t required = c_in * spec.kernel_h * spec.kernel_w;
            if (spec.out_channels == 0) {
                spec.out_channels = required;
            }
            if (spec.out_channels != required) {
                throw ConfigError(
                    where + ": invertibility constraint violated: out_channels "
                            "must equal C_in*KY*KX = " +
                    std::to_string(required) + ", got " +
                    std::to_string(spec.out_channels));
            }
            if (spec.forward_channels == 0) {
                spec.forward_channels = spec.out_channels;
            }
            if (spec.forward_channels > spec.out_channels) {
                throw ConfigError(where + ": forward_channels exceeds "
                                          "out_channels");
            }
            if (spec.stride == 0 ||
                spec.stride > std::min(spec.kernel_h, spec.kernel_w)) {
                throw ConfigError(where + ": stride must lie in [1, "
                                          "min(kernel extents)]");
            }
            if (shape[1] < spec.kernel_h || shape[2] < spec.kernel_w ||
                (shape[1] - spec.kernel_h) % spec.stride != 0 ||
                (shape[2] - spec.kernel_w) % spec.stride != 0) {
                throw ConfigError(where + ": geometry does not tile exactly "
                                          "(input " + shape_text({shape[1],
                                          shape[2]}) + ", kernel " +
                                  shape_text({spec.kernel_h, spec.kernel_w}) +
                                  ", stride " + std::to_string(spec.stride) +
                                  ")");
            }
            const std::size_t oy = (shape[1] - spec.kernel_h) / spec.stride + 1;
            const std::size_t ox = (shape[2] - spec.kernel_w) / spec.stride + 1;
            shape = {spec.forward_channels, oy, ox};
        }
    }

    std::size_t output = 1;
    for (std::size_t e : shape) {
        output *= e;
    }
    const int classes = dataset_classes(config.data);
    if (static_cast<std::size_t>(classes) > output) {
        throw ConfigError("network output size " + std::to_string(output) +
                          " is smaller than the dataset class count " +
                          std::to_string(classes));
    }
}

}  // namespace

std::string to_string(Algorithm algorithm) {
    switch (algorithm) {
        case Algorithm::bp:
            return "bp";
        case Algorithm::fa:
            return "fa";
        case Algorithm::tp:
            return "tp";
        case Algorithm::vgp:
            return "vgp";
        case Algorithm::gp:
            return "gp";
    }
    return "bp";
}

Algorithm algorithm_from_string(const std::string& name, int line) {
    if (name == "bp") return Algorithm::bp;
    if (name == "fa") return Algorithm::fa;
    if (name == "tp") return Algorithm::tp;
    if (name == "vgp") return Algorithm::vgp;
    if (name == "gp") return Algorithm::gp;
    throw ConfigError("unknown algorithm '" + name +
                      "' (expected bp, fa, tp, vgp or gp)", line);
}

GpOptions ExperimentConfig::gp_options() const {
    GpOptions out;
    out.mode = algorithm == Algorithm::vgp ? GpMode::vanilla : GpMode::normalized;
    out.gamma = gamma.value_or(1e-2);
    out.eta = eta.value_or(1e-4);
    out.norm_power = norm_power;
    return out;
}

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig config;
    std::map<std::size_t, std::pair<LayerSpec, int>> layer_sections;

    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    std::string section;
    std::size_t layer_index = 0;

    auto experiment_key = [&](const std::string& key, const std::string& value,
                              int line) {
        if (key == "algorithm") {
            config.algorithm = algorithm_from_string(value, line);
        } else if (key == "epochs") {
            config.epochs = parse_long(value, key, line);
        } else if (key == "batch_size") {
            config.batch_size = parse_size(value, key, line);
        } else if (key == "seed") {
            config.seed = parse_u64(value, key, line);
        } else if (key == "precision") {
            if (value == "f64") {
                config.precision = Precision::f64;
            } else if (value == "f32") {
                config.precision = Precision::f32;
            } else {
                throw ConfigError("key 'precision': expected f64 or f32", line);
            }
        } else if (key == "beta") {
            config.beta = parse_double(value, key, line);
        } else if (key == "eta") {
            config.eta = parse_double(value, key, line);
        } else if (key == "gamma") {
            config.gamma = parse_double(value, key, line);
        } else if (key == "kappa") {
            config.kappa = parse_double(value, key, line);
        } else if (key == "norm_power") {
            config.norm_power = static_cast<int>(parse_long(value, key, line));
        } else if (key == "learning_rate") {
            config.adam.alpha = parse_double(value, key, line);
        } else if (key == "adam_beta1") {
            config.adam.beta1 = parse_double(value, key, line);
        } else if (key == "adam_beta2") {
            config.adam.beta2 = parse_double(value, key, line);
        } else if (key == "adam_epsilon") {
            config.adam.epsilon = parse_double(value, key, line);
        } else if (key == "measure_angles") {
            config.measure_angles = parse_bool(value, key, line);
        } else if (key == "angle_stride") {
            config.angle_stride = parse_long(value, key, line);
        } else if (key == "angle_include_bias") {
            config.angle_include_bias = parse_bool(value, key, line);
        } else if (key == "overlap_correction") {
            if (value == "subtract") {
                config.overlap = OverlapCorrection::subtract_forward;
            } else if (value == "divide") {
                config.overlap = OverlapCorrection::divide;
            } else {
                throw ConfigError("key 'overlap_correction': expected subtract "
                                  "or divide", line);
            }
        } else {
            throw ConfigError("unknown key '" + key + "' in [experiment]", line);
        }
    };

    auto data_key = [&](const std::string& key, const std::string& value,
                        int line) {
        DatasetConfig& d = config.data;
        if (key == "dataset") {
            if (value == "synthetic") {
                d.kind = DatasetConfig::Kind::synthetic;
            } else if (value == "idx") {
                d.kind = DatasetConfig::Kind::idx;
            } else if (value == "cifar10") {
                d.kind = DatasetConfig::Kind::cifar10;
            } else {
                throw ConfigError("key 'dataset': expected synthetic, idx or "
                                  "cifar10", line);
            }
        } else if (key == "classes") {
            d.synthetic.classes = static_cast<int>(parse_long(value, key, line));
            d.idx_classes = d.synthetic.classes;
        } else if (key == "features") {
            d.synthetic.feature_shape = {parse_size(value, key, line)};
        } else if (key == "shape") {
            d.synthetic.feature_shape = parse_shape(value, key, line);
        } else if (key == "per_class") {
            d.synthetic.per_class = parse_size(value, key, line);
        } else if (key == "per_class_test") {
            d.per_class_test = parse_size(value, key, line);
        } else if (key == "separation") {
            d.synthetic.separation = parse_double(value, key, line);
        } else if (key == "seed") {
            d.synthetic.seed = parse_u64(value, key, line);
        } else if (key == "train_images") {
            d.train_images = value;
        } else if (key == "train_labels") {
            d.train_labels = value;
        } else if (key == "test_images") {
            d.test_images = value;
        } else if (key == "test_labels") {
            d.test_labels = value;
        } else if (key == "dir") {
            d.dir = value;
        } else if (key == "input") {
            d.input_shape = parse_shape(value, key, line);
        } else if (key == "standardize") {
            d.standardize = parse_bool(value, key, line);
        } else {
            throw ConfigError("unknown key '" + key + "' in [data]", line);
        }
    };

    auto layer_key = [&](LayerSpec& spec, const std::string& key,
                         const std::string& value, int line) {
        if (key == "type") {
            if (value == "dense") {
                spec.kind = LayerSpec::Kind::dense;
            } else if (value == "conv") {
                spec.kind = LayerSpec::Kind::conv;
            } else {
                throw ConfigError("key 'type': expected dense or conv", line);
            }
        } else if (key == "width") {
            spec.width = parse_size(value, key, line);
        } else if (key == "kernel") {
            const std::vector<std::size_t> k = parse_shape(value, key, line);
            if (k.size() == 1) {
                spec.kernel_h = k[0];
                spec.kernel_w = k[0];
            } else if (k.size() == 2) {
                spec.kernel_h = k[0];
                spec.kernel_w = k[1];
            } else {
                throw ConfigError("key 'kernel': expected K or KYxKX", line);
            }
        } else if (key == "stride") {
            spec.stride = parse_size(value, key, line);
        } else if (key == "out_channels") {
            spec.out_channels = parse_size(value, key, line);
        } else if (key == "forward_channels") {
            spec.forward_channels = parse_size(value, key, line);
        } else if (key == "slope") {
            spec.slope = parse_double(value, key, line);
        } else {
            throw ConfigError("unknown key '" + key + "' in [layer.N]", line);
        }
    };

    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#' || line[0] == ';') {
            continue;
        }
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ConfigError("malformed section header '" + line + "'",
                                  line_no);
            }
            section = trim(line.substr(1, line.size() - 2));
            if (section == "experiment" || section == "data") {
                continue;
            }
            if (section.rfind("layer.", 0) == 0) {
                const std::string num = section.substr(6);
                std::size_t idx = 0;
                try {
                    idx = std::stoul(num);
                } catch (const std::exception&) {
                    throw ConfigError("malformed layer section '" + section + "'",
                                      line_no);
                }
                if (idx == 0) {
                    throw ConfigError("layer sections are numbered from 1",
                                      line_no);
                }
                layer_index = idx;
                layer_sections.try_emplace(idx, LayerSpec{}, line_no);
                continue;
            }
            throw ConfigError("unknown section [" + section + "]", line_no);
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("expected 'key = value', got '" + line + "'",
                              line_no);
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw ConfigError("empty key or value", line_no);
        }
        if (section == "experiment") {
            experiment_key(key, value, line_no);
        } else if (section == "data") {
            data_key(key, value, line_no);
        } else if (section.rfind("layer.", 0) == 0) {
            layer_key(layer_sections.at(layer_index).first, key, value, line_no);
        } else {
            throw ConfigError("key '" + key + "' outside of any section",
                              line_no);
        }
    }

    config.layers.clear();
    std::size_t expected = 1;
    for (const auto& [idx, entry] : layer_sections) {
        if (idx != expected) {
            throw ConfigError("layer sections must be contiguous from "
                              "[layer.1]; missing [layer." +
                              std::to_string(expected) + "]", entry.second);
        }
        config.layers.push_back(entry.first);
        ++expected;
    }

    validate(config);
    return config;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file: " + path);
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

std::string echo_config(const ExperimentConfig& config) {
    std::ostringstream out;
    out << "[experiment]\n";
    out << "algorithm = " << to_string(config.algorithm) << "\n";
    out << "epochs = " << config.epochs << "\n";
    out << "batch_size = " << config.batch_size << "\n";
    out << "seed = " << config.seed << "\n";
    out << "precision = "
        << (config.precision == Precision::f64 ? "f64" : "f32") << "\n";
    out << "beta = " << format_double(config.beta) << "\n";
    if (config.eta.has_value()) {
        out << "eta = " << format_double(*config.eta) << "\n";
    }
    if (config.gamma.has_value()) {
        out << "gamma = " << format_double(*config.gamma) << "\n";
    }
    out << "kappa = " << format_double(config.kappa) << "\n";
    out << "norm_power = " << config.norm_power << "\n";
    out << "learning_rate = " << format_double(config.adam.alpha) << "\n";
    out << "adam_beta1 = " << format_double(config.adam.beta1) << "\n";
    out << "adam_beta2 = " << format_double(config.adam.beta2) << "\n";
    out << "adam_epsilon = " << format_double(config.adam.epsilon) << "\n";
    out << "measure_angles = " << (config.measure_angles ? "true" : "false")
        << "\n";
    out << "angle_stride = " << config.angle_stride << "\n";
    out << "angle_include_bias = "
        << (config.angle_include_bias ? "true" : "false") << "\n";
    out << "overlap_correction = "
        << (config.overlap == OverlapCorrection::subtract_forward ? "subtract"
                                                                  : "divide")
        << "\n";

    const DatasetConfig& d = config.data;
    out << "\n[data]\n";
    switch (d.kind) {
        case DatasetConfig::Kind::synthetic:
            out << "dataset = synthetic\n";
            out << "classes = " << d.synthetic.classes << "\n";
            out << "shape = " << shape_text(d.synthetic.feature_shape) << "\n";
            out << "per_class = " << d.synthetic.per_class << "\n";
            if (d.per_class_test > 0) {
                out << "per_class_test = " << d.per_class_test << "\n";
            }
            out << "separation = " << format_double(d.synthetic.separation)
                << "\n";
            out << "seed = " << d.synthetic.seed << "\n";
            break;
        case DatasetConfig::Kind::idx:
            out << "dataset = idx\n";
            out << "classes = " << d.idx_classes << "\n";
            if (!d.train_images.empty()) {
                out << "train_images = " << d.train_images << "\n";
                out << "train_labels = " << d.train_labels << "\n";
            }
            if (!d.test_images.empty()) {
                out << "test_images = " << d.test_images << "\n";
                out << "test_labels = " << d.test_labels << "\n";
            }
            break;
        case DatasetConfig::Kind::cifar10:
            out << "dataset = cifar10\n";
            out << "dir = " << d.dir << "\n";
            break;
    }
    if (!d.input_shape.empty()) {
        out << "input = " << shape_text(d.input_shape) << "\n";
    }
    out << "standardize = " << (d.standardize ? "true" : "false") << "\n";

    for (std::size_t i = 0; i < config.layers.size(); ++i) {
        const LayerSpec& spec = config.layers[i];
        out << "\n[layer." << (i + 1) << "]\n";
        if (spec.kind == LayerSpec::Kind::dense) {
            out << "type = dense\n";
            out << "width = " << spec.width << "\n";
        } else {
            out << "type = conv\n";
            out << "kernel = " << spec.kernel_h << "x" << spec.kernel_w << "\n";
            out << "stride = " << spec.stride << "\n";
            out << "out_channels = " << spec.out_channels << "\n";
            out << "forward_channels = " << spec.forward_channels << "\n";
        }
        out << "slope = " << format_double(spec.slope) << "\n";
    }
    return out.str();
}

DatasetConfig parse_dataset_spec(const std::string& spec) {
    const std::size_t colon = spec.find(':');
    const std::string kind = trim(spec.substr(0, colon));

    DatasetConfig d;
    if (kind == "synthetic") {
        d.kind = DatasetConfig::Kind::synthetic;
    } else if (kind == "idx") {
        d.kind = DatasetConfig::Kind::idx;
    } else if (kind == "cifar10") {
        d.kind = DatasetConfig::Kind::cifar10;
    } else {
        throw ConfigError("dataset spec: unknown kind '" + kind + "'");
    }

    if (colon != std::string::npos) {
        std::istringstream in(spec.substr(colon + 1));
        std::string item;
        while (std::getline(in, item, ',')) {
            item = trim(item);
            if (item.empty()) {
                continue;
            }
            const std::size_t eq = item.find('=');
            if (eq == std::string::npos) {
                throw ConfigError("dataset spec: expected key=value, got '" +
                                  item + "'");
            }
            const std::string key = trim(item.substr(0, eq));
            const std::string value = trim(item.substr(eq + 1));
            if (key == "classes") {
                d.synthetic.classes = static_cast<int>(parse_long(value, key, 0));
                d.idx_classes = d.synthetic.classes;
            } else if (key == "features") {
                d.synthetic.feature_shape = {parse_size(value, key, 0)};
            } else if (key == "shape") {
                d.synthetic.feature_shape = parse_shape(value, key, 0);
            } else if (key == "per_class") {
                d.synthetic.per_class = parse_size(value, key, 0);
            } else if (key == "separation") {
                d.synthetic.separation = parse_double(value, key, 0);
            } else if (key == "seed") {
                d.synthetic.seed = parse_u64(value, key, 0);
            } else if (key == "split") {
                if (value != "train" && value != "test") {
                    throw ConfigError("dataset spec: split must be train or "
                                      "test");
                }
                d.synthetic.split = value;
            } else if (key == "images") {
                d.train_images = value;
                d.test_images = value;
            } else if (key == "labels") {
                d.train_labels = value;
                d.test_labels = value;
            } else if (key == "dir") {
                d.dir = value;
            } else {
                throw ConfigError("dataset spec: unknown key '" + key + "'");
            }
        }
    }
    return d;
}

std::string dataset_spec_split(const std::string& spec) {
    const std::size_t pos = spec.find("split=");
    if (pos == std::string::npos) {
        return "test";
    }
    std::string rest = spec.substr(pos + 6);
    const std::size_t comma = rest.find(',');
    if (comma != std::string::npos) {
        rest = rest.substr(0, comma);
    }
    return trim(rest);
}

}  // namespace invnet

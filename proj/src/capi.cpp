#include "invnet.h"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "invnet/checkpoint.hpp"
#include "invnet/config.hpp"
#include "invnet/harness.hpp"

struct invnet_config {
    invnet::ExperimentConfig config;
};

struct invnet_metrics {
    invnet::MetricsLog log;
};

namespace {

thread_local std::string g_last_error;

invnet_status fail(invnet_status status, const std::string& message) {
    g_last_error = message;
    return status;
}

template <typename Fn>
invnet_status guarded(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return INVNET_OK;
    } catch (const invnet::ConfigError& e) {
        return fail(INVNET_ERROR_CONFIG, e.what());
    } catch (const std::exception& e) {
        return fail(INVNET_ERROR_RUNTIME, e.what());
    }
}

invnet_status run(const invnet_config* config, const char* out_dir,
                  invnet_metrics** out_metrics, bool measurement_only) {
    if (config == nullptr) {
        return fail(INVNET_ERROR_CONFIG, "config handle is NULL");
    }
    return guarded([&] {
        invnet::TrainOptions options;
        options.measurement_only = measurement_only;
        invnet::TrainResult result =
            invnet::run_training(config->config, options);
        if (out_dir != nullptr) {
            const std::filesystem::path dir(out_dir);
            std::filesystem::create_directories(dir);
            result.log.write_csv((dir / "metrics.csv").string());
            invnet::Checkpoint ck;
            ck.net = result.net;
            ck.opt = result.opt;
            ck.step = result.steps;
            ck.epoch = config->config.epochs;
            ck.algorithm = result.algorithm;
            invnet::checkpoint_save((dir / "checkpoint.bin").string(), ck);
            std::ofstream echo((dir / "config.txt").string(),
                               std::ios::binary | std::ios::trunc);
            if (!echo) {
                throw invnet::IoError("cannot write config echo");
            }
            echo << invnet::echo_config(config->config);
        }
        if (out_metrics != nullptr) {
            *out_metrics = new invnet_metrics{std::move(result.log)};
        }
    });
}

}  // namespace

extern "C" {

const char* invnet_version(void) { return "0.1.0"; }

const char* invnet_last_error(void) { return g_last_error.c_str(); }

invnet_status invnet_config_parse(const char* text, invnet_config** out) {
    if (text == nullptr || out == nullptr) {
        return fail(INVNET_ERROR_CONFIG, "NULL argument to invnet_config_parse");
    }
    return guarded([&] {
        *out = new invnet_config{invnet::parse_config(text)};
    });
}

invnet_status invnet_config_parse_file(const char* path, invnet_config** out) {
    if (path == nullptr || out == nullptr) {
        return fail(INVNET_ERROR_CONFIG,
                    "NULL argument to invnet_config_parse_file");
    }
    return guarded([&] {
        *out = new invnet_config{invnet::parse_config_file(path)};
    });
}

invnet_status invnet_config_echo(const invnet_config* config, char** out_text) {
    if (config == nullptr || out_text == nullptr) {
        return fail(INVNET_ERROR_CONFIG, "NULL argument to invnet_config_echo");
    }
    return guarded([&] {
        const std::string text = invnet::echo_config(config->config);
        char* buffer = new char[text.size() + 1];
        std::memcpy(buffer, text.c_str(), text.size() + 1);
        *out_text = buffer;
    });
}

void invnet_string_free(char* text) { delete[] text; }

void invnet_config_free(invnet_config* config) { delete config; }

invnet_status invnet_train(const invnet_config* config, const char* out_dir,
                           invnet_metrics** out_metrics) {
    return run(config, out_dir, out_metrics, /*measurement_only=*/false);
}

invnet_status invnet_angles(const invnet_config* config,
                            invnet_metrics** out_metrics) {
    return run(config, nullptr, out_metrics, /*measurement_only=*/true);
}

invnet_status invnet_evaluate(const char* checkpoint_path,
                              const char* dataset_spec, int top_k,
                              double* accuracy) {
    if (checkpoint_path == nullptr || dataset_spec == nullptr ||
        accuracy == nullptr) {
        return fail(INVNET_ERROR_CONFIG, "NULL argument to invnet_evaluate");
    }
    return guarded([&] {
        const invnet::Checkpoint ck = invnet::checkpoint_load(checkpoint_path);
        const invnet::DatasetConfig data =
            invnet::parse_dataset_spec(dataset_spec);
        const invnet::Dataset dataset =
            invnet::load_dataset(data, invnet::dataset_spec_split(dataset_spec));
        *accuracy = invnet::evaluate(ck.net, dataset, top_k);
    });
}

size_t invnet_metrics_rows(const invnet_metrics* metrics) {
    return metrics == nullptr ? 0 : metrics->log.rows().size();
}

invnet_status invnet_metrics_row(const invnet_metrics* metrics, size_t index,
                                 long* step, long* epoch, const char** layer,
                                 const char** metric, double* value) {
    if (metrics == nullptr) {
        return fail(INVNET_ERROR_RUNTIME, "metrics handle is NULL");
    }
    if (index >= metrics->log.rows().size()) {
        return fail(INVNET_ERROR_RUNTIME, "metrics row index out of range");
    }
    const invnet::MetricsRow& row = metrics->log.rows()[index];
    if (step != nullptr) {
        *step = row.step;
    }
    if (epoch != nullptr) {
        *epoch = row.epoch;
    }
    if (layer != nullptr) {
        *layer = row.layer.c_str();
    }
    if (metric != nullptr) {
        *metric = row.metric.c_str();
    }
    if (value != nullptr) {
        *value = row.value;
    }
    g_last_error.clear();
    return INVNET_OK;
}

invnet_status invnet_metrics_write_csv(const invnet_metrics* metrics,
                                       const char* path) {
    if (metrics == nullptr || path == nullptr) {
        return fail(INVNET_ERROR_RUNTIME,
                    "NULL argument to invnet_metrics_write_csv");
    }
    return guarded([&] { metrics->log.write_csv(path); });
}

void invnet_metrics_free(invnet_metrics* metrics) { delete metrics; }

}  // extern "C"

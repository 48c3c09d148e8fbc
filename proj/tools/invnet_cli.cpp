// Command-line front end for the invnet shared library. Everything goes
// through the C API in invnet.h.

#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "invnet.h"

namespace {

int report_failure(invnet_status status, const char* what) {
    std::fprintf(stderr, "invnet %s failed: %s\n", what, invnet_last_error());
    return static_cast<int>(status);
}

struct LayerStats {
    double sum = 0.0;
    std::size_t count = 0;
    double last = 0.0;
};

// Prints final loss/accuracy plus per-layer mean update angles.
void print_summary(const invnet_metrics* metrics) {
    const std::size_t rows = invnet_metrics_rows(metrics);
    std::map<std::string, LayerStats> angles;
    double final_loss = 0.0;
    bool have_loss = false;
    double train_acc = 0.0;
    double test_acc = 0.0;
    bool have_acc = false;
    long steps = 0;

    for (std::size_t i = 0; i < rows; ++i) {
        long step = 0;
        long epoch = 0;
        const char* layer = nullptr;
        const char* metric = nullptr;
        double value = 0.0;
        if (invnet_metrics_row(metrics, i, &step, &epoch, &layer, &metric,
                               &value) != INVNET_OK) {
            continue;
        }
        steps = step;
        const std::string name(metric);
        if (name == "loss") {
            final_loss = value;
            have_loss = true;
        } else if (name == "train_acc") {
            train_acc = value;
            have_acc = true;
        } else if (name == "test_acc") {
            test_acc = value;
        } else if (name == "angle_deg") {
            LayerStats& s = angles[layer];
            s.sum += value;
            s.count += 1;
            s.last = value;
        }
    }

    std::printf("steps: %ld\n", steps);
    if (have_loss) {
        std::printf("final loss: %.6f\n", final_loss);
    }
    if (have_acc) {
        std::printf("train accuracy: %.4f\n", train_acc);
        std::printf("test accuracy: %.4f\n", test_acc);
    }
    for (const auto& [layer, stats] : angles) {
        std::printf("angle_deg layer %s: mean %.4f last %.4f (n=%zu)\n",
                    layer.c_str(), stats.sum / static_cast<double>(stats.count),
                    stats.last, stats.count);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"invnet: invertible-network credit-assignment trainer"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::string checkpoint_path;
    std::string dataset_spec;
    int top_k = 1;

    CLI::App* train = app.add_subcommand("train", "train a network");
    train->add_option("--config", config_path, "experiment config file")
        ->required();
    train->add_option("--out", out_dir,
                      "output directory (metrics.csv, checkpoint.bin, "
                      "config.txt)");

    CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint");
    eval->add_option("--checkpoint", checkpoint_path, "checkpoint file")
        ->required();
    eval->add_option("--dataset", dataset_spec, "dataset selector")->required();
    eval->add_option("--top-k", top_k, "top-k accuracy (default 1)");

    CLI::App* angles =
        app.add_subcommand("angles", "measurement-only run: update angles "
                                     "against the BP reference");
    angles->add_option("--config", config_path, "experiment config file")
        ->required();
    angles->add_option("--out", out_dir, "output directory (metrics.csv)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(INVNET_ERROR_CONFIG);
    }

    if (train->parsed()) {
        invnet_config* config = nullptr;
        invnet_status status =
            invnet_config_parse_file(config_path.c_str(), &config);
        if (status != INVNET_OK) {
            return report_failure(status, "config");
        }
        invnet_metrics* metrics = nullptr;
        status = invnet_train(config,
                              out_dir.empty() ? nullptr : out_dir.c_str(),
                              &metrics);
        invnet_config_free(config);
        if (status != INVNET_OK) {
            return report_failure(status, "train");
        }
        print_summary(metrics);
        if (!out_dir.empty()) {
            std::printf("wrote %s/metrics.csv, checkpoint.bin, config.txt\n",
                        out_dir.c_str());
        }
        invnet_metrics_free(metrics);
        return 0;
    }

    if (eval->parsed()) {
        double accuracy = 0.0;
        const invnet_status status = invnet_evaluate(
            checkpoint_path.c_str(), dataset_spec.c_str(), top_k, &accuracy);
        if (status != INVNET_OK) {
            return report_failure(status, "eval");
        }
        std::printf("top-%d accuracy: %.4f\n", top_k, accuracy);
        return 0;
    }

    // angles
    invnet_config* config = nullptr;
    invnet_status status =
        invnet_config_parse_file(config_path.c_str(), &config);
    if (status != INVNET_OK) {
        return report_failure(status, "config");
    }
    invnet_metrics* metrics = nullptr;
    status = invnet_angles(config, &metrics);
    invnet_config_free(config);
    if (status != INVNET_OK) {
        return report_failure(status, "angles");
    }
    print_summary(metrics);
    if (!out_dir.empty()) {
        const std::string path = out_dir + "/metrics.csv";
        if (invnet_metrics_write_csv(metrics, path.c_str()) == INVNET_OK) {
            std::printf("wrote %s\n", path.c_str());
        }
    }
    invnet_metrics_free(metrics);
    return 0;
}

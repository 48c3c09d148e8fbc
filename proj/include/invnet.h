#ifndef INVNET_H
#define INVNET_H

/*
 * C interface to the invnet training library.
 *
 * All entry points return invnet_status; on failure a thread-local message
 * is available from invnet_last_error(). Handles are opaque and must be
 * released with their matching *_free function.
 */

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef struct invnet_config invnet_config;
typedef struct invnet_metrics invnet_metrics;

/* Status values match the CLI exit codes. */
typedef enum invnet_status {
    INVNET_OK = 0,
    INVNET_ERROR_CONFIG = 2,
    INVNET_ERROR_RUNTIME = 3
} invnet_status;

const char* invnet_version(void);

/* Message from the most recent failing call on this thread ("" if none). */
const char* invnet_last_error(void);

/* Parses and fully validates an experiment config. */
invnet_status invnet_config_parse(const char* text, invnet_config** out);
invnet_status invnet_config_parse_file(const char* path, invnet_config** out);

/* Canonical text form with defaults filled in; free with
 * invnet_string_free. */
invnet_status invnet_config_echo(const invnet_config* config, char** out_text);

void invnet_string_free(char* text);
void invnet_config_free(invnet_config* config);

/* Runs the configured experiment. When out_dir is non-NULL it is created if
 * needed and receives metrics.csv, checkpoint.bin and config.txt. When
 * out_metrics is non-NULL the caller owns the returned handle. */
invnet_status invnet_train(const invnet_config* config, const char* out_dir,
                           invnet_metrics** out_metrics);

/* Measurement-only run: update angles are recorded every angle-stride step
 * while the configured algorithm trains; accuracy evaluation is skipped. */
invnet_status invnet_angles(const invnet_config* config,
                            invnet_metrics** out_metrics);

/* Evaluates a saved checkpoint on a dataset selector such as
 *   synthetic:classes=10,features=64,per_class=100,separation=3,seed=5,split=test
 *   idx:images=<path>,labels=<path>
 *   cifar10:dir=<path>,split=test
 * Accuracy is top-k (top_k >= 1). */
invnet_status invnet_evaluate(const char* checkpoint_path,
                              const char* dataset_spec, int top_k,
                              double* accuracy);

size_t invnet_metrics_rows(const invnet_metrics* metrics);

/* Reads one row. Layer/metric pointers stay valid until the handle is
 * freed or the next invnet_metrics_row call on the same handle. */
invnet_status invnet_metrics_row(const invnet_metrics* metrics, size_t index,
                                 long* step, long* epoch, const char** layer,
                                 const char** metric, double* value);

invnet_status invnet_metrics_write_csv(const invnet_metrics* metrics,
                                       const char* path);
void invnet_metrics_free(invnet_metrics* metrics);

#ifdef __cplusplus
}
#endif

#endif /* INVNET_H */

#ifndef FEDCS_H
#define FEDCS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define FEDCS_MODE_FEDCS 0

#define FEDCS_MODE_FEDLIM 1

#define FEDCS_MODE_VANILLA 2

typedef enum FedcsStatus {
  FEDCS_STATUS_OK = 0,
  FEDCS_STATUS_NULL_POINTER = 1,
  FEDCS_STATUS_INVALID_ARGUMENT = 2,
  FEDCS_STATUS_CONFIG_ERROR = 3,
  FEDCS_STATUS_MODEL_ERROR = 4,
  FEDCS_STATUS_IO_ERROR = 5,
  FEDCS_STATUS_OUT_OF_RANGE = 6,
  /**
   * No run has been executed on this experiment yet.
   */
  FEDCS_STATUS_NOT_RUN = 7,
  FEDCS_STATUS_PANIC = 99,
} FedcsStatus;

/**
 * Opaque experiment handle.
 */
typedef struct FedcsExperiment FedcsExperiment;

/**
 * Outcome of one simulated round.
 */
typedef struct FedcsRoundSummary {
  uint32_t round;
  uint32_t requested;
  uint32_t selected;
  uint32_t aggregated;
  double realized_round_duration;
  double clock_after;
  double accuracy_after;
} FedcsRoundSummary;

/**
 * A client's estimated times for one round, in seconds and Mbit/s.
 */
typedef struct FedcsCandidate {
  /**
   * One-based client id, unique within the array.
   */
  uint32_t id;
  double t_ud;
  double t_ul;
  double throughput;
} FedcsCandidate;

/**
 * Round deadline and fixed costs; `model_size` in Mbit.
 */
typedef struct FedcsBudget {
  double t_round;
  double t_cs;
  double t_agg;
  double model_size;
} FedcsBudget;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next library call on the same thread.
 */
const char *fedcs_last_error(void);

/**
 * Frees a string returned by this library. Null is ignored.
 */
void fedcs_string_free(char *s);

/**
 * The default configuration as pretty-printed JSON. Free with
 * `fedcs_string_free`.
 */
char *fedcs_default_config_json(void);

/**
 * Parses and validates a JSON configuration.
 */
enum FedcsStatus fedcs_experiment_from_json(const char *json, struct FedcsExperiment **out);

/**
 * An experiment with the default configuration.
 */
enum FedcsStatus fedcs_experiment_default(struct FedcsExperiment **out);

/**
 * Releases an experiment. Null is ignored.
 */
void fedcs_experiment_free(struct FedcsExperiment *experiment);

/**
 * Runs one simulation with the configured base settings in `mode`
 * (`FEDCS_MODE_*`) and keeps its records on the handle.
 */
enum FedcsStatus fedcs_experiment_run(struct FedcsExperiment *experiment,
                                      uint32_t mode,
                                      uint64_t seed);

/**
 * Number of rounds recorded by the last run.
 */
enum FedcsStatus fedcs_experiment_round_count(const struct FedcsExperiment *experiment,
                                              size_t *out);

/**
 * Summary of round `index` of the last run.
 */
enum FedcsStatus fedcs_experiment_round(const struct FedcsExperiment *experiment,
                                        size_t index,
                                        struct FedcsRoundSummary *out);

/**
 * All records of the last run as JSON lines. Free with `fedcs_string_free`.
 */
enum FedcsStatus fedcs_experiment_records_jsonl(const struct FedcsExperiment *experiment,
                                                char **out);

/**
 * Greedy client selection over `len` candidates.
 *
 * Writes the chosen ids in upload order to `out_ids` (capacity at least
 * `len`), their number to `out_count`, and the estimated round time to
 * `out_total`.
 */
enum FedcsStatus fedcs_greedy_select(const struct FedcsCandidate *candidates,
                                     size_t len,
                                     const struct FedcsBudget *budget,
                                     uint32_t *out_ids,
                                     size_t *out_count,
                                     double *out_total);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FEDCS_H */

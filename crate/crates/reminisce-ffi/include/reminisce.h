#ifndef REMINISCE_H
#define REMINISCE_H

/* Generated by cbindgen from reminisce-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

#define REM_STATE_COUNT 18

#define REM_LEARNABLE_ACTION_COUNT 6

/**
 * Action index of the rule-triggered choice prompt.
 */
#define REM_ACTION_GIVE_CHOICES 6

typedef enum {
  REM_REWARD_VARIANT_R1 = 0,
  REM_REWARD_VARIANT_R2 = 1,
} RemRewardVariant;

/**
 * Status code of every fallible call. Zero is success, negative is failure.
 */
typedef enum {
  REM_STATUS_OK = 0,
  REM_STATUS_NULL_POINTER = -1,
  REM_STATUS_INVALID_ARGUMENT = -2,
  REM_STATUS_IO = -3,
  REM_STATUS_PARSE = -4,
  REM_STATUS_VALIDATION = -5,
  REM_STATUS_SESSION_FINISHED = -6,
  REM_STATUS_FORCED_CHOICE_REQUIRED = -7,
  REM_STATUS_CHOICE_NOT_FORCED = -8,
} RemStatus;

/**
 * Opaque patient model handle.
 */
typedef struct RemModel RemModel;

/**
 * Opaque action-value table handle.
 */
typedef struct RemQTable RemQTable;

/**
 * Opaque session handle; owns its model copy, reward tables and RNG stream.
 */
typedef struct RemSession RemSession;

/**
 * Training schedule and hyper-parameters.
 */
typedef struct {
  double alpha;
  double gamma;
  double epsilon;
  uint32_t epochs;
  uint32_t episodes_per_epoch;
  uint64_t seed;
  RemRewardVariant reward_variant;
  uint32_t max_rounds;
  uint32_t max_triggers;
} RemTrainConfig;

/**
 * Session construction options.
 */
typedef struct {
  RemRewardVariant reward_variant;
  uint64_t seed;
  uint32_t max_rounds;
  uint32_t max_triggers;
} RemSessionOptions;

/**
 * Result of one session step.
 */
typedef struct {
  /**
   * Canonical index of the state after the step.
   */
  uint32_t next_state;
  /**
   * The same state as its integer triple (response, emotion, confusion).
   */
  int8_t state_code[3];
  double reward;
  bool done;
  /**
   * -1 none, 0 stop, 1 continue, 2 change trigger.
   */
  int32_t choice;
  /**
   * -1 running, 0 stop chosen, 1 round cap, 2 trigger cap.
   */
  int32_t done_reason;
  uint32_t round;
  uint32_t triggers_discussed;
  uint32_t bad_streak;
} RemStepOutcome;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Defaults matching the toolkit's training preset.
 */
RemTrainConfig rem_train_config_default(void);

/**
 * Defaults for a standalone session.
 */
RemSessionOptions rem_session_options_default(void);

/**
 * Generate the bundled default model for a seed.
 *
 * # Safety
 * `out` must be a valid pointer. On success it receives a handle that must
 * be released with [`rem_model_free`].
 */
RemStatus rem_model_default(uint64_t seed, RemModel **out);

/**
 * Parse a model document (the same JSON schema the CLI uses).
 *
 * # Safety
 * `json` must be a NUL-terminated UTF-8 string; `out` must be valid. On
 * success the handle must be released with [`rem_model_free`].
 */
RemStatus rem_model_from_json(const char *json, RemModel **out);

/**
 * Serialize a model to its JSON document.
 *
 * # Safety
 * `model` must be a live handle from this library; `out` must be valid. The
 * returned string must be released with [`rem_string_free`].
 */
RemStatus rem_model_to_json(const RemModel *model, char **out);

/**
 * Run the structural and behavioral checks; writes the violation count.
 *
 * # Safety
 * `model` must be a live handle; `violations` must be a valid pointer.
 */
RemStatus rem_model_validate(const RemModel *model, uint32_t *violations);

/**
 * # Safety
 * `model` must be a handle from this library, not yet freed. `NULL` is a
 * no-op.
 */
void rem_model_free(RemModel *model);

/**
 * # Safety
 * `s` must be a string returned by this library, not yet freed. `NULL` is a
 * no-op.
 */
void rem_string_free(char *s);

/**
 * Run the full training schedule against a model.
 *
 * # Safety
 * `model` must be a live handle; `out` must be valid. On success the handle
 * must be released with [`rem_qtable_free`].
 */
RemStatus rem_train(const RemModel *model, RemTrainConfig config, RemQTable **out);

/**
 * Read one action value.
 *
 * # Safety
 * `q` must be a live handle; `out` must be valid.
 */
RemStatus rem_qtable_value(const RemQTable *q, uint32_t state, uint32_t action, double *out);

/**
 * Greedy action for a state (ties to the lowest action index).
 *
 * # Safety
 * `q` must be a live handle; `out` must be valid.
 */
RemStatus rem_qtable_greedy_action(const RemQTable *q, uint32_t state, uint32_t *out);

/**
 * Serialize a table to the `qtable.json` document.
 *
 * # Safety
 * `q` must be a live handle; `out` must be valid. Release the string with
 * [`rem_string_free`].
 */
RemStatus rem_qtable_to_json(const RemQTable *q, char **out);

/**
 * # Safety
 * `q` must be a handle from this library, not yet freed. `NULL` is a no-op.
 */
void rem_qtable_free(RemQTable *q);

/**
 * Start a session against a copy of the model.
 *
 * # Safety
 * `model` must be a live handle; `out` must be valid. Release with
 * [`rem_session_free`].
 */
RemStatus rem_session_new(const RemModel *model, RemSessionOptions options, RemSession **out);

/**
 * Restart the session from the initial state. The RNG stream continues.
 *
 * # Safety
 * `session` must be a live handle.
 */
RemStatus rem_session_reset(RemSession *session);

/**
 * Canonical index of the current state.
 *
 * # Safety
 * `session` must be a live handle; `out` must be valid.
 */
RemStatus rem_session_current(const RemSession *session, uint32_t *out);

/**
 * Whether the next action must be the choice prompt (index 6).
 *
 * # Safety
 * `session` must be a live handle; `out` must be valid.
 */
RemStatus rem_session_forced_choice_required(const RemSession *session, bool *out);

/**
 * Whether the session has ended.
 *
 * # Safety
 * `session` must be a live handle; `out` must be valid.
 */
RemStatus rem_session_done(const RemSession *session, bool *out);

/**
 * Take one action (0..=5 learnable, 6 the choice prompt when forced).
 *
 * # Safety
 * `session` must be a live handle; `out` must be valid.
 */
RemStatus rem_session_step(RemSession *session, uint32_t action, RemStepOutcome *out);

/**
 * # Safety
 * `session` must be a handle from this library, not yet freed. `NULL` is a
 * no-op.
 */
void rem_session_free(RemSession *session);

/**
 * Exact expected undiscounted return of a fixed policy (18 learnable
 * action indices in canonical state order).
 *
 * # Safety
 * `model` must be a live handle; `actions` must point to 18 readable
 * `uint32_t`; `out` must be valid.
 */
RemStatus rem_exact_policy_value(const RemModel *model,
                                 const uint32_t *actions,
                                 RemRewardVariant variant,
                                 uint32_t max_rounds,
                                 uint32_t max_triggers,
                                 double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* REMINISCE_H */

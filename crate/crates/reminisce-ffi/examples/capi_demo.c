/* Minimal C consumer: generate a model, train a small schedule, query the
 * greedy policy, and run one session. Build (from the repo root):
 *
 *   cargo build -p reminisce-ffi
 *   cc crates/reminisce-ffi/examples/capi_demo.c \
 *      -Icrates/reminisce-ffi/include \
 *      -Ltarget/debug -lreminisce_ffi -lpthread -ldl -lm -o capi_demo
 */
#include <stdio.h>

#include "reminisce.h"

int main(void) {
    RemModel *model = NULL;
    if (rem_model_default(0, &model) != REM_STATUS_OK) {
        fprintf(stderr, "model creation failed\n");
        return 1;
    }

    uint32_t violations = 99;
    rem_model_validate(model, &violations);
    printf("model violations: %u\n", violations);

    RemTrainConfig config = rem_train_config_default();
    config.epochs = 10;
    config.episodes_per_epoch = 10;

    RemQTable *q = NULL;
    if (rem_train(model, config, &q) != REM_STATUS_OK) {
        fprintf(stderr, "training failed\n");
        return 1;
    }

    uint32_t action = 0;
    rem_qtable_greedy_action(q, 2, &action);
    printf("greedy action in the start state: a%u\n", action + 1);

    RemSessionOptions options = rem_session_options_default();
    RemSession *session = NULL;
    rem_session_new(model, options, &session);

    double total = 0.0;
    int steps = 0;
    for (;;) {
        bool done = false;
        rem_session_done(session, &done);
        if (done) break;

        bool forced = false;
        rem_session_forced_choice_required(session, &forced);

        uint32_t state = 0;
        rem_session_current(session, &state);
        uint32_t next_action = forced ? REM_ACTION_GIVE_CHOICES : 0;
        if (!forced) rem_qtable_greedy_action(q, state, &next_action);

        RemStepOutcome outcome;
        if (rem_session_step(session, next_action, &outcome) != REM_STATUS_OK) {
            fprintf(stderr, "step failed\n");
            return 1;
        }
        total += outcome.reward;
        steps++;
    }
    printf("episode: %d steps, return %.2f\n", steps, total);

    rem_session_free(session);
    rem_qtable_free(q);
    rem_model_free(model);
    return 0;
}

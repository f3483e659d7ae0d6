#ifndef POWWOW_H
#define POWWOW_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PwStatus {
  PW_STATUS_OK = 0,
  PW_STATUS_NULL_POINTER = 1,
  PW_STATUS_INVALID_ARGUMENT = 2,
  PW_STATUS_CONFIG = 3,
  PW_STATUS_STATE = 4,
  PW_STATUS_IO = 5,
  PW_STATUS_PARSE = 6,
  PW_STATUS_BUFFER_TOO_SMALL = 7,
  PW_STATUS_PANIC = 8,
  PW_STATUS_OTHER = 9,
} PwStatus;

typedef enum PwOutcome {
  PW_OUTCOME_ONGOING = 0,
  PW_OUTCOME_WIN_A = 1,
  PW_OUTCOME_WIN_B = 2,
  PW_OUTCOME_TIE = 3,
} PwOutcome;

/**
 * A running 2v2 game.
 */
typedef struct PwGame PwGame;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *pw_version(void);

/**
 * Message for the last failed call on this thread, or NULL. Valid until
 * the next call into the library from the same thread.
 */
const char *pw_last_error(void);

/**
 * Starts a game. `config_json` may be NULL for the default config.
 *
 * # Safety
 * `config_json` must be NULL or a valid C string; `out` must be writable.
 */
enum PwStatus pw_game_new(const char *config_json, uint64_t seed, struct PwGame **out_game);

/**
 * # Safety
 * `game` must be NULL or a handle from `pw_game_new`, not yet freed.
 */
void pw_game_free(struct PwGame *game);

/**
 * Advances one step. `actions` holds `n` = 4 action indices
 * (0 stop, 1 up, 2 down, 3 left, 4 right, 5 bomb).
 *
 * # Safety
 * `game` must be a live handle and `actions` must point to `n` values.
 */
enum PwStatus pw_game_step(struct PwGame *game, const uint32_t *actions, size_t n);

/**
 * # Safety
 * `game` must be a live handle; `out_t` must be writable.
 */
enum PwStatus pw_game_time(const struct PwGame *game, uint32_t *out_t);

/**
 * Canonical state hash, equal to the hashes recorded in replays.
 *
 * # Safety
 * `game` must be a live handle; `out_hash` must be writable.
 */
enum PwStatus pw_game_hash(const struct PwGame *game, uint64_t *out_hash);

/**
 * # Safety
 * `game` must be a live handle; `out_outcome` must be writable.
 */
enum PwStatus pw_game_outcome(const struct PwGame *game, enum PwOutcome *out_outcome);

/**
 * # Safety
 * `game` must be a live handle; `out_alive` must be writable.
 */
enum PwStatus pw_game_alive(const struct PwGame *game, uint32_t agent, bool *out_alive);

/**
 * Fills `mask[0..6]` with the actions that do not walk into immediate
 * danger for `agent`.
 *
 * # Safety
 * `game` must be a live handle; `mask` must point to `n` = 6 bools.
 */
enum PwStatus pw_game_action_mask(const struct PwGame *game, uint32_t agent, bool *mask, size_t n);

/**
 * Writes `agent`'s fogged observation as JSON. Pass a NULL buffer to
 * learn the size via `needed` (status `PW_STATUS_BUFFER_TOO_SMALL`).
 *
 * # Safety
 * `game` must be a live handle; `buf` must be NULL or hold `cap` bytes;
 * `needed` may be NULL.
 */
enum PwStatus pw_game_observation_json(const struct PwGame *game,
                                       uint32_t agent,
                                       char *buf,
                                       size_t cap,
                                       size_t *needed);

/**
 * Full authoritative state as JSON; same buffer protocol as
 * `pw_game_observation_json`.
 *
 * # Safety
 * As for `pw_game_observation_json`.
 */
enum PwStatus pw_game_state_json(const struct PwGame *game, char *buf, size_t cap, size_t *needed);

/**
 * Plays one full match. Team specs are policy kinds such as `simple`,
 * `random-no-bomb` or `learned:<checkpoint>`, one for both seats or two
 * separated by a comma.
 *
 * # Safety
 * String arguments must be valid C strings (`config_json` may be NULL);
 * the out pointers must be writable.
 */
enum PwStatus pw_run_match(const char *team_a,
                           const char *team_b,
                           const char *config_json,
                           uint64_t seed,
                           bool comm_a,
                           bool comm_b,
                           enum PwOutcome *out_outcome,
                           uint32_t *out_steps);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* POWWOW_H */

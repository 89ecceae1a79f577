#ifndef COINFLIP_LAB_H
#define COINFLIP_LAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CfStatus {
  CF_STATUS_OK = 0,
  CF_STATUS_NULL_POINTER = 1,
  CF_STATUS_PARSE = 2,
  CF_STATUS_INVARIANT = 3,
  CF_STATUS_DOMAIN = 4,
  CF_STATUS_UNSUPPORTED = 5,
  CF_STATUS_BUFFER_TOO_SMALL = 6,
  CF_STATUS_PANIC = 7,
} CfStatus;

typedef enum CfParty {
  CF_PARTY_ALICE = 0,
  CF_PARTY_BOB = 1,
} CfParty;

typedef enum CfAttackMode {
  CF_ATTACK_MODE_HELSTROM = 0,
  CF_ATTACK_MODE_START_LEMMA = 1,
  CF_ATTACK_MODE_MAIN_LEMMA = 2,
  CF_ATTACK_MODE_SYMMETRIZED = 3,
  CF_ATTACK_MODE_PURIFICATION = 4,
} CfAttackMode;

/**
 * Opaque protocol handle.
 */
typedef struct CfProtocol CfProtocol;

/**
 * Probabilities (or frequencies) of outcome 0, outcome 1 and abort.
 */
typedef struct CfDistribution {
  double zero;
  double one;
  double abort;
} CfDistribution;

typedef struct CfAttackResult {
  /**
   * NaN when the attack claims no analytic value.
   */
  double analytic;
  double exact;
  double exact_abort;
  double empirical;
  double abort;
} CfAttackResult;

typedef struct CfTrajectoryRow {
  double f_a;
  double f_b;
} CfTrajectoryRow;

typedef struct CfFamilyResult {
  double trace_distance;
  double fidelity;
  double bob_success;
  double alice_success;
  double max_bias;
} CfFamilyResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty if none. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *cf_last_error(void);

/**
 * NUL-terminated library version.
 */
const char *cf_version(void);

/**
 * The built-in three-round commit-reveal protocol. Free with `cf_protocol_free`.
 */
struct CfProtocol *cf_protocol_section3(void);

/**
 * Parse a protocol (or state-family) JSON document.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a writable pointer.
 */
enum CfStatus cf_protocol_from_json(const char *json, struct CfProtocol **out);

/**
 * Release a handle. Null is ignored.
 *
 * # Safety
 * `p` must come from this library and not be used afterwards.
 */
void cf_protocol_free(struct CfProtocol *p);

/**
 * Number of communication rounds, or 0 for a null handle.
 *
 * # Safety
 * `p` must be null or a live handle.
 */
size_t cf_protocol_num_rounds(const struct CfProtocol *p);

/**
 * # Safety
 * `p` must be a live handle and `out` writable.
 */
enum CfStatus cf_protocol_exact_distribution(const struct CfProtocol *p,
                                             struct CfDistribution *out);

/**
 * Empirical outcome frequencies of `trials` seeded honest runs.
 *
 * # Safety
 * `p` must be a live handle and `out` writable.
 */
enum CfStatus cf_protocol_simulate(const struct CfProtocol *p,
                                   uint64_t trials,
                                   uint64_t seed,
                                   struct CfDistribution *out);

/**
 * Run a cheating strategy. `round` is used by the main-lemma mode and
 * `delta1`/`delta2` by the symmetrized mode; other modes ignore them.
 *
 * # Safety
 * `p` must be a live handle and `out` writable.
 */
enum CfStatus cf_attack(const struct CfProtocol *p,
                        enum CfParty cheater,
                        enum CfAttackMode mode,
                        uint8_t target,
                        size_t round,
                        double delta1,
                        double delta2,
                        uint64_t trials,
                        uint64_t seed,
                        struct CfAttackResult *out);

/**
 * Branch fidelities for rounds `0..=k`. Writes up to `capacity` rows and
 * stores the required count in `written`; returns `BUFFER_TOO_SMALL` if
 * `capacity < k + 1`. `rows` may be null when `capacity` is 0.
 *
 * # Safety
 * `rows` must point to `capacity` writable rows and `written` be writable.
 */
enum CfStatus cf_trajectory(const struct CfProtocol *p,
                            struct CfTrajectoryRow *rows,
                            size_t capacity,
                            size_t *written);

/**
 * Optimal cheating figures for a state-family JSON document.
 *
 * # Safety
 * `json` must be NUL-terminated and `out` writable.
 */
enum CfStatus cf_family_analyze_json(const char *json, struct CfFamilyResult *out);

/**
 * Smallest round count compatible with bias `epsilon` in (0, 1/4).
 *
 * # Safety
 * `out` must be writable.
 */
enum CfStatus cf_round_lower_bound(double epsilon, size_t *out);

/**
 * Alice's symmetrized success at message weights `(delta1, delta2)`.
 *
 * # Safety
 * `out` must be writable.
 */
enum CfStatus cf_eq2_bound(double delta1, double delta2, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COINFLIP_LAB_H */

#ifndef GRIDTUNE_ENV_PLUGIN_ABI_H
#define GRIDTUNE_ENV_PLUGIN_ABI_H

/* C wire contract for environment shared libraries.
 *
 * Rules of the boundary:
 *  - env_api_version() is checked by the host before any other call.
 *  - All arrays are caller-allocated at the dims the plugin advertises;
 *    no allocation crosses the boundary except via create/destroy.
 *  - Floating point is 64-bit IEEE-754, native endianness.
 *  - A handle is confined to one thread at a time; distinct handles may be
 *    used concurrently. Handle 0 is never valid; operations on destroyed or
 *    unknown handles fail with GRIDTUNE_ENV_BAD_HANDLE rather than crash.
 */

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define GRIDTUNE_ENV_API_VERSION 1u

enum {
  GRIDTUNE_ENV_OK = 0,
  GRIDTUNE_ENV_BAD_HANDLE = 1,
  GRIDTUNE_ENV_BAD_ARGUMENT = 2,
  GRIDTUNE_ENV_FAULT = 3 /* simulation diverged or internal failure */
};

uint32_t env_api_version(void);

/* Parses a UTF-8 config document (same schema as the host run config) and
 * returns a fresh environment handle, or 0 if the document is rejected. */
uint64_t env_create(const char* config_utf8, uint64_t len);

/* Dims are fixed per handle; both return 0 on an invalid handle. */
uint32_t env_obs_dim(uint64_t handle);
uint32_t env_act_dim(uint64_t handle);

int32_t env_reset(uint64_t handle, uint64_t seed, double* obs_out);

int32_t env_step(uint64_t handle, const double* act_in, double* obs_out,
                 double* reward_out, uint8_t* terminated_out,
                 uint8_t* truncated_out);

void env_destroy(uint64_t handle);

#ifdef __cplusplus
}
#endif

#endif /* GRIDTUNE_ENV_PLUGIN_ABI_H */

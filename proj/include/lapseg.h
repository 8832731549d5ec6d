/* lapseg: encoder-decoder segmentation for laparoscopic images.
 *
 * Every function that can fail returns a lapseg_status; on failure,
 * lapseg_last_error() describes what went wrong (thread-local, valid until
 * the next lapseg call on the same thread). Strings returned through out
 * parameters are released with lapseg_string_free().
 */
#ifndef LAPSEG_H
#define LAPSEG_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum lapseg_status {
  LAPSEG_OK = 0,
  LAPSEG_ERR_CONFIG = 2,   /* bad config, shapes, or call contract */
  LAPSEG_ERR_DATA = 3,     /* unreadable or malformed files */
  LAPSEG_ERR_AUDIT = 4,    /* gradient audit failure */
  LAPSEG_ERR_INTERNAL = 5, /* anything else */
} lapseg_status;

const char* lapseg_version(void);
const char* lapseg_last_error(void);
void lapseg_string_free(char* s);

/* A validated run description (JSON, snake_case keys; see the README).
 * Parsing applies per-task defaults, so to_json returns the resolved form. */
typedef struct lapseg_config lapseg_config;

lapseg_status lapseg_config_from_json(const char* json, lapseg_config** out);
lapseg_status lapseg_config_to_json(const lapseg_config* config, char** out_json);
void lapseg_config_free(lapseg_config* config);

/* Executes one run (pretrain, train, eval, predict, remap, stats,
 * gradcheck) to completion. */
lapseg_status lapseg_run(const lapseg_config* config);

/* A checkpoint loaded for inference. */
typedef struct lapseg_model lapseg_model;

lapseg_status lapseg_model_open(const char* checkpoint_path, lapseg_model** out);
void lapseg_model_close(lapseg_model* model);

int64_t lapseg_model_param_count(const lapseg_model* model);
int64_t lapseg_model_num_classes(const lapseg_model* model);
int64_t lapseg_model_epoch(const lapseg_model* model);
const char* lapseg_model_head(const lapseg_model* model); /* "segmentation" | "reconstruction" */

/* Segments one RGB image given as channel-major floats in [0,1] (all R,
 * then all G, then all B; h*w each). mean3/std3 normalize the input; pass
 * NULL for the library defaults. out_labels receives h*w class indices in
 * row-major order. h and w must be multiples of 16, at least 64. */
lapseg_status lapseg_model_segment(lapseg_model* model, const float* rgb_chw, int64_t h,
                                   int64_t w, const float* mean3, const float* std3,
                                   int32_t* out_labels);

#ifdef __cplusplus
}
#endif

#endif /* LAPSEG_H */

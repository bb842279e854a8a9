/*
 * Copyright 2026 The posesynth Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#ifndef POSESYNTH_POSESYNTH_H_
#define POSESYNTH_POSESYNTH_H_

/*
 * C interface to the posesynth library.
 *
 * Every fallible call returns a posesynth_status. On failure the message is
 * available from posesynth_last_error() on the calling thread until the next
 * failing call on that thread. Strings returned through `const char**`
 * out-parameters are owned by the handle they came from and stay valid until
 * that handle is freed or the same getter is called again.
 *
 * Images cross the boundary as planar RGB floats in [-1, 1], laid out
 * [3][height][width]. Poses are 14 joints in canonical order, three floats per
 * joint: x, y, present (0 or 1).
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define POSESYNTH_API __declspec(dllexport)
#else
#define POSESYNTH_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum posesynth_status {
  POSESYNTH_OK = 0,
  POSESYNTH_ERR_INVALID_INPUT = 1,
  POSESYNTH_ERR_DEGENERATE = 2,
  POSESYNTH_ERR_INVALID_STATE = 3,
  POSESYNTH_ERR_IO = 4,
  POSESYNTH_ERR_DECODE = 5,
  POSESYNTH_ERR_FINGERPRINT = 6,
  POSESYNTH_ERR_NUMERIC = 7,
  POSESYNTH_ERR_INTERNAL = 8
} posesynth_status;

#define POSESYNTH_NUM_JOINTS 14
#define POSESYNTH_NUM_LAYERS 11

typedef struct posesynth_model posesynth_model;
typedef struct posesynth_eval_report posesynth_eval_report;

POSESYNTH_API const char* posesynth_version(void);
POSESYNTH_API const char* posesynth_status_name(posesynth_status status);
POSESYNTH_API const char* posesynth_last_error(void);

/* ------------------------------------------------------------------ model */

/* `generator_json` is a generator config document; NULL gives the defaults.
 * `init` is "truncated_normal" or "he_normal"; NULL gives the former. */
POSESYNTH_API posesynth_status posesynth_model_create(const char* generator_json, uint64_t seed, const char* init,
                                                      posesynth_model** out);
/* `vgg19_weights` may be NULL unless the checkpoint's feature profile is vgg19. */
POSESYNTH_API posesynth_status posesynth_model_load(const char* path, const char* vgg19_weights,
                                                    posesynth_model** out);
POSESYNTH_API posesynth_status posesynth_model_save(const posesynth_model* model, const char* path);
POSESYNTH_API void posesynth_model_free(posesynth_model* model);
POSESYNTH_API posesynth_status posesynth_model_resolution(const posesynth_model* model, int* out);
/* Generator config, loss mode, step count, seed and training history. */
POSESYNTH_API posesynth_status posesynth_model_info(posesynth_model* model, const char** json);

/* --------------------------------------------------------------- synthesis */

/* In-memory synthesis at the model resolution. `out_rgb` receives
 * 3 * resolution * resolution floats. */
POSESYNTH_API posesynth_status posesynth_generate(const posesynth_model* model, const float* source_rgb,
                                                  const float* source_pose, const float* target_pose, uint64_t seed,
                                                  float* out_rgb);

/* File-level drivers. Poses are keypoint documents. With a non-NULL
 * `dump_dir`, every intermediate is written there as well. */
POSESYNTH_API posesynth_status posesynth_synth(const posesynth_model* model, const char* source_image,
                                               const char* source_pose, const char* target_pose, uint64_t seed,
                                               const char* out_image, const char* dump_dir);

/* Writes out_dir/frame_NNNN.png per target pose and out_dir/frames.json with
 * the output and background hashes of every frame. With `dump` set, each
 * frame's intermediates go to out_dir/frame_NNNN/. */
POSESYNTH_API posesynth_status posesynth_synth_video(const posesynth_model* model, const char* source_image,
                                                     const char* source_pose, const char* const* target_poses,
                                                     size_t n_poses, uint64_t seed, const char* out_dir, int dump);

/* Writes the 11 layer masks and a colour-coded segmentation.png. */
POSESYNTH_API posesynth_status posesynth_segment(const posesynth_model* model, const char* source_image,
                                                 const char* source_pose, const char* out_dir);

/* ----------------------------------------------------------------- training */

/* Return 0 from the callback to stop after the current step. NaN marks a loss
 * term the mode does not compute. */
typedef int (*posesynth_progress_fn)(int64_t step, double l1, double vgg, double gan_g, double gan_d,
                                     double combined, void* user);

typedef struct posesynth_train_options {
  const char* checkpoint_out; /* NULL: no checkpoint written */
  const char* log_csv;        /* NULL: no log */
  const char* warm_start;     /* vgg checkpoint to start a vgg+gan run from */
  posesynth_progress_fn progress;
  void* user;
} posesynth_train_options;

POSESYNTH_API void posesynth_train_options_init(posesynth_train_options* opts);

/* Full training config document with every key at its default. `desk`
 * selects the workstation profile. The string is thread-local. */
POSESYNTH_API posesynth_status posesynth_default_train_config(int desk, const char** json);

POSESYNTH_API posesynth_status posesynth_train(const char* config_json, const char* manifest,
                                               const posesynth_train_options* opts, posesynth_model** out);

/* --------------------------------------------------------------- evaluation */

/* Source = first frame, targets = remaining frames of each listed video; all
 * videos when `n_videos` is 0. */
POSESYNTH_API posesynth_status posesynth_eval(const posesynth_model* model, const char* manifest,
                                              const char* const* videos, size_t n_videos, uint64_t seed,
                                              posesynth_eval_report** out);
POSESYNTH_API void posesynth_eval_report_free(posesynth_eval_report* report);
POSESYNTH_API posesynth_status posesynth_eval_report_examples(const posesynth_eval_report* report, size_t* out);
/* `metric` is "l1", "vgg_error", "ssim" or "baseline_l1". */
POSESYNTH_API posesynth_status posesynth_eval_report_metric(const posesynth_eval_report* report, const char* metric,
                                                            double* mean, double* std);
/* `which` 0: model images, 1: ground truth; `bins` receives 4 values. */
POSESYNTH_API posesynth_status posesynth_eval_report_histogram(const posesynth_eval_report* report, int which,
                                                               double* bins);
POSESYNTH_API posesynth_status posesynth_eval_report_json(posesynth_eval_report* report, const char** json);
POSESYNTH_API posesynth_status posesynth_eval_report_summary(posesynth_eval_report* report, const char** text);
POSESYNTH_API posesynth_status posesynth_eval_report_write_csv(const posesynth_eval_report* report, const char* path);

/* -------------------------------------------------------------------- data */

/* `spec_json` is a toy figure document; NULL gives the defaults. */
POSESYNTH_API posesynth_status posesynth_toygen(const char* spec_json, int n_videos, int frames_per_video,
                                                const char* out_dir);

/* Test-split video ids of a trained model, comma separated. Empty when the
 * model carries no training history. */
POSESYNTH_API posesynth_status posesynth_model_test_videos(posesynth_model* model, const char** csv);

#ifdef __cplusplus
}
#endif

#endif /* POSESYNTH_POSESYNTH_H_ */

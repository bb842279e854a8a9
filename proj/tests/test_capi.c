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

/* Exercises the shared library through its C header only. */

#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>
#include <sys/stat.h>

#include "posesynth/posesynth.h"

static int failures = 0;

#define EXPECT(cond)                                                               \
  do {                                                                             \
    if (!(cond)) {                                                                 \
      fprintf(stderr, "%s:%d: expectation failed: %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                                  \
    }                                                                              \
  } while (0)

#define EXPECT_OK(call)                                                                                \
  do {                                                                                                 \
    posesynth_status s_ = (call);                                                                      \
    if (s_ != POSESYNTH_OK) {                                                                          \
      fprintf(stderr, "%s:%d: %s -> %s: %s\n", __FILE__, __LINE__, #call, posesynth_status_name(s_), \
              posesynth_last_error());                                                                 \
      ++failures;                                                                                      \
    }                                                                                                  \
  } while (0)

static int file_exists(const char* path) {
  struct stat st;
  return stat(path, &st) == 0;
}

static int stop_after_two(int64_t step, double l1, double vgg, double gan_g, double gan_d, double combined,
                          void* user) {
  (void)vgg;
  (void)gan_g;
  (void)gan_d;
  (void)combined;
  *(int*)user += isfinite(l1) ? 1 : 0;
  return step < 2;
}

int main(int argc, char** argv) {
  if (argc < 2) {
    fprintf(stderr, "usage: %s WORK_DIR\n", argv[0]);
    return 2;
  }
  const char* work = argv[1];
  char path[1024], path2[1024], manifest[1024];

  EXPECT(strcmp(posesynth_version(), "1.0.0") == 0);
  EXPECT(strcmp(posesynth_status_name(POSESYNTH_ERR_FINGERPRINT), "fingerprint mismatch") == 0 ||
         strlen(posesynth_status_name(POSESYNTH_ERR_FINGERPRINT)) > 0);

  /* Errors carry a status and a message. */
  posesynth_model* model = NULL;
  EXPECT(posesynth_model_create("{\"resolution\": 80}", 1, NULL, &model) == POSESYNTH_ERR_INVALID_INPUT);
  EXPECT(model == NULL);
  EXPECT(strstr(posesynth_last_error(), "80") != NULL);
  EXPECT(posesynth_model_create("{not json", 1, NULL, &model) == POSESYNTH_ERR_INVALID_INPUT);
  EXPECT(posesynth_model_create(NULL, 1, "xavier", &model) == POSESYNTH_ERR_INVALID_INPUT);
  snprintf(path, sizeof path, "%s/none.ckpt", work);
  EXPECT(posesynth_model_load(path, NULL, &model) == POSESYNTH_ERR_IO);
  EXPECT(posesynth_model_create(NULL, 1, NULL, NULL) == POSESYNTH_ERR_INVALID_INPUT);

  /* Model lifecycle and in-memory generation. */
  EXPECT_OK(posesynth_model_create("{\"resolution\": 64, \"desk\": true}", 7, "he_normal", &model));
  int res = 0;
  EXPECT_OK(posesynth_model_resolution(model, &res));
  EXPECT(res == 64);
  const char* info = NULL;
  EXPECT_OK(posesynth_model_info(model, &info));
  EXPECT(info != NULL && strstr(info, "\"resolution\"") != NULL);

  static const float layout[POSESYNTH_NUM_JOINTS][2] = {
      {32, 9}, {32, 15}, {26, 17}, {38, 17}, {23, 26}, {41, 26}, {22, 35},
      {42, 35}, {28, 35}, {36, 35}, {28, 45}, {36, 45}, {27, 55}, {37, 55}};
  float pose[POSESYNTH_NUM_JOINTS * 3], moved[POSESYNTH_NUM_JOINTS * 3];
  for (int j = 0; j < POSESYNTH_NUM_JOINTS; ++j) {
    pose[3 * j] = layout[j][0];
    pose[3 * j + 1] = layout[j][1];
    pose[3 * j + 2] = 1.0f;
    moved[3 * j] = layout[j][0] + 3.0f;
    moved[3 * j + 1] = layout[j][1];
    moved[3 * j + 2] = 1.0f;
  }
  const size_t n = 3 * 64 * 64;
  float* src = malloc(n * sizeof(float));
  float* a = malloc(n * sizeof(float));
  float* b = malloc(n * sizeof(float));
  for (size_t i = 0; i < n; ++i) src[i] = (float)((i * 2654435761u) % 1000) / 500.0f - 1.0f;
  EXPECT_OK(posesynth_generate(model, src, pose, moved, 3, a));
  EXPECT_OK(posesynth_generate(model, src, pose, moved, 3, b));
  EXPECT(memcmp(a, b, n * sizeof(float)) == 0);
  float lo = 1, hi = -1;
  for (size_t i = 0; i < n; ++i) {
    lo = a[i] < lo ? a[i] : lo;
    hi = a[i] > hi ? a[i] : hi;
  }
  EXPECT(lo >= -1.0f && hi <= 1.0f);
  moved[0] = NAN;
  EXPECT(posesynth_generate(model, src, pose, moved, 3, a) == POSESYNTH_ERR_INVALID_INPUT);

  snprintf(path, sizeof path, "%s/model.ckpt", work);
  EXPECT_OK(posesynth_model_save(model, path));
  posesynth_model* loaded = NULL;
  EXPECT_OK(posesynth_model_load(path, NULL, &loaded));
  moved[0] = layout[0][0] + 3.0f;
  EXPECT_OK(posesynth_generate(loaded, src, pose, moved, 3, a));
  EXPECT_OK(posesynth_generate(model, src, pose, moved, 3, b));
  EXPECT(memcmp(a, b, n * sizeof(float)) == 0);
  posesynth_model_free(loaded);
  posesynth_model_free(NULL);

  /* Toy data, training with a callback, evaluation. */
  snprintf(path, sizeof path, "%s/toy", work);
  EXPECT_OK(posesynth_toygen(NULL, 4, 4, path));
  snprintf(manifest, sizeof manifest, "%s/toy/manifest.json", work);
  EXPECT(file_exists(manifest));

  const char* defaults = NULL;
  EXPECT_OK(posesynth_default_train_config(1, &defaults));
  EXPECT(defaults != NULL && strstr(defaults, "\"batch_size\": 4") != NULL);
  const char* cfg =
      "{\"generator\": {\"resolution\": 64, \"desk\": true}, \"batch_size\": 2, \"max_steps\": 5, "
      "\"holdout_fraction\": 0.25, \"loss_mode\": \"l1\", \"seed\": 4}";
  posesynth_train_options opts;
  posesynth_train_options_init(&opts);
  int calls = 0;
  opts.progress = stop_after_two;
  opts.user = &calls;
  snprintf(path2, sizeof path2, "%s/loss.csv", work);
  opts.log_csv = path2;
  posesynth_model* trained = NULL;
  EXPECT_OK(posesynth_train(cfg, manifest, &opts, &trained));
  EXPECT(calls == 2);
  EXPECT(file_exists(path2));
  const char* held = NULL;
  EXPECT_OK(posesynth_model_test_videos(trained, &held));
  EXPECT(held != NULL && strlen(held) > 0);
  posesynth_model* rejected = NULL;
  EXPECT(posesynth_train("{\"batch_size\": 0}", manifest, NULL, &rejected) == POSESYNTH_ERR_INVALID_INPUT);
  EXPECT(rejected == NULL);

  posesynth_eval_report* report = NULL;
  const char* vids[1] = {held};
  EXPECT_OK(posesynth_eval(trained, manifest, vids, 1, 0, &report));
  size_t examples = 0;
  EXPECT_OK(posesynth_eval_report_examples(report, &examples));
  EXPECT(examples == 3);
  double mean = -1, sd = -1;
  EXPECT_OK(posesynth_eval_report_metric(report, "ssim", &mean, &sd));
  EXPECT(mean > -1.0 && mean <= 1.0 && sd >= 0.0);
  EXPECT(posesynth_eval_report_metric(report, "psnr", &mean, &sd) == POSESYNTH_ERR_INVALID_INPUT);
  double bins[4];
  EXPECT_OK(posesynth_eval_report_histogram(report, 1, bins));
  EXPECT(fabs(bins[0] + bins[1] + bins[2] + bins[3] - 1.0) < 1e-9);
  const char* text = NULL;
  EXPECT_OK(posesynth_eval_report_summary(report, &text));
  EXPECT(text != NULL && strstr(text, "ssim") != NULL);
  EXPECT_OK(posesynth_eval_report_json(report, &text));
  EXPECT(text != NULL && strstr(text, "baseline_l1") != NULL);
  snprintf(path2, sizeof path2, "%s/examples.csv", work);
  EXPECT_OK(posesynth_eval_report_write_csv(report, path2));
  posesynth_eval_report_free(report);
  const char* bad[1] = {"nope"};
  EXPECT(posesynth_eval(trained, manifest, bad, 1, 0, &report) == POSESYNTH_ERR_INVALID_INPUT);

  /* File-level drivers. */
  char img[1024], kp0[1024], kp1[1024], out[1024];
  snprintf(img, sizeof img, "%s/toy/v000/frame_0000.png", work);
  snprintf(kp0, sizeof kp0, "%s/toy/v000/frame_0000.json", work);
  snprintf(kp1, sizeof kp1, "%s/toy/v000/frame_0003.json", work);
  snprintf(out, sizeof out, "%s/synth.png", work);
  snprintf(path, sizeof path, "%s/dump", work);
  EXPECT_OK(posesynth_synth(trained, img, kp0, kp1, 1, out, path));
  EXPECT(file_exists(out));
  snprintf(path2, sizeof path2, "%s/dump/mask_10.png", work);
  EXPECT(file_exists(path2));
  snprintf(path2, sizeof path2, "%s/dump/mask_11.png", work);
  EXPECT(!file_exists(path2));

  const char* poses[2] = {kp0, kp1};
  snprintf(path, sizeof path, "%s/video", work);
  EXPECT_OK(posesynth_synth_video(trained, img, kp0, poses, 2, 1, path, 0));
  snprintf(path2, sizeof path2, "%s/video/frame_0001.png", work);
  EXPECT(file_exists(path2));
  snprintf(path2, sizeof path2, "%s/video/frames.json", work);
  EXPECT(file_exists(path2));
  EXPECT(posesynth_synth_video(trained, img, kp0, poses, 0, 1, path, 0) == POSESYNTH_ERR_INVALID_INPUT);

  snprintf(path, sizeof path, "%s/segment", work);
  EXPECT_OK(posesynth_segment(trained, img, kp0, path));
  snprintf(path2, sizeof path2, "%s/segment/segmentation.png", work);
  EXPECT(file_exists(path2));

  snprintf(path2, sizeof path2, "%s/missing.png", work);
  EXPECT(posesynth_synth(trained, path2, kp0, kp1, 1, out, NULL) == POSESYNTH_ERR_IO);

  posesynth_model_free(trained);
  posesynth_model_free(model);
  free(src);
  free(a);
  free(b);
  if (failures) fprintf(stderr, "%d expectation(s) failed\n", failures);
  else printf("capi: all expectations passed\n");
  return failures ? 1 : 0;
}

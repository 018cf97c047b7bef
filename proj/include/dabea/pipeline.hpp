#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dabea/basemodels.hpp"
#include "dabea/ensemble.hpp"
#include "dabea/metrics.hpp"
#include "dabea/preprocess.hpp"

namespace dabea {

// Every subcommand below is a pure function of its file inputs and explicit
// seed, so the full pipeline is byte-identical to running the subcommands
// manually with the seeds recorded in the pipeline manifest.

// Stage seeds derived from the master seed. Recorded in pipeline_manifest.txt.
struct StageSeeds {
  std::uint64_t split;
  std::uint64_t augment;
  std::uint64_t synth_base;  // channel c uses synth_base + c
  std::uint64_t bag_train;
  std::uint64_t bag_eval;
  std::uint64_t fuse;
  std::uint64_t stub_base;  // channel c uses stub_base + c
};
StageSeeds derive_stage_seeds(std::uint64_t master);

void cmd_split(const std::string& labels_csv, std::uint64_t seed,
               const std::string& train_out, const std::string& val_out);

void cmd_synth(const std::string& labels_csv, std::size_t k, double strength,
               double noise_sd, std::uint64_t seed, const std::string& model_id,
               const std::string& out_csv);

struct StubTrainArgs {
  std::string images_dir;
  std::string labels_csv;
  std::size_t feature_height = 8;
  std::size_t feature_width = 8;
  bool normalize = false;
  std::size_t epochs = 200;
  double lr0 = 0.01;
  std::string out_model;
};
void cmd_stub_train(const StubTrainArgs& args);

struct StubPredictArgs {
  std::string model_path;
  std::string images_dir;
  std::string labels_csv;  // supplies ids and their order
  AugmentConfig aug;       // aug.clamp_to_ingest_range is derived from normalize
  bool normalize = false;
  std::string model_id;
  std::string out_csv;
};
void cmd_stub_predict(const StubPredictArgs& args);

// Writes <stem>.aug<j>.<ext> for each input image.
struct AugmentArgs {
  std::string input;  // one image file or a directory of .ppm/.dat images
  AugmentConfig aug;
  bool normalize = false;
  std::string format = "dat";  // dat | ppm
  std::string out_dir;
};
void cmd_augment(const AugmentArgs& args);

struct BagArgs {
  std::vector<std::string> prediction_csvs;
  std::size_t n = 100;
  std::uint64_t seed = 0;
  bool renormalize = false;
  std::string ids_from;  // optional labels CSV: subset/reorder to these ids
  std::string out_dat;
  std::string out_manifest;
};
void cmd_bag(const BagArgs& args);

struct FuseTrainArgs {
  std::string bag_dat;
  std::string bag_manifest;
  std::string labels_csv;
  std::size_t epochs = 100;
  double lr = 1e-4;
  std::uint64_t seed = 0;
  bool per_class = false;
  unsigned threads = 1;
  std::string out_weights;
};
void cmd_fuse_train(const FuseTrainArgs& args);

struct FusePredictArgs {
  std::string bag_dat;
  std::string bag_manifest;
  std::string weights_path;
  unsigned threads = 1;
  std::string out_dat;       // fused [N, n, 7] probabilities
  std::string out_manifest;  // image ids sidecar
};
void cmd_fuse_predict(const FusePredictArgs& args);

void cmd_pool(const std::string& fused_dat, const std::string& fused_manifest,
              PoolStrategy strategy, const std::string& out_csv);

// Pooled predictions CSV: `image_id,pred,p0,...,p6`.
void pooled_csv_save(const Predictions& p, const std::string& path);
Predictions pooled_csv_load(const std::string& path);

void cmd_evaluate(const std::string& pooled_csv, const std::string& labels_csv,
                  const std::string& report_txt, const std::string& report_json);

struct PipelineConfig {
  std::string mode = "synth";  // synth | stub | files
  std::string labels;
  std::string images;                       // stub mode
  std::string test_labels;                  // optional held-out set
  std::string test_images;                  // stub mode; defaults to images
  std::vector<std::string> channel_files;   // files mode, one prediction CSV per channel
  std::string output_dir = "out";
  std::string model_set = "norm";  // unnorm | norm | both
  std::size_t k = 10;
  std::size_t n = 100;
  std::size_t epochs = 100;
  double lr = 1e-4;
  std::string pool = "avg";
  std::uint64_t seed = 1;
  unsigned threads = 1;
  // augmentation
  double crop_fraction = 0.875;
  double brightness_delta_max = 32.0;
  double saturation_lo = 0.5;
  double saturation_hi = 1.5;
  double flip_prob = 0.5;
  // synth channels
  double synth_strength = 1.2;
  double synth_noise_sd = 1.0;
  // stub channels
  std::size_t stub_epochs = 200;
  double stub_lr0 = 0.01;
  // extensions
  bool per_class_weights = false;
  bool renormalize = false;

  void validate() const;
};

struct PipelineResult {
  std::string predictions_csv;
  std::string weights_file;
  std::string report_txt;
  std::string report_json;
  std::string manifest;
  double balanced_accuracy = 0.0;
};

// Full run: split -> per-channel predictions over the internal validation
// split -> bag -> fusion training -> per-channel predictions over the scored
// set (test if given, else the validation split) -> bag -> fuse -> pool ->
// predict -> evaluate. Writes every intermediate plus pipeline_manifest.txt
// into output_dir. Stage failures abort with the stage name; the manifest
// records the failure and flags artifacts as partial.
PipelineResult run_pipeline(const PipelineConfig& config);

}  // namespace dabea

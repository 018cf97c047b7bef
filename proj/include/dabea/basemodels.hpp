#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dabea/preprocess.hpp"
#include "dabea/tensor.hpp"

namespace dabea {

// Labeled image ids. Ids are unique; labels are class indices in [0, 7).
struct LabelSet {
  std::vector<std::string> image_ids;
  std::vector<int> labels;
  std::vector<std::string> class_names = default_class_names();

  std::size_t size() const { return image_ids.size(); }
  void validate() const;
  int label_of(const std::string& image_id) const;  // throws on unknown id
};

// Per-image groups of k class-probability rows for one model. Rows for image
// i occupy probs[(i*k + a)*7 ...] with a the augmentation index.
struct PredictionSet {
  std::string model_id;
  std::vector<std::string> image_ids;
  std::size_t k = 0;
  std::vector<double> probs;  // N * k * 7

  std::size_t num_images() const { return image_ids.size(); }
  std::span<const double> row(std::size_t image, std::size_t aug) const {
    return {probs.data() + (image * k + aug) * kNumClasses, kNumClasses};
  }
  void validate() const;  // shapes, finiteness, rows sum to 1 within 1e-6

  // Rows for the given ids, in the given order. Throws on unknown ids.
  PredictionSet subset(const std::vector<std::string>& ids) const;
};

// Multinomial logistic regression over bilinearly downsampled pixels; stands
// in for the heavyweight backbones so the pipeline runs at desk scale.
struct StubModel {
  std::size_t feature_height = 8;
  std::size_t feature_width = 8;
  std::vector<double> weights;  // (feature_height*feature_width*3) x 7, row-major
  std::vector<double> bias;     // 7

  std::size_t feature_dim() const { return feature_height * feature_width * 3; }
  void validate() const;
};

// Staircase decay: lr0 * 0.94^floor(epoch/2).
double lr_schedule(std::size_t epoch, double lr0);

// Bilinear resample to (out_h, out_w), then flatten and scale by 1/255.
std::vector<double> stub_features(const ImageTensor& img, std::size_t out_h,
                                  std::size_t out_w);

struct StubFitOptions {
  std::size_t feature_height = 8;
  std::size_t feature_width = 8;
  std::size_t epochs = 200;
  double lr0 = 0.01;
  std::uint64_t seed = 0;  // reserved; full-batch training is deterministic
};

// Full-batch gradient descent from zero weights (uniform output) under the
// staircase schedule. Warns on single-class data. Requires N >= 7.
StubModel stub_fit(const std::vector<ImageTensor>& images, const LabelSet& labels,
                   const StubFitOptions& opt);

// probs[i][a] = softmax(W' x + b) over each of the k augmented copies.
PredictionSet stub_predict(const StubModel& model,
                           const std::vector<std::vector<ImageTensor>>& augmented_images,
                           const std::vector<std::string>& image_ids,
                           const std::string& model_id);

// Controlled test double: per (image, augmentation) the logits are
// strength * onehot(label) + N(0, noise_sd) drawn from the substream
// (seed, image, augmentation), then softmaxed.
PredictionSet synth_generate(const LabelSet& labels, std::size_t k, double accuracy_strength,
                             double noise_sd, std::uint64_t seed,
                             const std::string& model_id = "synth");

// Prediction CSV: header `image_id,model_id,aug_index,p0,...,p6`; rows for one
// image contiguous and sorted by aug_index; one model_id per file. Rows must
// sum to 1 within 1e-6 unless renormalize is set.
PredictionSet load_predictions(const std::string& path, bool renormalize = false);
void save_predictions(const PredictionSet& set, const std::string& path);

// Label CSV: header `image_id,label`; label is a class index or a class name.
LabelSet load_labels(const std::string& path);
void save_labels(const LabelSet& labels, const std::string& path);

// Stratified 90:10 split: per class c, validation receives
// round(0.1 * N_c) samples (at least 1 when N_c >= 2), drawn from a per-class
// substream. Both outputs preserve the input ordering.
std::pair<LabelSet, LabelSet> split_90_10(const LabelSet& labels, std::uint64_t seed);

// Stub-model text file.
void stub_model_save(const StubModel& model, const std::string& path);
StubModel stub_model_load(const std::string& path);

}  // namespace dabea

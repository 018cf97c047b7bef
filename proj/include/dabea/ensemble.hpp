#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dabea/basemodels.hpp"
#include "dabea/tensor.hpp"

namespace dabea {

// N x 7 x n x M tensor of bagged class probabilities: for image i, class c,
// bag slot j and model channel m, values[((i*7 + c)*n + j)*M + m].
struct BagTensor {
  std::vector<std::string> image_ids;
  std::size_t n = 0;  // bag slots per image
  std::size_t m = 0;  // model channels
  std::vector<std::string> source_model_ids;
  std::vector<double> values;  // N * 7 * n * M

  std::size_t num_images() const { return image_ids.size(); }
  double at(std::size_t i, std::size_t c, std::size_t j, std::size_t ch) const {
    return values[((i * kNumClasses + c) * n + j) * m + ch];
  }
  void validate() const;
};

// Parameters of the 1x1 convolution that fuses the M model channels. In the
// default shared mode a single weight per channel plus one bias is applied
// to every class and slot (M+1 parameters). The per-class extension keeps
// independent weights and biases per class (M*7 + 7 parameters).
struct FusionWeights {
  std::size_t channels = 0;
  bool per_class = false;
  std::vector<double> w;  // shared: M; per-class: M*7, w[m*7 + c]
  std::vector<double> b;  // shared: 1; per-class: 7

  static FusionWeights equal_init(std::size_t channels, bool per_class = false);
  std::size_t param_count() const { return w.size() + b.size(); }
  void validate() const;
};

// Standard Adam accumulator state over a flat parameter vector.
struct AdamState {
  std::vector<double> m1, m2;
  std::size_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  explicit AdamState(std::size_t params) : m1(params, 0.0), m2(params, 0.0) {}
};

// One Adam update in place. Throws NumericError on non-finite gradients.
void adam_step(AdamState& state, std::vector<double>& params,
               const std::vector<double>& grad, double lr);

enum class PoolStrategy { avg, max, extreme };
PoolStrategy pool_strategy_from_string(const std::string& s);
std::string to_string(PoolStrategy s);

// N x 7 class-probability matrix after pooling the n bag slots.
struct PooledOutput {
  std::vector<std::string> image_ids;
  std::vector<double> probs;  // N * 7, rows sum to 1 within 1e-9
  PoolStrategy strategy = PoolStrategy::avg;

  std::size_t num_images() const { return image_ids.size(); }
  std::span<const double> row(std::size_t i) const {
    return {probs.data() + i * kNumClasses, kNumClasses};
  }
};

// Bags n output vectors per image from each model's k augmented predictions,
// sampling with replacement from the substream (seed, image, slot, model).
// Slot 0 always holds augmentation 0, the deterministic clean view. All sets
// must share image ids (same order) and k.
BagTensor bag(const std::vector<PredictionSet>& sets, std::size_t n, std::uint64_t seed);

// z[i,j,c] = sum_m w[m] * bag[i,c,j,m] + b, softmaxed over classes. Returns
// an [N, n, 7] array. Parallelizable over images; the per-image work is
// independent so results are identical for any thread count.
DenseArray fusion_forward(const BagTensor& bag, const FusionWeights& fw,
                          unsigned threads = 1);

// Mean cross entropy over all N*n (image, slot) pairs.
double fusion_loss(const BagTensor& bag, const LabelSet& labels, const FusionWeights& fw,
                   unsigned threads = 1);

// Analytic gradient, packed as [w..., b...]. In shared mode the bias gradient
// is identically zero: the logit shift b cancels inside the softmax, so it is
// emitted as an exact 0. Per-image partials are reduced in fixed image order,
// making the result bitwise-identical for any thread count.
std::vector<double> fusion_grad(const BagTensor& bag, const LabelSet& labels,
                                const FusionWeights& fw, unsigned threads = 1);

struct FuseTrainOptions {
  std::size_t epochs = 100;
  double lr = 1e-4;
  std::uint64_t seed = 0;  // recorded in the weights file; training is deterministic
  bool per_class = false;
  unsigned threads = 1;
};

struct FuseTrainResult {
  FusionWeights weights;
  std::vector<double> loss_history;  // epochs+1 entries: initial .. final
};

// Full-batch Adam from the equal-weight initialization (w = 1/M, b = 0).
FuseTrainResult fuse_train(const BagTensor& bag, const LabelSet& labels,
                           const FuseTrainOptions& opt);

// Reduces the n per-slot rows of each image to one probability row.
//   avg:     slot mean; summands are accumulated in value-sorted order, so
//            the result is bitwise-independent of slot ordering
//   max:     per-class maximum, row renormalized
//   extreme: per class, the slot value farthest from the uniform prior 1/7
//            (ties to the lowest slot), row renormalized
PooledOutput pool(const DenseArray& probs, const std::vector<std::string>& image_ids,
                  PoolStrategy strategy);

struct Predictions {
  std::vector<std::string> image_ids;
  std::vector<std::size_t> classes;   // argmax per image, ties to lowest index
  std::vector<double> scores;         // N * 7 per-class scores (= pooled probs)
  std::vector<unsigned char> binary;  // N * 7 hard calls at threshold 0.5
};

Predictions predict(const PooledOutput& pooled);

// Weights file: `key = value` text with format version, channel count,
// source model ids and training metadata.
struct FusionWeightsFile {
  FusionWeights weights;
  std::vector<std::string> model_ids;
  std::size_t epochs = 0;
  double lr = 0.0;
  std::uint64_t seed = 0;
};
void fusion_weights_save(const FusionWeightsFile& f, const std::string& path);
FusionWeightsFile fusion_weights_load(const std::string& path);

// BagTensor persistence: DAT1 tensor of shape (N, 7, n*M) plus a JSON sidecar
// manifest carrying n, M, model ids and image ids.
void bag_save(const BagTensor& bag, const std::string& dat_path,
              const std::string& manifest_path);
BagTensor bag_load(const std::string& dat_path, const std::string& manifest_path);

}  // namespace dabea

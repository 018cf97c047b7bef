#include "dabea/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "dabea/error.hpp"
#include "dabea/tensor_io.hpp"
#include "text_util.hpp"

namespace dabea {

using detail::fmt_double;
using detail::parse_double;
using detail::parse_long;

void BagTensor::validate() const {
  if (num_images() == 0) throw ValidationError("BagTensor: empty bag");
  if (n < 1 || m < 1) throw ValidationError("BagTensor: n and M must be >= 1");
  if (source_model_ids.size() != m)
    throw ValidationError("BagTensor: model id count does not match M");
  if (values.size() != num_images() * kNumClasses * n * m)
    throw ValidationError("BagTensor: value buffer does not match N*7*n*M");
  for (std::size_t i = 0; i < num_images(); ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t ch = 0; ch < m; ++ch) {
        double sum = 0.0;
        for (std::size_t c = 0; c < kNumClasses; ++c) {
          const double v = at(i, c, j, ch);
          if (!std::isfinite(v)) throw NumericError("BagTensor: non-finite value");
          sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-6)
          throw ValidationError("BagTensor: class slice does not sum to 1 (image " +
                                image_ids[i] + ")");
      }
}

FusionWeights FusionWeights::equal_init(std::size_t channels, bool per_class) {
  FusionWeights fw;
  fw.channels = channels;
  fw.per_class = per_class;
  const double v = 1.0 / static_cast<double>(channels);
  fw.w.assign(per_class ? channels * kNumClasses : channels, v);
  fw.b.assign(per_class ? kNumClasses : 1, 0.0);
  return fw;
}

void FusionWeights::validate() const {
  if (channels < 1) throw ValidationError("FusionWeights: channels must be >= 1");
  const std::size_t want_w = per_class ? channels * kNumClasses : channels;
  const std::size_t want_b = per_class ? kNumClasses : 1;
  if (w.size() != want_w || b.size() != want_b)
    throw ValidationError("FusionWeights: parameter vector sizes do not match mode");
  for (double v : w)
    if (!std::isfinite(v)) throw NumericError("FusionWeights: non-finite weight");
  for (double v : b)
    if (!std::isfinite(v)) throw NumericError("FusionWeights: non-finite bias");
}

void adam_step(AdamState& state, std::vector<double>& params,
               const std::vector<double>& grad, double lr) {
  if (params.size() != state.m1.size() || grad.size() != state.m1.size())
    throw ValidationError("adam_step: parameter/gradient size mismatch");
  for (double g : grad)
    if (!std::isfinite(g)) throw NumericError("adam_step: non-finite gradient");
  ++state.t;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m1[i] = state.beta1 * state.m1[i] + (1.0 - state.beta1) * grad[i];
    state.m2[i] = state.beta2 * state.m2[i] + (1.0 - state.beta2) * grad[i] * grad[i];
    const double m_hat = state.m1[i] / c1;
    const double v_hat = state.m2[i] / c2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
}

PoolStrategy pool_strategy_from_string(const std::string& s) {
  if (s == "avg") return PoolStrategy::avg;
  if (s == "max") return PoolStrategy::max;
  if (s == "extreme") return PoolStrategy::extreme;
  throw ValidationError("unknown pooling strategy '" + s + "' (avg, max, extreme)");
}

std::string to_string(PoolStrategy s) {
  switch (s) {
    case PoolStrategy::avg: return "avg";
    case PoolStrategy::max: return "max";
    case PoolStrategy::extreme: return "extreme";
  }
  return "avg";
}

BagTensor bag(const std::vector<PredictionSet>& sets, std::size_t n, std::uint64_t seed) {
  if (sets.empty()) throw ValidationError("bag: need at least one prediction set");
  if (n < 1) throw ValidationError("bag: n must be >= 1");
  for (const auto& s : sets) s.validate();
  const auto& first = sets.front();
  for (const auto& s : sets) {
    if (s.image_ids != first.image_ids)
      throw ValidationError("bag: prediction sets do not share the same image ids/order ('" +
                            s.model_id + "' vs '" + first.model_id + "')");
    if (s.k != first.k)
      throw ValidationError("bag: prediction sets do not share k ('" + s.model_id + "' has " +
                            std::to_string(s.k) + ", '" + first.model_id + "' has " +
                            std::to_string(first.k) + ")");
  }

  BagTensor out;
  out.image_ids = first.image_ids;
  out.n = n;
  out.m = sets.size();
  for (const auto& s : sets) out.source_model_ids.push_back(s.model_id);
  out.values.resize(out.num_images() * kNumClasses * n * out.m);

  const std::size_t k = first.k;
  for (std::size_t i = 0; i < out.num_images(); ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t ch = 0; ch < out.m; ++ch) {
        std::size_t a = 0;  // slot 0 is the clean view for every model
        if (j > 0) {
          Rng rng = Rng::substream(seed, {i, j, ch});
          a = rng.uniform_index(k);
        }
        const auto src = sets[ch].row(i, a);
        for (std::size_t c = 0; c < kNumClasses; ++c)
          out.values[((i * kNumClasses + c) * n + j) * out.m + ch] = src[c];
      }
  return out;
}

namespace {

void parallel_over_images(std::size_t count, unsigned threads,
                          const std::function<void(std::size_t, std::size_t)>& run_range) {
  if (threads <= 1 || count < 2) {
    run_range(0, count);
    return;
  }
  const unsigned workers = static_cast<unsigned>(
      std::min<std::size_t>(threads, count));
  const std::size_t chunk = (count + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&, begin, end] { run_range(begin, end); });
  }
  for (auto& t : pool) t.join();
}

// logits for one (image, slot) cell
inline void cell_logits(const BagTensor& bag, const FusionWeights& fw, std::size_t i,
                        std::size_t j, double* z) {
  const std::size_t n = bag.n, m = bag.m;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const double* cell = bag.values.data() + ((i * kNumClasses + c) * n + j) * m;
    double acc = fw.per_class ? fw.b[c] : fw.b[0];
    if (fw.per_class) {
      for (std::size_t ch = 0; ch < m; ++ch) acc += fw.w[ch * kNumClasses + c] * cell[ch];
    } else {
      for (std::size_t ch = 0; ch < m; ++ch) acc += fw.w[ch] * cell[ch];
    }
    z[c] = acc;
  }
}

std::vector<int> labels_for_bag(const BagTensor& bag, const LabelSet& labels) {
  labels.validate();
  std::unordered_map<std::string, int> map;
  for (std::size_t i = 0; i < labels.size(); ++i) map.emplace(labels.image_ids[i], labels.labels[i]);
  std::vector<int> out(bag.num_images());
  std::string missing;
  for (std::size_t i = 0; i < bag.num_images(); ++i) {
    const auto it = map.find(bag.image_ids[i]);
    if (it == map.end()) {
      if (!missing.empty()) missing += ", ";
      missing += bag.image_ids[i];
    } else {
      out[i] = it->second;
    }
  }
  if (!missing.empty())
    throw ValidationError("labels missing for: " + missing);
  return out;
}

// Per-image loss and gradient partials, reduced over images in fixed order so
// the result does not depend on the thread count.
std::pair<double, std::vector<double>> grad_and_loss(const BagTensor& bag,
                                                     const LabelSet& labels,
                                                     const FusionWeights& fw,
                                                     unsigned threads) {
  bag.validate();
  fw.validate();
  if (fw.channels != bag.m)
    throw ValidationError("fusion: weight channel count does not match bag M");
  const std::vector<int> lab = labels_for_bag(bag, labels);

  const std::size_t N = bag.num_images(), n = bag.n, m = bag.m;
  const std::size_t pw = fw.w.size(), pb = fw.b.size();
  std::vector<double> partial_loss(N, 0.0);
  std::vector<double> partial_grad(N * (pw + pb), 0.0);

  parallel_over_images(N, threads, [&](std::size_t begin, std::size_t end) {
    double z[kNumClasses];
    for (std::size_t i = begin; i < end; ++i) {
      double* g = partial_grad.data() + i * (pw + pb);
      const auto y = static_cast<std::size_t>(lab[i]);
      for (std::size_t j = 0; j < n; ++j) {
        cell_logits(bag, fw, i, j, z);
        const auto p = softmax({z, kNumClasses});
        partial_loss[i] += cross_entropy(p, y);
        for (std::size_t c = 0; c < kNumClasses; ++c) {
          const double r = p[c] - (c == y ? 1.0 : 0.0);
          const double* cell = bag.values.data() + ((i * kNumClasses + c) * n + j) * m;
          if (fw.per_class) {
            for (std::size_t ch = 0; ch < m; ++ch) g[ch * kNumClasses + c] += r * cell[ch];
            g[pw + c] += r;
          } else {
            for (std::size_t ch = 0; ch < m; ++ch) g[ch] += r * cell[ch];
          }
        }
      }
    }
  });

  const double scale = 1.0 / static_cast<double>(N * n);
  double loss = 0.0;
  std::vector<double> grad(pw + pb, 0.0);
  for (std::size_t i = 0; i < N; ++i) {
    loss += partial_loss[i];
    const double* g = partial_grad.data() + i * (pw + pb);
    for (std::size_t p = 0; p < pw + pb; ++p) grad[p] += g[p];
  }
  loss *= scale;
  for (double& g : grad) g *= scale;
  // Shared-mode bias shifts every class logit equally, so the loss does not
  // depend on it: the gradient is identically zero.
  if (!fw.per_class) grad[pw] = 0.0;
  return {loss, std::move(grad)};
}

}  // namespace

DenseArray fusion_forward(const BagTensor& bag, const FusionWeights& fw, unsigned threads) {
  bag.validate();
  fw.validate();
  if (fw.channels != bag.m)
    throw ValidationError("fusion_forward: weight channel count does not match bag M");
  const std::size_t N = bag.num_images(), n = bag.n;
  DenseArray out({N, n, kNumClasses});
  parallel_over_images(N, threads, [&](std::size_t begin, std::size_t end) {
    double z[kNumClasses];
    for (std::size_t i = begin; i < end; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        cell_logits(bag, fw, i, j, z);
        const auto p = softmax({z, kNumClasses});
        std::copy(p.begin(), p.end(), out.data() + (i * n + j) * kNumClasses);
      }
  });
  return out;
}

double fusion_loss(const BagTensor& bag, const LabelSet& labels, const FusionWeights& fw,
                   unsigned threads) {
  return grad_and_loss(bag, labels, fw, threads).first;
}

std::vector<double> fusion_grad(const BagTensor& bag, const LabelSet& labels,
                                const FusionWeights& fw, unsigned threads) {
  return grad_and_loss(bag, labels, fw, threads).second;
}

FuseTrainResult fuse_train(const BagTensor& bag, const LabelSet& labels,
                           const FuseTrainOptions& opt) {
  bag.validate();
  FuseTrainResult result;
  result.weights = FusionWeights::equal_init(bag.m, opt.per_class);
  const std::size_t pw = result.weights.w.size();

  std::vector<double> params(result.weights.w);
  params.insert(params.end(), result.weights.b.begin(), result.weights.b.end());
  AdamState adam(params.size());

  result.loss_history.reserve(opt.epochs + 1);
  for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
    auto [loss, grad] = grad_and_loss(bag, labels, result.weights, opt.threads);
    result.loss_history.push_back(loss);
    adam_step(adam, params, grad, opt.lr);
    std::copy(params.begin(), params.begin() + static_cast<long>(pw),
              result.weights.w.begin());
    std::copy(params.begin() + static_cast<long>(pw), params.end(),
              result.weights.b.begin());
  }
  result.loss_history.push_back(fusion_loss(bag, labels, result.weights, opt.threads));
  return result;
}

PooledOutput pool(const DenseArray& probs, const std::vector<std::string>& image_ids,
                  PoolStrategy strategy) {
  if (probs.rank() != 3 || probs.shape()[2] != kNumClasses)
    throw ValidationError("pool: expected an [N, n, 7] array");
  const std::size_t N = probs.shape()[0], n = probs.shape()[1];
  if (image_ids.size() != N) throw ValidationError("pool: id count does not match N");
  if (n == 0) throw ValidationError("pool: n must be >= 1");

  PooledOutput out;
  out.image_ids = image_ids;
  out.strategy = strategy;
  out.probs.resize(N * kNumClasses);

  std::vector<double> slot_vals(n);
  for (std::size_t i = 0; i < N; ++i) {
    double row[kNumClasses];
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      for (std::size_t j = 0; j < n; ++j) slot_vals[j] = probs[(i * n + j) * kNumClasses + c];
      switch (strategy) {
        case PoolStrategy::avg: {
          // summed in sorted order: the mean is then bitwise-independent of
          // how the slots happen to be ordered
          std::sort(slot_vals.begin(), slot_vals.end());
          double sum = 0.0;
          for (double v : slot_vals) sum += v;
          row[c] = sum / static_cast<double>(n);
          break;
        }
        case PoolStrategy::max:
          row[c] = *std::max_element(slot_vals.begin(), slot_vals.end());
          break;
        case PoolStrategy::extreme: {
          std::size_t best = 0;
          const double prior = 1.0 / static_cast<double>(kNumClasses);
          for (std::size_t j = 1; j < n; ++j)
            if (std::abs(slot_vals[j] - prior) > std::abs(slot_vals[best] - prior)) best = j;
          row[c] = slot_vals[best];
          break;
        }
      }
    }
    if (strategy != PoolStrategy::avg) {
      double sum = 0.0;
      for (double v : row) sum += v;
      if (sum <= 0.0) throw NumericError("pool: row sums to 0, cannot renormalize");
      for (double& v : row) v /= sum;
    }
    std::copy(row, row + kNumClasses, out.probs.begin() + static_cast<long>(i * kNumClasses));
  }
  return out;
}

Predictions predict(const PooledOutput& pooled) {
  Predictions out;
  out.image_ids = pooled.image_ids;
  out.scores = pooled.probs;
  out.classes.resize(pooled.num_images());
  out.binary.resize(pooled.probs.size());
  for (std::size_t i = 0; i < pooled.num_images(); ++i) {
    const auto row = pooled.row(i);
    out.classes[i] = argmax(row);
    for (std::size_t c = 0; c < kNumClasses; ++c)
      out.binary[i * kNumClasses + c] = row[c] >= 0.5 ? 1 : 0;
  }
  return out;
}

void fusion_weights_save(const FusionWeightsFile& f, const std::string& path) {
  f.weights.validate();
  if (f.model_ids.size() != f.weights.channels)
    throw ValidationError("fusion_weights_save: model id count does not match channels");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ValidationError("cannot open for writing: " + path);
  os << "format = dabea-fusion-weights/1\n";
  os << "channels = " << f.weights.channels << "\n";
  os << "per_class = " << (f.weights.per_class ? 1 : 0) << "\n";
  os << "model_ids =";
  for (const auto& id : f.model_ids) os << ' ' << id;
  os << "\n";
  os << "w =";
  for (double v : f.weights.w) os << ' ' << fmt_double(v);
  os << "\n";
  os << "b =";
  for (double v : f.weights.b) os << ' ' << fmt_double(v);
  os << "\n";
  os << "epochs = " << f.epochs << "\n";
  os << "lr = " << fmt_double(f.lr) << "\n";
  os << "seed = " << f.seed << "\n";
  if (!os) throw ValidationError("write failed: " + path);
}

FusionWeightsFile fusion_weights_load(const std::string& path) {
  const auto kv = detail::load_kv(path);
  if (detail::kv_get(kv, "format", path) != "dabea-fusion-weights/1")
    throw ValidationError(path + ": unsupported format");
  FusionWeightsFile f;
  f.weights.channels =
      static_cast<std::size_t>(parse_long(detail::kv_get(kv, "channels", path), path));
  f.weights.per_class = parse_long(detail::kv_get(kv, "per_class", path), path) != 0;
  {
    std::istringstream ss(detail::kv_get(kv, "model_ids", path));
    std::string tok;
    while (ss >> tok) f.model_ids.push_back(tok);
  }
  auto parse_list = [&](const std::string& key) {
    std::vector<double> vals;
    std::istringstream ss(detail::kv_get(kv, key, path));
    std::string tok;
    while (ss >> tok) vals.push_back(parse_double(tok, path));
    return vals;
  };
  f.weights.w = parse_list("w");
  f.weights.b = parse_list("b");
  f.epochs = static_cast<std::size_t>(parse_long(detail::kv_get(kv, "epochs", path), path));
  f.lr = parse_double(detail::kv_get(kv, "lr", path), path);
  f.seed = static_cast<std::uint64_t>(
      std::stoull(detail::kv_get(kv, "seed", path)));
  f.weights.validate();
  if (f.model_ids.size() != f.weights.channels)
    throw ValidationError(path + ": model id count does not match channels");
  return f;
}

void bag_save(const BagTensor& bag, const std::string& dat_path,
              const std::string& manifest_path) {
  bag.validate();
  dat1_save(DenseArray({bag.num_images(), kNumClasses, bag.n * bag.m}, bag.values), dat_path);
  nlohmann::json j;
  j["format"] = "dabea-bag-manifest/1";
  j["n"] = bag.n;
  j["m"] = bag.m;
  j["model_ids"] = bag.source_model_ids;
  j["image_ids"] = bag.image_ids;
  std::ofstream os(manifest_path, std::ios::binary);
  if (!os) throw ValidationError("cannot open for writing: " + manifest_path);
  os << j.dump(2) << "\n";
  if (!os) throw ValidationError("write failed: " + manifest_path);
}

BagTensor bag_load(const std::string& dat_path, const std::string& manifest_path) {
  std::ifstream is(manifest_path);
  if (!is) throw ValidationError("cannot open: " + manifest_path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(manifest_path + ": bad JSON: " + e.what());
  }
  if (j.value("format", "") != "dabea-bag-manifest/1")
    throw ValidationError(manifest_path + ": unsupported format");
  BagTensor bag;
  try {
    bag.n = j.at("n").get<std::size_t>();
    bag.m = j.at("m").get<std::size_t>();
    bag.source_model_ids = j.at("model_ids").get<std::vector<std::string>>();
    bag.image_ids = j.at("image_ids").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(manifest_path + ": " + e.what());
  }
  DenseArray t = dat1_load(dat_path);
  if (t.shape()[0] != bag.image_ids.size() || t.shape()[1] != kNumClasses ||
      t.shape()[2] != bag.n * bag.m)
    throw ValidationError(dat_path + ": tensor shape does not match manifest");
  bag.values = std::move(t.values());
  bag.validate();  // float32 round-trip stays well within the 1e-6 slice tolerance
  return bag;
}

}  // namespace dabea

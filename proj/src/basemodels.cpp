#include "dabea/basemodels.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "dabea/error.hpp"
#include "text_util.hpp"

namespace dabea {

using detail::fmt_double;
using detail::parse_double;
using detail::parse_long;
using detail::split;
using detail::strip_cr;

void LabelSet::validate() const {
  if (image_ids.size() != labels.size())
    throw ValidationError("LabelSet: ids/labels length mismatch");
  if (class_names.size() != kNumClasses)
    throw ValidationError("LabelSet: expected 7 class names");
  std::unordered_set<std::string> seen;
  for (const auto& id : image_ids)
    if (!seen.insert(id).second)
      throw ValidationError("LabelSet: duplicate image_id '" + id + "'");
  for (int l : labels)
    if (l < 0 || l >= static_cast<int>(kNumClasses))
      throw ValidationError("LabelSet: label out of range [0,6]");
}

int LabelSet::label_of(const std::string& image_id) const {
  for (std::size_t i = 0; i < image_ids.size(); ++i)
    if (image_ids[i] == image_id) return labels[i];
  throw ValidationError("LabelSet: unknown image_id '" + image_id + "'");
}

void PredictionSet::validate() const {
  if (model_id.empty() || model_id.find(',') != std::string::npos ||
      model_id.find_first_of(" \t") != std::string::npos)
    throw ValidationError("PredictionSet: model_id must be non-empty without commas or spaces");
  if (k < 1) throw ValidationError("PredictionSet: k must be >= 1");
  if (probs.size() != num_images() * k * kNumClasses)
    throw ValidationError("PredictionSet: probs buffer does not match N*k*7");
  std::unordered_set<std::string> seen;
  for (const auto& id : image_ids)
    if (!seen.insert(id).second)
      throw ValidationError("PredictionSet: duplicate image_id '" + id + "'");
  for (std::size_t i = 0; i < num_images(); ++i)
    for (std::size_t a = 0; a < k; ++a) {
      double sum = 0.0;
      for (double v : row(i, a)) {
        if (!std::isfinite(v)) throw NumericError("PredictionSet: non-finite probability");
        if (v < 0.0 || v > 1.0)
          throw ValidationError("PredictionSet: probability out of [0,1] for image '" +
                                image_ids[i] + "'");
        sum += v;
      }
      if (std::abs(sum - 1.0) > 1e-6)
        throw ValidationError("PredictionSet: row does not sum to 1 for image '" +
                              image_ids[i] + "'");
    }
}

PredictionSet PredictionSet::subset(const std::vector<std::string>& ids) const {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < image_ids.size(); ++i) index.emplace(image_ids[i], i);
  PredictionSet out;
  out.model_id = model_id;
  out.k = k;
  out.image_ids = ids;
  out.probs.reserve(ids.size() * k * kNumClasses);
  for (const auto& id : ids) {
    const auto it = index.find(id);
    if (it == index.end())
      throw ValidationError("PredictionSet '" + model_id + "': no rows for image_id '" + id + "'");
    const double* src = probs.data() + it->second * k * kNumClasses;
    out.probs.insert(out.probs.end(), src, src + k * kNumClasses);
  }
  return out;
}

void StubModel::validate() const {
  if (feature_height < 1 || feature_width < 1)
    throw ValidationError("StubModel: feature dims must be >= 1");
  if (weights.size() != feature_dim() * kNumClasses)
    throw ValidationError("StubModel: feature-dimension mismatch (weights " +
                          std::to_string(weights.size()) + ", expected " +
                          std::to_string(feature_dim() * kNumClasses) + ")");
  if (bias.size() != kNumClasses) throw ValidationError("StubModel: bias must have 7 entries");
  for (double v : weights)
    if (!std::isfinite(v)) throw NumericError("StubModel: non-finite weight");
  for (double v : bias)
    if (!std::isfinite(v)) throw NumericError("StubModel: non-finite bias");
}

double lr_schedule(std::size_t epoch, double lr0) {
  if (lr0 <= 0.0) throw ValidationError("lr_schedule: lr0 must be > 0");
  return lr0 * std::pow(0.94, static_cast<double>(epoch / 2));
}

std::vector<double> stub_features(const ImageTensor& img, std::size_t out_h,
                                  std::size_t out_w) {
  std::vector<double> feat(out_h * out_w * 3);
  const double sy = static_cast<double>(img.height) / static_cast<double>(out_h);
  const double sx = static_cast<double>(img.width) / static_cast<double>(out_w);
  for (std::size_t r = 0; r < out_h; ++r) {
    double fy = (static_cast<double>(r) + 0.5) * sy - 0.5;
    fy = std::clamp(fy, 0.0, static_cast<double>(img.height - 1));
    const auto y0 = static_cast<std::size_t>(fy);
    const std::size_t y1 = std::min(y0 + 1, img.height - 1);
    const double wy = fy - static_cast<double>(y0);
    for (std::size_t c = 0; c < out_w; ++c) {
      double fx = (static_cast<double>(c) + 0.5) * sx - 0.5;
      fx = std::clamp(fx, 0.0, static_cast<double>(img.width - 1));
      const auto x0 = static_cast<std::size_t>(fx);
      const std::size_t x1 = std::min(x0 + 1, img.width - 1);
      const double wx = fx - static_cast<double>(x0);
      for (std::size_t ch = 0; ch < 3; ++ch) {
        const double top = img.at(y0, x0, ch) * (1.0 - wx) + img.at(y0, x1, ch) * wx;
        const double bot = img.at(y1, x0, ch) * (1.0 - wx) + img.at(y1, x1, ch) * wx;
        feat[(r * out_w + c) * 3 + ch] = (top * (1.0 - wy) + bot * wy) / 255.0;
      }
    }
  }
  return feat;
}

namespace {

// logits = W'x + b for one feature vector.
std::vector<double> stub_logits(const StubModel& m, const std::vector<double>& feat) {
  std::vector<double> z(m.bias.begin(), m.bias.end());
  for (std::size_t f = 0; f < feat.size(); ++f) {
    const double x = feat[f];
    const double* wrow = m.weights.data() + f * kNumClasses;
    for (std::size_t c = 0; c < kNumClasses; ++c) z[c] += wrow[c] * x;
  }
  return z;
}

}  // namespace

StubModel stub_fit(const std::vector<ImageTensor>& images, const LabelSet& labels,
                   const StubFitOptions& opt) {
  labels.validate();
  const std::size_t n = images.size();
  if (n != labels.size())
    throw ValidationError("stub_fit: image count does not match label count");
  if (n < kNumClasses) throw ValidationError("stub_fit: need at least 7 samples");
  std::set<int> distinct(labels.labels.begin(), labels.labels.end());
  if (distinct.size() < 2)
    std::cerr << "warning: stub_fit: training data contains a single class\n";

  StubModel model;
  model.feature_height = opt.feature_height;
  model.feature_width = opt.feature_width;
  model.weights.assign(model.feature_dim() * kNumClasses, 0.0);
  model.bias.assign(kNumClasses, 0.0);

  std::vector<std::vector<double>> feats(n);
  for (std::size_t i = 0; i < n; ++i)
    feats[i] = stub_features(images[i], opt.feature_height, opt.feature_width);

  const std::size_t d = model.feature_dim();
  std::vector<double> gw(d * kNumClasses), gb(kNumClasses);
  for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
    std::fill(gw.begin(), gw.end(), 0.0);
    std::fill(gb.begin(), gb.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto p = softmax(stub_logits(model, feats[i]));
      for (std::size_t c = 0; c < kNumClasses; ++c) {
        const double r = p[c] - (static_cast<int>(c) == labels.labels[i] ? 1.0 : 0.0);
        gb[c] += r;
        for (std::size_t f = 0; f < d; ++f) gw[f * kNumClasses + c] += r * feats[i][f];
      }
    }
    const double lr = lr_schedule(epoch, opt.lr0) / static_cast<double>(n);
    for (std::size_t j = 0; j < gw.size(); ++j) model.weights[j] -= lr * gw[j];
    for (std::size_t c = 0; c < kNumClasses; ++c) model.bias[c] -= lr * gb[c];
  }
  model.validate();
  return model;
}

PredictionSet stub_predict(const StubModel& model,
                           const std::vector<std::vector<ImageTensor>>& augmented_images,
                           const std::vector<std::string>& image_ids,
                           const std::string& model_id) {
  model.validate();
  if (augmented_images.empty()) throw ValidationError("stub_predict: no images");
  if (augmented_images.size() != image_ids.size())
    throw ValidationError("stub_predict: image count does not match id count");
  const std::size_t k = augmented_images.front().size();
  if (k < 1) throw ValidationError("stub_predict: k must be >= 1");

  PredictionSet out;
  out.model_id = model_id;
  out.image_ids = image_ids;
  out.k = k;
  out.probs.reserve(image_ids.size() * k * kNumClasses);
  for (std::size_t i = 0; i < augmented_images.size(); ++i) {
    if (augmented_images[i].size() != k)
      throw ValidationError("stub_predict: inconsistent augmentation count for image '" +
                            image_ids[i] + "'");
    for (const ImageTensor& img : augmented_images[i]) {
      const auto feat = stub_features(img, model.feature_height, model.feature_width);
      const auto p = softmax(stub_logits(model, feat));
      out.probs.insert(out.probs.end(), p.begin(), p.end());
    }
  }
  out.validate();
  return out;
}

PredictionSet synth_generate(const LabelSet& labels, std::size_t k, double accuracy_strength,
                             double noise_sd, std::uint64_t seed,
                             const std::string& model_id) {
  labels.validate();
  if (k < 1) throw ValidationError("synth_generate: k must be >= 1");
  if (accuracy_strength < 0.0 || noise_sd < 0.0)
    throw ValidationError("synth_generate: strength and noise_sd must be >= 0");
  PredictionSet out;
  out.model_id = model_id;
  out.image_ids = labels.image_ids;
  out.k = k;
  out.probs.reserve(labels.size() * k * kNumClasses);
  std::vector<double> logits(kNumClasses);
  for (std::size_t i = 0; i < labels.size(); ++i)
    for (std::size_t a = 0; a < k; ++a) {
      Rng rng = Rng::substream(seed, {i, a});
      for (std::size_t c = 0; c < kNumClasses; ++c)
        logits[c] = (static_cast<int>(c) == labels.labels[i] ? accuracy_strength : 0.0) +
                    rng.gaussian(0.0, noise_sd);
      const auto p = softmax(logits);
      out.probs.insert(out.probs.end(), p.begin(), p.end());
    }
  out.validate();
  return out;
}

namespace {

const char* kPredictionHeader = "image_id,model_id,aug_index,p0,p1,p2,p3,p4,p5,p6";

}  // namespace

PredictionSet load_predictions(const std::string& path, bool renormalize) {
  std::ifstream is(path);
  if (!is) throw ValidationError("cannot open: " + path);
  std::string line;
  if (!std::getline(is, line) || strip_cr(line) != kPredictionHeader)
    throw ValidationError(path + ": line 1: expected header '" + kPredictionHeader + "'");

  PredictionSet out;
  std::unordered_set<std::string> finished;
  std::size_t aug_expected = 0;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const std::string where = path + ": line " + std::to_string(line_no);
    const auto cols = split(line, ',');
    if (cols.size() != 10)
      throw ValidationError(where + ": expected 10 columns, got " + std::to_string(cols.size()));
    const std::string& id = cols[0];
    if (id.empty()) throw ValidationError(where + ": empty image_id");
    if (out.model_id.empty()) {
      out.model_id = cols[1];
    } else if (out.model_id != cols[1]) {
      throw ValidationError(where + ": model_id '" + cols[1] + "' differs from '" +
                            out.model_id + "'; one model per file");
    }
    const long aug = parse_long(cols[2], where);

    const bool new_image = out.image_ids.empty() || out.image_ids.back() != id;
    if (new_image) {
      if (!out.image_ids.empty()) {
        if (out.k == 0)
          out.k = aug_expected;  // first group fixes k
        else if (aug_expected != out.k)
          throw ValidationError(where + ": image '" + out.image_ids.back() + "' has " +
                                std::to_string(aug_expected) + " rows, expected " +
                                std::to_string(out.k));
      }
      if (!finished.insert(id).second)
        throw ValidationError(where + ": rows for image '" + id + "' are not contiguous");
      out.image_ids.push_back(id);
      aug_expected = 0;
    }
    if (aug != static_cast<long>(aug_expected))
      throw ValidationError(where + ": aug_index " + std::to_string(aug) + ", expected " +
                            std::to_string(aug_expected) + " (rows must be sorted by aug_index)");
    ++aug_expected;

    double row[kNumClasses];
    double sum = 0.0;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      row[c] = parse_double(cols[3 + c], where);
      if (!std::isfinite(row[c]) || row[c] < 0.0)
        throw ValidationError(where + ": bad probability '" + cols[3 + c] + "'");
      sum += row[c];
    }
    if (renormalize) {
      if (sum <= 0.0) throw ValidationError(where + ": row sums to 0, cannot renormalize");
      for (double& v : row) v /= sum;
    } else if (std::abs(sum - 1.0) > 1e-6) {
      throw ValidationError(where + ": row sums to " + fmt_double(sum) +
                            ", expected 1 within 1e-6 (use renormalize to accept)");
    }
    out.probs.insert(out.probs.end(), row, row + kNumClasses);
  }
  if (out.image_ids.empty()) throw ValidationError(path + ": no prediction rows");
  if (out.k == 0)
    out.k = aug_expected;  // single-image file
  else if (aug_expected != out.k)
    throw ValidationError(path + ": image '" + out.image_ids.back() + "' has " +
                          std::to_string(aug_expected) + " rows, expected " +
                          std::to_string(out.k));
  out.validate();
  return out;
}

void save_predictions(const PredictionSet& set, const std::string& path) {
  set.validate();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ValidationError("cannot open for writing: " + path);
  os << kPredictionHeader << "\n";
  for (std::size_t i = 0; i < set.num_images(); ++i)
    for (std::size_t a = 0; a < set.k; ++a) {
      os << set.image_ids[i] << ',' << set.model_id << ',' << a;
      for (double v : set.row(i, a)) os << ',' << fmt_double(v);
      os << "\n";
    }
  if (!os) throw ValidationError("write failed: " + path);
}

LabelSet load_labels(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ValidationError("cannot open: " + path);
  std::string line;
  if (!std::getline(is, line) || strip_cr(line) != "image_id,label")
    throw ValidationError(path + ": line 1: expected header 'image_id,label'");
  LabelSet out;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const std::string where = path + ": line " + std::to_string(line_no);
    const auto cols = split(line, ',');
    if (cols.size() != 2) throw ValidationError(where + ": expected 2 columns");
    int label = -1;
    const auto name_it =
        std::find(out.class_names.begin(), out.class_names.end(), cols[1]);
    if (name_it != out.class_names.end()) {
      label = static_cast<int>(name_it - out.class_names.begin());
    } else {
      label = static_cast<int>(parse_long(cols[1], where));
      if (label < 0 || label >= static_cast<int>(kNumClasses))
        throw ValidationError(where + ": label out of range [0,6]");
    }
    out.image_ids.push_back(cols[0]);
    out.labels.push_back(label);
  }
  out.validate();
  if (out.size() == 0) throw ValidationError(path + ": no label rows");
  return out;
}

void save_labels(const LabelSet& labels, const std::string& path) {
  labels.validate();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ValidationError("cannot open for writing: " + path);
  os << "image_id,label\n";
  for (std::size_t i = 0; i < labels.size(); ++i)
    os << labels.image_ids[i] << ',' << labels.class_names[labels.labels[i]] << "\n";
  if (!os) throw ValidationError("write failed: " + path);
}

std::pair<LabelSet, LabelSet> split_90_10(const LabelSet& labels, std::uint64_t seed) {
  labels.validate();
  if (labels.size() < 10) throw ValidationError("too few samples to split");

  std::vector<char> in_val(labels.size(), 0);
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels.labels[i] == static_cast<int>(c)) idx.push_back(i);
    if (idx.empty()) continue;
    Rng rng = Rng::substream(seed, {c});
    for (std::size_t i = idx.size() - 1; i > 0; --i) {
      const std::size_t j = rng.uniform_index(i + 1);
      std::swap(idx[i], idx[j]);
    }
    auto v = static_cast<std::size_t>(std::lround(0.1 * static_cast<double>(idx.size())));
    if (idx.size() >= 2) v = std::max<std::size_t>(v, 1);
    for (std::size_t i = 0; i < v; ++i) in_val[idx[i]] = 1;
  }

  LabelSet train, val;
  train.class_names = labels.class_names;
  val.class_names = labels.class_names;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    LabelSet& dst = in_val[i] ? val : train;
    dst.image_ids.push_back(labels.image_ids[i]);
    dst.labels.push_back(labels.labels[i]);
  }
  return {train, val};
}

void stub_model_save(const StubModel& model, const std::string& path) {
  model.validate();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ValidationError("cannot open for writing: " + path);
  os << "format = dabea-stub-model/1\n";
  os << "feature_height = " << model.feature_height << "\n";
  os << "feature_width = " << model.feature_width << "\n";
  os << "bias =";
  for (double v : model.bias) os << ' ' << fmt_double(v);
  os << "\n";
  for (std::size_t f = 0; f < model.feature_dim(); ++f) {
    os << "w" << f << " =";
    for (std::size_t c = 0; c < kNumClasses; ++c)
      os << ' ' << fmt_double(model.weights[f * kNumClasses + c]);
    os << "\n";
  }
  if (!os) throw ValidationError("write failed: " + path);
}

StubModel stub_model_load(const std::string& path) {
  const auto kv = detail::load_kv(path);
  if (detail::kv_get(kv, "format", path) != "dabea-stub-model/1")
    throw ValidationError(path + ": unsupported format");
  StubModel model;
  model.feature_height =
      static_cast<std::size_t>(parse_long(detail::kv_get(kv, "feature_height", path), path));
  model.feature_width =
      static_cast<std::size_t>(parse_long(detail::kv_get(kv, "feature_width", path), path));
  auto parse_list = [&](const std::string& text) {
    std::vector<double> vals;
    std::istringstream ss(text);
    std::string tok;
    while (ss >> tok) vals.push_back(parse_double(tok, path));
    return vals;
  };
  model.bias = parse_list(detail::kv_get(kv, "bias", path));
  model.weights.resize(model.feature_dim() * kNumClasses);
  for (std::size_t f = 0; f < model.feature_dim(); ++f) {
    const auto row = parse_list(detail::kv_get(kv, "w" + std::to_string(f), path));
    if (row.size() != kNumClasses)
      throw ValidationError(path + ": weight row " + std::to_string(f) + " must have 7 values");
    std::copy(row.begin(), row.end(), model.weights.begin() + static_cast<long>(f * kNumClasses));
  }
  model.validate();
  return model;
}

}  // namespace dabea

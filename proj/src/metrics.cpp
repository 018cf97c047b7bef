#include "dabea/metrics.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "dabea/error.hpp"
#include "text_util.hpp"

namespace dabea {

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t t = 0;
  for (const auto& row : counts)
    for (std::uint64_t v : row) t += v;
  return t;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t true_class) const {
  std::uint64_t t = 0;
  for (std::uint64_t v : counts[true_class]) t += v;
  return t;
}

ConfusionMatrix confusion(const std::vector<std::string>& image_ids,
                          const std::vector<std::size_t>& predicted,
                          const LabelSet& truth) {
  if (image_ids.size() != predicted.size())
    throw ValidationError("confusion: id/prediction length mismatch");
  if (image_ids.empty()) throw ValidationError("confusion: empty input");
  truth.validate();
  std::unordered_map<std::string, int> map;
  for (std::size_t i = 0; i < truth.size(); ++i)
    map.emplace(truth.image_ids[i], truth.labels[i]);

  ConfusionMatrix cm;
  std::string unknown;
  for (std::size_t i = 0; i < image_ids.size(); ++i) {
    const auto it = map.find(image_ids[i]);
    if (it == map.end()) {
      if (!unknown.empty()) unknown += ", ";
      unknown += image_ids[i];
      continue;
    }
    if (predicted[i] >= kNumClasses)
      throw ValidationError("confusion: predicted class out of range");
    ++cm.counts[static_cast<std::size_t>(it->second)][predicted[i]];
  }
  if (!unknown.empty())
    throw ValidationError("confusion: image ids missing from truth: " + unknown);
  return cm;
}

double balanced_accuracy(const ConfusionMatrix& cm, ZeroSupportPolicy policy) {
  double sum = 0.0;
  std::size_t classes = 0;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const std::uint64_t support = cm.row_sum(c);
    if (support == 0) {
      if (policy == ZeroSupportPolicy::score_zero) ++classes;
      continue;
    }
    sum += static_cast<double>(cm.counts[c][c]) / static_cast<double>(support);
    ++classes;
  }
  if (classes == 0) throw ValidationError("balanced_accuracy: no class has any samples");
  return sum / static_cast<double>(classes);
}

MetricsReport report(const ConfusionMatrix& cm, const std::vector<std::string>& class_names,
                     ZeroSupportPolicy policy) {
  if (class_names.size() != kNumClasses)
    throw ValidationError("report: expected 7 class names");
  MetricsReport r;
  r.class_names = class_names;
  r.samples = cm.total();
  if (r.samples == 0) throw ValidationError("report: empty confusion matrix");
  std::uint64_t diag = 0;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const std::uint64_t support = cm.row_sum(c);
    r.support.push_back(support);
    diag += cm.counts[c][c];
    r.recall.push_back(support == 0
                           ? std::numeric_limits<double>::quiet_NaN()
                           : static_cast<double>(cm.counts[c][c]) /
                                 static_cast<double>(support));
  }
  r.overall_accuracy = static_cast<double>(diag) / static_cast<double>(r.samples);
  r.balanced_accuracy = dabea::balanced_accuracy(cm, policy);
  return r;
}

std::string MetricsReport::to_text() const {
  std::ostringstream os;
  os << "format = dabea-metrics-report/1\n";
  os << "samples = " << samples << "\n";
  os << "overall_accuracy = " << detail::fmt_double(overall_accuracy) << "\n";
  os << "balanced_accuracy = " << detail::fmt_double(balanced_accuracy) << "\n";
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    os << "support_" << class_names[c] << " = " << support[c] << "\n";
    os << "recall_" << class_names[c] << " = "
       << (std::isnan(recall[c]) ? std::string("n/a") : detail::fmt_double(recall[c]))
       << "\n";
  }
  return os.str();
}

std::string MetricsReport::to_json() const {
  nlohmann::json j;
  j["format"] = "dabea-metrics-report/1";
  j["samples"] = samples;
  j["overall_accuracy"] = overall_accuracy;
  j["balanced_accuracy"] = balanced_accuracy;
  nlohmann::json per_class = nlohmann::json::array();
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    nlohmann::json e;
    e["name"] = class_names[c];
    e["support"] = support[c];
    if (std::isnan(recall[c]))
      e["recall"] = nullptr;
    else
      e["recall"] = recall[c];
    per_class.push_back(e);
  }
  j["per_class"] = per_class;
  return j.dump(2) + "\n";
}

MetricsReport metrics_report_parse_text(const std::string& text) {
  std::istringstream is(text);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(is, line)) {
    line = detail::strip_cr(line);
    if (line.empty()) continue;
    const auto eq = line.find(" = ");
    if (eq == std::string::npos)
      throw ValidationError("metrics report: expected 'key = value', got '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 3);
  }
  const std::string where = "metrics report";
  if (detail::kv_get(kv, "format", where) != "dabea-metrics-report/1")
    throw ValidationError("metrics report: unsupported format");
  MetricsReport r;
  r.samples = static_cast<std::uint64_t>(detail::parse_long(kv.at("samples"), where));
  r.overall_accuracy = detail::parse_double(detail::kv_get(kv, "overall_accuracy", where), where);
  r.balanced_accuracy =
      detail::parse_double(detail::kv_get(kv, "balanced_accuracy", where), where);
  for (const auto& name : default_class_names()) {
    const auto sit = kv.find("support_" + name);
    const auto rit = kv.find("recall_" + name);
    if (sit == kv.end() || rit == kv.end()) break;  // custom class names
    r.class_names.push_back(name);
    r.support.push_back(static_cast<std::uint64_t>(detail::parse_long(sit->second, where)));
    r.recall.push_back(rit->second == "n/a"
                           ? std::numeric_limits<double>::quiet_NaN()
                           : detail::parse_double(rit->second, where));
  }
  return r;
}

}  // namespace dabea

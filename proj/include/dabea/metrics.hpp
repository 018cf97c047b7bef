#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "dabea/basemodels.hpp"
#include "dabea/tensor.hpp"

namespace dabea {

// 7x7 count matrix; rows are true classes, columns predicted classes.
struct ConfusionMatrix {
  std::array<std::array<std::uint64_t, kNumClasses>, kNumClasses> counts{};

  std::uint64_t total() const;
  std::uint64_t row_sum(std::size_t true_class) const;
};

// Builds the matrix from per-image predictions aligned to truth by image_id.
// Unknown ids raise a ValidationError listing every offender.
ConfusionMatrix confusion(const std::vector<std::string>& image_ids,
                          const std::vector<std::size_t>& predicted,
                          const LabelSet& truth);

enum class ZeroSupportPolicy {
  exclude,     // classes without samples are left out of the mean
  score_zero,  // counted as recall 0
};

// Mean per-class recall. Insensitive to class prevalence.
double balanced_accuracy(const ConfusionMatrix& cm,
                         ZeroSupportPolicy policy = ZeroSupportPolicy::exclude);

struct MetricsReport {
  std::uint64_t samples = 0;
  double overall_accuracy = 0.0;
  double balanced_accuracy = 0.0;
  std::vector<std::string> class_names;
  std::vector<std::uint64_t> support;  // per class
  std::vector<double> recall;          // per class; NaN marks zero support

  // Line-oriented `key = value` document; zero-support recalls print as n/a.
  std::string to_text() const;
  // JSON document with the same content; numbers round-trip exactly.
  std::string to_json() const;
};

MetricsReport report(const ConfusionMatrix& cm,
                     const std::vector<std::string>& class_names = default_class_names(),
                     ZeroSupportPolicy policy = ZeroSupportPolicy::exclude);

MetricsReport metrics_report_parse_text(const std::string& text);

}  // namespace dabea

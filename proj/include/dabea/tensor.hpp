#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace dabea {

// Number of lesion classes scored by the pipeline.
inline constexpr std::size_t kNumClasses = 7;

// Default class names, in scoring order.
const std::vector<std::string>& default_class_names();

// Dense row-major tensor of doubles. Shape is checked on construction and at
// every operation boundary; the flat layout is what the DAT1 file format
// serializes verbatim.
class DenseArray {
 public:
  DenseArray() = default;
  explicit DenseArray(std::vector<std::size_t> shape);  // zero-filled
  DenseArray(std::vector<std::size_t> shape, std::vector<double> data);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // Throws NumericError if any element is non-finite.
  void check_finite(const char* context) const;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

// Numerically stable softmax (max subtraction). Throws NumericError on
// non-finite input. Output sums to 1 and preserves the argmax.
std::vector<double> softmax(std::span<const double> logits);

// -ln(p[label]) with p[label] clamped to >= 1e-12 before the log.
// Throws ValidationError if label is out of range.
double cross_entropy(std::span<const double> p, std::size_t label);

// Index of the maximum element; ties break to the lowest index.
std::size_t argmax(std::span<const double> v);

}  // namespace dabea

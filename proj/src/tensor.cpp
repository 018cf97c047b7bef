#include "dabea/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dabea/error.hpp"

namespace dabea {

const std::vector<std::string>& default_class_names() {
  static const std::vector<std::string> names = {"MEL",  "NV", "BCC", "AKIEC",
                                                 "BKL",  "DF", "VASC"};
  return names;
}

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) {
    if (e == 0) throw ValidationError("DenseArray: zero extent in shape");
    n *= e;
  }
  return n;
}

}  // namespace

DenseArray::DenseArray(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(shape_product(shape_), 0.0) {}

DenseArray::DenseArray(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_product(shape_) != data_.size())
    throw ValidationError("DenseArray: shape does not match data length");
}

void DenseArray::check_finite(const char* context) const {
  for (double v : data_)
    if (!std::isfinite(v))
      throw NumericError(std::string(context) + ": non-finite element");
}

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) throw ValidationError("softmax: empty input");
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : logits) {
    if (!std::isfinite(v)) throw NumericError("non-finite logits");
    mx = std::max(mx, v);
  }
  std::vector<double> out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

double cross_entropy(std::span<const double> p, std::size_t label) {
  if (label >= p.size())
    throw ValidationError("cross_entropy: label " + std::to_string(label) +
                          " out of range for " + std::to_string(p.size()) +
                          " classes");
  return -std::log(std::max(p[label], 1e-12));
}

std::size_t argmax(std::span<const double> v) {
  if (v.empty()) throw ValidationError("argmax: empty input");
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

}  // namespace dabea

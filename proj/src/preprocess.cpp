#include "dabea/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dabea/error.hpp"

namespace dabea {

namespace {

void check_pixels_finite(const std::vector<double>& px, const char* op) {
  for (double v : px)
    if (!std::isfinite(v)) throw NumericError(std::string(op) + ": non-finite pixel");
}

double clamp255(double v) { return std::clamp(v, 0.0, 255.0); }

}  // namespace

ImageTensor::ImageTensor(std::size_t h, std::size_t w)
    : height(h), width(w), pixels(h * w * 3, 0.0) {
  if (h == 0 || w == 0) throw ValidationError("ImageTensor: empty image");
}

ImageTensor::ImageTensor(std::size_t h, std::size_t w, std::vector<double> px)
    : height(h), width(w), pixels(std::move(px)) {
  if (h == 0 || w == 0) throw ValidationError("ImageTensor: empty image");
  if (pixels.size() != h * w * 3)
    throw ValidationError("ImageTensor: pixel buffer does not match " +
                          std::to_string(h) + "x" + std::to_string(w) + "x3");
  check_pixels_finite(pixels, "ImageTensor");
}

void AugmentConfig::validate(std::size_t img_height, std::size_t img_width) const {
  if (k < 1) throw ValidationError("augment: k must be >= 1");
  if (!(crop_fraction > 0.0 && crop_fraction <= 1.0))
    throw ValidationError("augment: crop_fraction out of (0,1]");
  if (brightness_delta_max < 0.0)
    throw ValidationError("augment: brightness_delta_max must be >= 0");
  if (!(saturation_lo >= 0.0 && saturation_lo <= saturation_hi))
    throw ValidationError("augment: saturation range requires 0 <= lo <= hi");
  if (flip_prob < 0.0 || flip_prob > 1.0)
    throw ValidationError("augment: flip_prob out of [0,1]");
  const auto min_dim = static_cast<double>(std::min(img_height, img_width));
  if (std::floor(crop_fraction * min_dim) < 1.0)
    throw ValidationError("augment: crop_fraction too small for image");
}

ImageTensor per_image_normalize(const ImageTensor& img, bool per_channel) {
  if (img.size() == 0) throw ValidationError("per_image_normalize: empty image");
  ImageTensor out = img;
  if (per_channel) {
    double mean[3] = {0, 0, 0};
    const std::size_t per = img.height * img.width;
    for (std::size_t i = 0; i < img.pixels.size(); ++i) mean[i % 3] += img.pixels[i];
    for (double& m : mean) m /= static_cast<double>(per);
    for (std::size_t i = 0; i < out.pixels.size(); ++i) out.pixels[i] -= mean[i % 3];
  } else {
    double mean = 0.0;
    for (double v : img.pixels) mean += v;
    mean /= static_cast<double>(img.pixels.size());
    for (double& v : out.pixels) v -= mean;
  }
  return out;
}

namespace {

ImageTensor crop_at(const ImageTensor& img, std::size_t oh, std::size_t ow,
                    std::size_t out_h, std::size_t out_w) {
  ImageTensor out(out_h, out_w);
  for (std::size_t r = 0; r < out_h; ++r)
    for (std::size_t c = 0; c < out_w; ++c)
      for (std::size_t ch = 0; ch < 3; ++ch)
        out.at(r, c, ch) = img.at(oh + r, ow + c, ch);
  return out;
}

struct CropDims {
  std::size_t h, w;
};

CropDims crop_dims(const ImageTensor& img, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw ValidationError("crop: fraction out of (0,1]");
  const auto h = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(img.height)));
  const auto w = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(img.width)));
  if (h < 1 || w < 1) throw ValidationError("crop: fraction yields empty output");
  return {h, w};
}

}  // namespace

ImageTensor random_crop(const ImageTensor& img, double fraction, Rng& rng) {
  const auto [h, w] = crop_dims(img, fraction);
  const std::size_t oh = rng.uniform_index(img.height - h + 1);
  const std::size_t ow = rng.uniform_index(img.width - w + 1);
  return crop_at(img, oh, ow, h, w);
}

ImageTensor center_crop(const ImageTensor& img, double fraction) {
  const auto [h, w] = crop_dims(img, fraction);
  return crop_at(img, (img.height - h) / 2, (img.width - w) / 2, h, w);
}

ImageTensor flip_horizontal(const ImageTensor& img) {
  ImageTensor out(img.height, img.width);
  for (std::size_t r = 0; r < img.height; ++r)
    for (std::size_t c = 0; c < img.width; ++c)
      for (std::size_t ch = 0; ch < 3; ++ch)
        out.at(r, c, ch) = img.at(r, img.width - 1 - c, ch);
  return out;
}

ImageTensor adjust_brightness(const ImageTensor& img, double delta, bool clamp) {
  ImageTensor out = img;
  for (double& v : out.pixels) {
    v += delta;
    if (clamp) v = clamp255(v);
  }
  return out;
}

ImageTensor adjust_saturation(const ImageTensor& img, double factor, bool clamp) {
  if (factor < 0.0) throw ValidationError("adjust_saturation: factor must be >= 0");
  ImageTensor out(img.height, img.width);
  for (std::size_t r = 0; r < img.height; ++r)
    for (std::size_t c = 0; c < img.width; ++c) {
      const double gray = 0.299 * img.at(r, c, 0) + 0.587 * img.at(r, c, 1) +
                          0.114 * img.at(r, c, 2);
      for (std::size_t ch = 0; ch < 3; ++ch) {
        double v = gray + factor * (img.at(r, c, ch) - gray);
        out.at(r, c, ch) = clamp ? clamp255(v) : v;
      }
    }
  return out;
}

std::vector<ImageTensor> augment(const ImageTensor& img, const AugmentConfig& cfg,
                                 std::size_t image_index) {
  cfg.validate(img.height, img.width);
  std::vector<ImageTensor> out;
  out.reserve(cfg.k);
  out.push_back(center_crop(img, cfg.crop_fraction));
  for (std::size_t copy = 1; copy < cfg.k; ++copy) {
    Rng rng = Rng::substream(cfg.seed, {image_index, copy});
    ImageTensor v = random_crop(img, cfg.crop_fraction, rng);
    if (rng.uniform01() < cfg.flip_prob) v = flip_horizontal(v);
    const double delta = rng.uniform(-cfg.brightness_delta_max, cfg.brightness_delta_max);
    v = adjust_brightness(v, delta, cfg.clamp_to_ingest_range);
    const double factor = rng.uniform(cfg.saturation_lo, cfg.saturation_hi);
    v = adjust_saturation(v, factor, cfg.clamp_to_ingest_range);
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace dabea

#pragma once

#include <cstdint>
#include <vector>

#include "dabea/rng.hpp"

namespace dabea {

// Interleaved H x W x 3 image, row-major, double precision. Raw ingest is on
// the [0, 255] scale; after per_image_normalize values are zero-mean reals.
struct ImageTensor {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> pixels;  // height * width * 3

  ImageTensor() = default;
  ImageTensor(std::size_t h, std::size_t w);  // zero-filled
  ImageTensor(std::size_t h, std::size_t w, std::vector<double> px);

  double& at(std::size_t row, std::size_t col, std::size_t ch) {
    return pixels[(row * width + col) * 3 + ch];
  }
  double at(std::size_t row, std::size_t col, std::size_t ch) const {
    return pixels[(row * width + col) * 3 + ch];
  }
  std::size_t size() const { return pixels.size(); }
};

struct AugmentConfig {
  std::size_t k = 10;                  // copies per image, incl. the clean view
  double crop_fraction = 0.875;
  double brightness_delta_max = 32.0;  // on the [0, 255] ingest scale
  double saturation_lo = 0.5;
  double saturation_hi = 1.5;
  double flip_prob = 0.5;
  std::uint64_t seed = 0;
  // Brightness/saturation outputs are clamped to [0, 255] only when operating
  // on raw ingest-scale images; normalized (zero-mean) inputs pass through
  // unclamped.
  bool clamp_to_ingest_range = true;

  void validate(std::size_t img_height, std::size_t img_width) const;
};

// Subtracts one scalar mean taken over all H*W*3 values (per-channel means
// behind the flag). Output mean is zero within 1e-6; idempotent.
ImageTensor per_image_normalize(const ImageTensor& img, bool per_channel = false);

// Crop of size (floor(f*H), floor(f*W)); offsets drawn uniformly from the
// valid range. f must be in (0, 1].
ImageTensor random_crop(const ImageTensor& img, double fraction, Rng& rng);

// Same output size as random_crop with the offset fixed to the center.
ImageTensor center_crop(const ImageTensor& img, double fraction);

// Reverses column order per row; involution.
ImageTensor flip_horizontal(const ImageTensor& img);

// Adds delta to every value; clamps to [0, 255] when clamp is set.
ImageTensor adjust_brightness(const ImageTensor& img, double delta, bool clamp);

// Per pixel: gray = 0.299 R + 0.587 G + 0.114 B, out = gray + factor*(c - gray).
ImageTensor adjust_saturation(const ImageTensor& img, double factor, bool clamp);

// k augmented copies. Copy 0 is the deterministic clean view (center crop,
// no flip, no jitter). Copies 1..k-1 apply crop -> flip -> brightness ->
// saturation with all randomness drawn from the substream
// (cfg.seed, image_index, copy_index), so each copy is reproducible in
// isolation regardless of batch composition or threading.
std::vector<ImageTensor> augment(const ImageTensor& img, const AugmentConfig& cfg,
                                 std::size_t image_index);

}  // namespace dabea

#pragma once

#include <string>

#include "dabea/preprocess.hpp"

namespace dabea {

// Binary PPM (P6, maxval 255). Writing rounds and clamps to [0, 255].
ImageTensor ppm_load(const std::string& path);
void ppm_save(const ImageTensor& img, const std::string& path);

// DAT1-backed image (H x W x 3 float32 tensor); preserves out-of-ingest-range
// values such as normalized pixels.
ImageTensor image_dat_load(const std::string& path);
void image_dat_save(const ImageTensor& img, const std::string& path);

// Dispatch on extension: .ppm or .dat.
ImageTensor image_load(const std::string& path);
void image_save(const ImageTensor& img, const std::string& path);

}  // namespace dabea

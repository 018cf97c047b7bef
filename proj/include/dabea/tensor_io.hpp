#pragma once

#include <string>

#include "dabea/tensor.hpp"

namespace dabea {

// DAT1 raw-tensor file: 16-byte header (magic "DAT1", then three u32
// little-endian extents) followed by the elements as little-endian 32-bit
// floats in row-major order. The array must have rank 3.
void dat1_save(const DenseArray& t, const std::string& path);
DenseArray dat1_load(const std::string& path);

}  // namespace dabea

#include "dabea/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

#include "dabea/error.hpp"
#include "dabea/tensor_io.hpp"

namespace dabea {

namespace {

// PPM allows '#' comments anywhere in the header whitespace.
int next_header_token(std::istream& is, const std::string& path) {
  int c = is.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = is.get();
    } else if (!std::isspace(c)) {
      break;
    }
    c = is.get();
  }
  if (c == EOF) throw ValidationError(path + ": truncated PPM header");
  std::string tok;
  while (c != EOF && !std::isspace(c)) {
    tok.push_back(static_cast<char>(c));
    c = is.get();
  }
  try {
    return std::stoi(tok);
  } catch (const std::exception&) {
    throw ValidationError(path + ": bad PPM header token '" + tok + "'");
  }
}

std::string lower_ext(const std::string& path) {
  const auto dot = path.find_last_of('.');
  if (dot == std::string::npos) return {};
  std::string ext = path.substr(dot + 1);
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return ext;
}

}  // namespace

ImageTensor ppm_load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("cannot open: " + path);
  char m0 = 0, m1 = 0;
  is.get(m0);
  is.get(m1);
  if (m0 != 'P' || m1 != '6') throw ValidationError(path + ": not a P6 PPM");
  const int w = next_header_token(is, path);
  const int h = next_header_token(is, path);
  const int maxval = next_header_token(is, path);
  if (w < 1 || h < 1) throw ValidationError(path + ": bad PPM dimensions");
  if (maxval != 255) throw ValidationError(path + ": PPM maxval must be 255");
  // header tokenizer consumed the single whitespace after maxval
  const std::size_t count = static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3;
  std::vector<unsigned char> raw(count);
  if (!is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(count)))
    throw ValidationError(path + ": truncated PPM payload");
  std::vector<double> px(count);
  for (std::size_t i = 0; i < count; ++i) px[i] = static_cast<double>(raw[i]);
  return ImageTensor(static_cast<std::size_t>(h), static_cast<std::size_t>(w), std::move(px));
}

void ppm_save(const ImageTensor& img, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ValidationError("cannot open for writing: " + path);
  os << "P6\n" << img.width << " " << img.height << "\n255\n";
  std::vector<unsigned char> raw(img.size());
  for (std::size_t i = 0; i < img.size(); ++i) {
    const double v = std::clamp(std::round(img.pixels[i]), 0.0, 255.0);
    raw[i] = static_cast<unsigned char>(v);
  }
  os.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!os) throw ValidationError("write failed: " + path);
}

ImageTensor image_dat_load(const std::string& path) {
  DenseArray t = dat1_load(path);
  if (t.shape()[2] != 3)
    throw ValidationError(path + ": image tensor must have 3 channels");
  return ImageTensor(t.shape()[0], t.shape()[1], std::move(t.values()));
}

void image_dat_save(const ImageTensor& img, const std::string& path) {
  dat1_save(DenseArray({img.height, img.width, 3}, img.pixels), path);
}

ImageTensor image_load(const std::string& path) {
  const std::string ext = lower_ext(path);
  if (ext == "ppm") return ppm_load(path);
  if (ext == "dat") return image_dat_load(path);
  throw ValidationError(path + ": unsupported image extension (.ppm or .dat)");
}

void image_save(const ImageTensor& img, const std::string& path) {
  const std::string ext = lower_ext(path);
  if (ext == "ppm") {
    ppm_save(img, path);
  } else if (ext == "dat") {
    image_dat_save(img, path);
  } else {
    throw ValidationError(path + ": unsupported image extension (.ppm or .dat)");
  }
}

}  // namespace dabea

#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "dabea/basemodels.hpp"
#include "dabea/rng.hpp"

namespace dabea::test {

// Unique scratch directory, removed on destruction.
struct TempDir {
  std::filesystem::path path;

  explicit TempDir(const std::string& tag) {
    static std::atomic<unsigned> counter{0};
    path = std::filesystem::temp_directory_path() /
           ("dabea_" + tag + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

inline std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

inline void spit(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  os << content;
}

// Near-balanced label set: label of image i is i mod 7.
inline LabelSet round_robin_labels(std::size_t n, const std::string& prefix = "img") {
  LabelSet out;
  char buf[32];
  for (std::size_t i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof(buf), "%s%05zu", prefix.c_str(), i);
    out.image_ids.emplace_back(buf);
    out.labels.push_back(static_cast<int>(i % kNumClasses));
  }
  return out;
}

// Random image with pixels uniform in [0, 255].
inline ImageTensor random_image(std::size_t h, std::size_t w, Rng& rng) {
  ImageTensor img(h, w);
  for (double& v : img.pixels) v = rng.uniform(0.0, 255.0);
  return img;
}

}  // namespace dabea::test

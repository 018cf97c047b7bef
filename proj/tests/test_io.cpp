#include <doctest.h>

#include <cmath>

#include "dabea/error.hpp"
#include "dabea/image_io.hpp"
#include "dabea/tensor_io.hpp"
#include "test_support.hpp"

using namespace dabea;

TEST_CASE("DAT1 round-trips rank-3 tensors at float32 precision") {
  test::TempDir dir("dat1");
  Rng rng(1);
  DenseArray t({3, 4, 5});
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-10, 10);
  const auto path = dir.file("t.dat");
  dat1_save(t, path);
  const auto back = dat1_load(path);
  CHECK(back.shape() == t.shape());
  for (std::size_t i = 0; i < t.size(); ++i)
    CHECK(back[i] == doctest::Approx(t[i]).epsilon(1e-6));
  // float32 payload is exact on re-save
  const auto path2 = dir.file("t2.dat");
  dat1_save(back, path2);
  CHECK(test::slurp(path) == test::slurp(path2));
}

TEST_CASE("DAT1 header layout is exactly 16 bytes, magic + extents") {
  test::TempDir dir("dat1hdr");
  DenseArray t({1, 2, 3}, {1, 2, 3, 4, 5, 6});
  const auto path = dir.file("t.dat");
  dat1_save(t, path);
  const std::string bytes = test::slurp(path);
  REQUIRE(bytes.size() == 16 + 6 * 4);
  CHECK(bytes.substr(0, 4) == "DAT1");
  CHECK(static_cast<unsigned char>(bytes[4]) == 1);   // H = 1 LE
  CHECK(static_cast<unsigned char>(bytes[8]) == 2);   // W = 2 LE
  CHECK(static_cast<unsigned char>(bytes[12]) == 3);  // C = 3 LE
}

TEST_CASE("DAT1 rejects malformed files") {
  test::TempDir dir("dat1bad");
  const auto path = dir.file("bad.dat");
  test::spit(path, "NOPE");
  CHECK_THROWS_AS(dat1_load(path), ValidationError);
  test::spit(path, std::string("DAT1") + std::string(4, '\0'));
  CHECK_THROWS_AS(dat1_load(path), ValidationError);
  CHECK_THROWS_AS(dat1_load(dir.file("missing.dat")), ValidationError);
  CHECK_THROWS_AS(dat1_save(DenseArray({2, 2}), path), ValidationError);
}

TEST_CASE("PPM round-trips byte image data") {
  test::TempDir dir("ppm");
  ImageTensor img(3, 5);
  Rng rng(2);
  for (double& v : img.pixels) v = std::floor(rng.uniform(0, 256));
  const auto path = dir.file("img.ppm");
  ppm_save(img, path);
  const auto back = ppm_load(path);
  CHECK(back.height == 3);
  CHECK(back.width == 5);
  CHECK(back.pixels == img.pixels);
}

TEST_CASE("PPM parser handles comments and rejects other maxvals") {
  test::TempDir dir("ppm2");
  const auto path = dir.file("c.ppm");
  test::spit(path, "P6\n# a comment\n2 1\n255\n" + std::string("abcdef"));
  const auto img = ppm_load(path);
  CHECK(img.width == 2);
  CHECK(img.pixels[0] == double('a'));

  test::spit(path, "P6\n2 1\n65535\n" + std::string(12, 'x'));
  CHECK_THROWS_AS(ppm_load(path), ValidationError);
  test::spit(path, "P5\n2 1\n255\n" + std::string(6, 'x'));
  CHECK_THROWS_AS(ppm_load(path), ValidationError);
  test::spit(path, "P6\n20 10\n255\nshort");
  CHECK_THROWS_AS(ppm_load(path), ValidationError);
}

TEST_CASE("image_load dispatches on extension") {
  test::TempDir dir("disp");
  Rng rng(3);
  const auto img = test::random_image(8, 8, rng);
  image_save(img, dir.file("a.dat"));
  const auto dat = image_load(dir.file("a.dat"));
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    CHECK(dat.pixels[i] == doctest::Approx(img.pixels[i]).epsilon(1e-6));
  CHECK_THROWS_AS(image_load(dir.file("a.png")), ValidationError);
}

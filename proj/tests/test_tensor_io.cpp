#include <doctest.h>

#include <cstring>
#include <sstream>

#include "brainslam/tensor_io.hpp"

using namespace brainslam;

TEST_SUITE("tensor_io") {

TEST_CASE("layout of a tiny tensor") {
  TensorFile t;
  t.dims = {1, 1, 1, 2};
  t.labels = {40};
  t.values = {1.0f, -2.5f};
  std::stringstream buf;
  write_tensor(buf, t);
  const std::string bytes = buf.str();
  REQUIRE(bytes.size() == 4 + 4 + 16 + 8 + 8);
  CHECK(bytes.substr(0, 4) == "BSLM");
  CHECK(static_cast<unsigned char>(bytes[4]) == 1);   // version, little-endian
  CHECK(static_cast<unsigned char>(bytes[20]) == 2);  // last dim
  CHECK(static_cast<unsigned char>(bytes[24]) == 40); // label
  float second = 0.0f;
  std::memcpy(&second, bytes.data() + 36, 4);
  CHECK(second == -2.5f);
}

TEST_CASE("images survive a round trip") {
  std::vector<WaveletImage> images(3);
  for (std::size_t n = 0; n < images.size(); ++n) {
    images[n].label_t_ms = 1000 + 40 * static_cast<std::int64_t>(n);
    images[n].n_channels = 2;
    images[n].n_freqs = 3;
    images[n].values.resize(2 * 3 * kImageTimeBins);
    for (std::size_t i = 0; i < images[n].values.size(); ++i) {
      images[n].values[i] = static_cast<double>(static_cast<float>(0.25 * static_cast<double>(i) - 7.0 * n));
    }
  }
  const auto t = images_to_tensor(images);
  CHECK(t.dims == std::array<std::uint32_t, 4>{3, 2, 3, 64});
  std::stringstream buf;
  write_tensor(buf, t);
  const auto back = tensor_to_images(read_tensor(buf));
  REQUIRE(back.size() == 3);
  for (std::size_t n = 0; n < 3; ++n) {
    CHECK(back[n].label_t_ms == images[n].label_t_ms);
    CHECK(back[n].values == images[n].values);
  }
}

TEST_CASE("bad files are rejected") {
  SUBCASE("magic") {
    std::istringstream in(std::string("NOPE") + std::string(40, '\0'));
    CHECK_THROWS_AS(read_tensor(in), ParseError);
  }
  SUBCASE("truncated") {
    TensorFile t;
    t.dims = {1, 1, 1, 4};
    t.labels = {0};
    t.values = {1, 2, 3, 4};
    std::stringstream buf;
    write_tensor(buf, t);
    std::istringstream in(buf.str().substr(0, buf.str().size() - 3));
    CHECK_THROWS_AS(read_tensor(in), ParseError);
  }
  SUBCASE("shape mismatch on write") {
    TensorFile t;
    t.dims = {1, 1, 1, 4};
    t.labels = {0};
    t.values = {1, 2};
    std::stringstream buf;
    CHECK_THROWS_AS(write_tensor(buf, t), ValidationError);
  }
}

}  // TEST_SUITE

#pragma once

// BSLM binary tensor files (all little-endian):
//   "BSLM" | u32 version | u32 dims[4] | u64 labels[dims[0]] | f32 values[...]
// Values are stored with the last dimension fastest.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "brainslam/wavelet.hpp"

namespace brainslam {

inline constexpr std::uint32_t kTensorFormatVersion = 1;

struct TensorFile {
  std::array<std::uint32_t, 4> dims{};
  std::vector<std::uint64_t> labels;  // one per entry of dims[0]
  std::vector<float> values;

  std::size_t element_count() const {
    return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2] * dims[3];
  }
};

void write_tensor(std::ostream& out, const TensorFile& tensor);
void write_tensor_file(const std::filesystem::path& path, const TensorFile& tensor);
TensorFile read_tensor(std::istream& in);
TensorFile read_tensor_file(const std::filesystem::path& path);

// dims = (n_images, channels, frequencies, 64).
TensorFile images_to_tensor(std::span<const WaveletImage> images);
std::vector<WaveletImage> tensor_to_images(const TensorFile& tensor);

}  // namespace brainslam

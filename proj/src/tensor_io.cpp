#include "brainslam/tensor_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace brainslam {

namespace {

constexpr char kMagic[4] = {'B', 'S', 'L', 'M'};

template <class T>
void put_le(std::ostream& out, T value) {
  static_assert(std::is_integral_v<T>);
  unsigned char bytes[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bytes[i] = static_cast<unsigned char>((static_cast<std::make_unsigned_t<T>>(value) >> (8 * i)) & 0xFFu);
  }
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T get_le(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) {
    throw ParseError("tensor file truncated");
  }
  std::make_unsigned_t<T> value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    value |= static_cast<std::make_unsigned_t<T>>(bytes[i]) << (8 * i);
  }
  return static_cast<T>(value);
}

}  // namespace

void write_tensor(std::ostream& out, const TensorFile& tensor) {
  if (tensor.labels.size() != tensor.dims[0]) {
    throw ValidationError("tensor labels must match dims[0]");
  }
  if (tensor.values.size() != tensor.element_count()) {
    throw ValidationError("tensor values must match dims");
  }
  out.write(kMagic, 4);
  put_le<std::uint32_t>(out, kTensorFormatVersion);
  for (auto d : tensor.dims) put_le<std::uint32_t>(out, d);
  for (auto l : tensor.labels) put_le<std::uint64_t>(out, l);
  for (float v : tensor.values) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
}

void write_tensor_file(const std::filesystem::path& path, const TensorFile& tensor) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeAbort("cannot write " + path.string());
  write_tensor(out, tensor);
  if (!out) throw RuntimeAbort("write failed for " + path.string());
}

TensorFile read_tensor(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw ParseError("not a BSLM tensor file (bad magic)");
  }
  const auto version = get_le<std::uint32_t>(in);
  if (version != kTensorFormatVersion) {
    throw ParseError("unsupported BSLM version " + std::to_string(version));
  }
  TensorFile t;
  for (auto& d : t.dims) d = get_le<std::uint32_t>(in);
  t.labels.resize(t.dims[0]);
  for (auto& l : t.labels) l = get_le<std::uint64_t>(in);
  t.values.resize(t.element_count());
  for (auto& v : t.values) v = std::bit_cast<float>(get_le<std::uint32_t>(in));
  if (in.peek() != std::char_traits<char>::eof()) throw ParseError("trailing bytes after tensor data");
  return t;
}

TensorFile read_tensor_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  return read_tensor(in);
}

TensorFile images_to_tensor(std::span<const WaveletImage> images) {
  TensorFile t;
  const std::size_t channels = images.empty() ? 0 : images.front().n_channels;
  const std::size_t freqs = images.empty() ? 0 : images.front().n_freqs;
  t.dims = {static_cast<std::uint32_t>(images.size()), static_cast<std::uint32_t>(channels),
            static_cast<std::uint32_t>(freqs), static_cast<std::uint32_t>(kImageTimeBins)};
  t.values.reserve(t.element_count());
  for (const auto& img : images) {
    if (img.n_channels != channels || img.n_freqs != freqs) {
      throw ValidationError("images_to_tensor: images disagree on shape");
    }
    if (img.label_t_ms < 0) throw ValidationError("images_to_tensor: negative label timestamp");
    t.labels.push_back(static_cast<std::uint64_t>(img.label_t_ms));
    for (double v : img.values) t.values.push_back(static_cast<float>(v));
  }
  return t;
}

std::vector<WaveletImage> tensor_to_images(const TensorFile& tensor) {
  if (tensor.dims[3] != kImageTimeBins) throw ValidationError("wavelet tensors need 64 time bins");
  std::vector<WaveletImage> images(tensor.dims[0]);
  const std::size_t per = static_cast<std::size_t>(tensor.dims[1]) * tensor.dims[2] * tensor.dims[3];
  for (std::size_t i = 0; i < images.size(); ++i) {
    images[i].label_t_ms = static_cast<std::int64_t>(tensor.labels[i]);
    images[i].n_channels = tensor.dims[1];
    images[i].n_freqs = tensor.dims[2];
    images[i].values.assign(tensor.values.begin() + static_cast<std::ptrdiff_t>(i * per),
                            tensor.values.begin() + static_cast<std::ptrdiff_t>((i + 1) * per));
  }
  return images;
}

}  // namespace brainslam

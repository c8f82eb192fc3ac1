#include "brainslam/wavelet.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace brainslam {

namespace {

struct FftwDeleter {
  void operator()(fftw_complex* p) const { fftw_free(p); }
};
using FftwBuffer = std::unique_ptr<fftw_complex[], FftwDeleter>;

FftwBuffer make_buffer(std::size_t n) {
  auto* p = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
  if (p == nullptr) throw std::bad_alloc();
  return FftwBuffer(p);
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

void validate_frequencies(std::span<const double> frequencies, double sample_rate_hz) {
  if (frequencies.empty()) throw ValidationError("frequency grid is empty");
  for (std::size_t i = 0; i < frequencies.size(); ++i) {
    const double f = frequencies[i];
    if (!(f > 0.0) || f > sample_rate_hz / 2.0) {
      throw ValidationError("frequency " + std::to_string(f) + " Hz is outside (0, Nyquist]");
    }
    if (i > 0 && !(f > frequencies[i - 1])) {
      throw ValidationError("frequency grid must be strictly increasing");
    }
  }
}

std::size_t label_sample_index(std::int64_t t_ms, std::int64_t t0_ms, double sample_rate_hz) {
  return static_cast<std::size_t>(
      std::llround(static_cast<double>(t_ms - t0_ms) * sample_rate_hz / 1000.0));
}

}  // namespace

std::complex<double> morlet(double t, double omega0) {
  const double envelope = std::pow(kPi, -0.25) * std::exp(-t * t / 2.0);
  return {envelope * std::cos(omega0 * t), envelope * std::sin(omega0 * t)};
}

double morlet_scale_for_frequency(double f_hz, double omega0) {
  return (omega0 + std::sqrt(2.0 + omega0 * omega0)) / (4.0 * kPi * f_hz);
}

std::vector<double> default_frequencies() {
  constexpr std::size_t n = 26;
  std::vector<double> out(n);
  const double lo = std::log(2.0);
  const double hi = std::log(250.0);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::exp(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1));
  }
  out.front() = 2.0;
  out.back() = 250.0;
  return out;
}

struct MorletFilterBank::Engine {
  std::size_t block = 0;     // FFT length
  std::size_t hop = 0;       // valid outputs per block
  std::size_t max_half = 0;  // widest filter half-width
  std::vector<FftwBuffer> spectra;
  FftwBuffer in;
  FftwBuffer freq;
  FftwBuffer work;
  FftwBuffer out;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;

  ~Engine() {
    if (forward != nullptr) fftw_destroy_plan(forward);
    if (backward != nullptr) fftw_destroy_plan(backward);
  }
};

MorletFilterBank::MorletFilterBank(std::vector<double> frequencies_hz, double sample_rate_hz,
                                   double omega0)
    : frequencies_(std::move(frequencies_hz)), sample_rate_hz_(sample_rate_hz) {
  validate_frequencies(frequencies_, sample_rate_hz_);
  const double dt = 1.0 / sample_rate_hz_;
  std::size_t max_half = 0;
  for (double f : frequencies_) {
    const double s = morlet_scale_for_frequency(f, omega0);
    // Largest H with H * dt / s < 4.
    const auto half = static_cast<std::size_t>(std::ceil(4.0 * s / dt)) - 1;
    const double norm = std::sqrt(dt / s);
    std::vector<std::complex<double>> taps(2 * half + 1);
    for (std::size_t k = 0; k < taps.size(); ++k) {
      const double j = static_cast<double>(k) - static_cast<double>(half);
      taps[k] = morlet(j * dt / s, omega0) * norm;
    }
    taps_.push_back(std::move(taps));
    max_half = std::max(max_half, half);
  }

  engine_ = std::make_unique<Engine>();
  auto& e = *engine_;
  e.max_half = max_half;
  e.block = next_pow2(std::max<std::size_t>(4 * (2 * max_half + 1), 1024));
  e.hop = e.block - 2 * max_half;
  e.in = make_buffer(e.block);
  e.freq = make_buffer(e.block);
  e.work = make_buffer(e.block);
  e.out = make_buffer(e.block);
  const int n = static_cast<int>(e.block);
  e.forward = fftw_plan_dft_1d(n, e.in.get(), e.freq.get(), FFTW_FORWARD, FFTW_ESTIMATE);
  e.backward = fftw_plan_dft_1d(n, e.work.get(), e.out.get(), FFTW_BACKWARD, FFTW_ESTIMATE);

  for (const auto& taps : taps_) {
    const std::size_t half = (taps.size() - 1) / 2;
    std::fill_n(&e.in[0][0], 2 * e.block, 0.0);
    for (std::size_t k = 0; k < taps.size(); ++k) {
      // Tap j = k - half lands at circular index j mod block.
      const std::size_t idx = (k + e.block - half) % e.block;
      e.in[idx][0] = taps[k].real();
      e.in[idx][1] = taps[k].imag();
    }
    auto spectrum = make_buffer(e.block);
    fftw_execute_dft(e.forward, e.in.get(), spectrum.get());
    e.spectra.push_back(std::move(spectrum));
  }
}

MorletFilterBank::~MorletFilterBank() = default;
MorletFilterBank::MorletFilterBank(MorletFilterBank&&) noexcept = default;
MorletFilterBank& MorletFilterBank::operator=(MorletFilterBank&&) noexcept = default;

void MorletFilterBank::magnitude_direct(std::span<const double> x, std::size_t f,
                                        std::span<double> out) const {
  const auto& g = taps_.at(f);
  const auto half = static_cast<std::ptrdiff_t>((g.size() - 1) / 2);
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    std::complex<double> acc{0.0, 0.0};
    for (std::ptrdiff_t j = -half; j <= half; ++j) {
      const std::ptrdiff_t m = i - j;
      if (m < 0 || m >= n) continue;
      acc += x[static_cast<std::size_t>(m)] * g[static_cast<std::size_t>(j + half)];
    }
    out[static_cast<std::size_t>(i)] = std::abs(acc);
  }
}

void MorletFilterBank::convolve_blocks(std::span<const double> x, const BlockSink& sink) const {
  auto& e = *engine_;
  const std::size_t n = x.size();
  const double inv = 1.0 / static_cast<double>(e.block);
  std::vector<std::complex<double>> y(e.hop);
  for (std::size_t n0 = 0; n0 < n; n0 += e.hop) {
    for (std::size_t k = 0; k < e.block; ++k) {
      // u[k] = x[n0 - max_half + k], zero outside the signal.
      const auto m = static_cast<std::ptrdiff_t>(n0 + k) - static_cast<std::ptrdiff_t>(e.max_half);
      e.in[k][0] = (m >= 0 && m < static_cast<std::ptrdiff_t>(n)) ? x[static_cast<std::size_t>(m)] : 0.0;
      e.in[k][1] = 0.0;
    }
    fftw_execute_dft(e.forward, e.in.get(), e.freq.get());
    const std::size_t count = std::min(e.hop, n - n0);
    for (std::size_t f = 0; f < taps_.size(); ++f) {
      const fftw_complex* g = e.spectra[f].get();
      for (std::size_t k = 0; k < e.block; ++k) {
        const double ar = e.freq[k][0];
        const double ai = e.freq[k][1];
        e.work[k][0] = ar * g[k][0] - ai * g[k][1];
        e.work[k][1] = ar * g[k][1] + ai * g[k][0];
      }
      fftw_execute_dft(e.backward, e.work.get(), e.out.get());
      for (std::size_t i = 0; i < count; ++i) {
        const std::size_t k = i + e.max_half;
        y[i] = {e.out[k][0] * inv, e.out[k][1] * inv};
      }
      sink(f, n0, std::span<const std::complex<double>>(y.data(), count));
    }
  }
}

void MorletFilterBank::magnitudes(std::span<const double> x, std::span<double> out) const {
  const std::size_t n = x.size();
  if (out.size() != n * taps_.size()) throw std::invalid_argument("magnitudes: output size mismatch");
  convolve_blocks(x, [&](std::size_t f, std::size_t n0, std::span<const std::complex<double>> y) {
    for (std::size_t i = 0; i < y.size(); ++i) out[f * n + n0 + i] = std::abs(y[i]);
  });
}

Scalogram morlet_transform(const LfpRecording& recording, std::span<const double> frequencies) {
  validate_frequencies(frequencies, recording.sample_rate_hz);
  const MorletFilterBank bank({frequencies.begin(), frequencies.end()}, recording.sample_rate_hz);
  Scalogram out;
  out.frequencies.assign(frequencies.begin(), frequencies.end());
  out.t0_ms = recording.t0_ms;
  out.sample_rate_hz = recording.sample_rate_hz;
  out.n_channels = recording.n_channels();
  out.n_times = recording.n_samples();
  out.values.assign(out.n_channels * out.n_freqs() * out.n_times, 0.0);
  const std::size_t per_channel = out.n_freqs() * out.n_times;
  for (std::size_t c = 0; c < out.n_channels; ++c) {
    bank.magnitudes(recording.channels[c],
                    std::span<double>(out.values.data() + c * per_channel, per_channel));
  }
  return out;
}

namespace {

struct WindowPlan {
  std::vector<std::size_t> starts;
  std::vector<std::int64_t> labels;
};

WindowPlan plan_windows(std::span<const TrajectorySample> labels, std::int64_t t0_ms,
                        double sample_rate_hz, std::size_t n_times) {
  WindowPlan plan;
  constexpr auto half = static_cast<std::int64_t>(kImageTimeBins / 2);
  for (const auto& label : labels) {
    if (!plan.labels.empty() && label.t_ms <= plan.labels.back()) {
      throw ValidationError("window: label timestamps must strictly increase");
    }
    if (label.t_ms < t0_ms) continue;
    const auto centre = static_cast<std::int64_t>(label_sample_index(label.t_ms, t0_ms, sample_rate_hz));
    if (centre - half < 0 || centre + half > static_cast<std::int64_t>(n_times)) continue;
    plan.starts.push_back(static_cast<std::size_t>(centre - half));
    plan.labels.push_back(label.t_ms);
  }
  return plan;
}

std::vector<WaveletImage> empty_images(const WindowPlan& plan, std::size_t n_channels,
                                       std::size_t n_freqs) {
  std::vector<WaveletImage> images(plan.starts.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    images[i].label_t_ms = plan.labels[i];
    images[i].n_channels = n_channels;
    images[i].n_freqs = n_freqs;
    images[i].values.assign(n_channels * n_freqs * kImageTimeBins, 0.0);
  }
  return images;
}

}  // namespace

std::vector<WaveletImage> window(const Scalogram& scalogram, std::span<const TrajectorySample> labels) {
  const auto plan = plan_windows(labels, scalogram.t0_ms, scalogram.sample_rate_hz, scalogram.n_times);
  auto images = empty_images(plan, scalogram.n_channels, scalogram.n_freqs());
  for (std::size_t i = 0; i < images.size(); ++i) {
    for (std::size_t c = 0; c < scalogram.n_channels; ++c) {
      for (std::size_t f = 0; f < scalogram.n_freqs(); ++f) {
        for (std::size_t t = 0; t < kImageTimeBins; ++t) {
          images[i].at(c, f, t) = scalogram.at(c, f, plan.starts[i] + t);
        }
      }
    }
  }
  return images;
}

std::vector<WaveletImage> transform_windows(const LfpRecording& recording, const MorletFilterBank& bank,
                                            std::span<const TrajectorySample> labels) {
  if (bank.sample_rate_hz() != recording.sample_rate_hz) {
    throw ValidationError("filter bank and recording sample rates differ");
  }
  const auto plan = plan_windows(labels, recording.t0_ms, recording.sample_rate_hz, recording.n_samples());
  auto images = empty_images(plan, recording.n_channels(), bank.frequencies().size());
  if (images.empty()) return images;
  for (std::size_t c = 0; c < recording.n_channels(); ++c) {
    bank.convolve_blocks(recording.channels[c], [&](std::size_t f, std::size_t n0,
                                                    std::span<const std::complex<double>> y) {
      const std::size_t n1 = n0 + y.size();
      // First window that can overlap [n0, n1).
      auto it = std::lower_bound(plan.starts.begin(), plan.starts.end(),
                                 n0 >= kImageTimeBins ? n0 - kImageTimeBins + 1 : 0);
      for (; it != plan.starts.end() && *it < n1; ++it) {
        const std::size_t i = static_cast<std::size_t>(it - plan.starts.begin());
        const std::size_t lo = std::max(*it, n0);
        const std::size_t hi = std::min(*it + kImageTimeBins, n1);
        for (std::size_t s = lo; s < hi; ++s) images[i].at(c, f, s - *it) = std::abs(y[s - n0]);
      }
    });
  }
  return images;
}

double median_of(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of an empty set");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

namespace {

template <class Gather>
NormStats fit_stats(std::size_t n_channels, std::size_t n_freqs, CenterStatistic center,
                    double scale_floor, Gather gather) {
  NormStats stats;
  stats.n_channels = n_channels;
  stats.n_freqs = n_freqs;
  stats.center_statistic = center;
  stats.scale_floor = scale_floor;
  stats.center.resize(n_channels * n_freqs);
  stats.scale.resize(n_channels * n_freqs);
  std::vector<double> values;
  for (std::size_t c = 0; c < n_channels; ++c) {
    for (std::size_t f = 0; f < n_freqs; ++f) {
      values.clear();
      gather(c, f, values);
      const double mid = center == CenterStatistic::median
                             ? median_of(values)
                             : std::accumulate(values.begin(), values.end(), 0.0) /
                                   static_cast<double>(values.size());
      for (double& v : values) v = std::abs(v - mid);
      const std::size_t k = stats.index(c, f);
      stats.center[k] = mid;
      stats.scale[k] = std::max(median_of(values), scale_floor);
    }
  }
  return stats;
}

}  // namespace

NormStats fit_norm_stats(std::span<const Scalogram> training, CenterStatistic center,
                         double scale_floor) {
  if (training.empty()) throw ValidationError("fit_norm_stats: no training scalograms");
  const auto& first = training.front();
  for (const auto& s : training) {
    if (s.n_channels != first.n_channels || s.frequencies != first.frequencies) {
      throw ValidationError("fit_norm_stats: scalograms disagree on shape");
    }
  }
  return fit_stats(first.n_channels, first.n_freqs(), center, scale_floor,
                   [&](std::size_t c, std::size_t f, std::vector<double>& out) {
                     for (const auto& s : training) {
                       for (std::size_t t = 0; t < s.n_times; ++t) out.push_back(s.at(c, f, t));
                     }
                   });
}

NormStats fit_norm_stats(std::span<const WaveletImage> training, CenterStatistic center,
                         double scale_floor) {
  if (training.empty()) throw ValidationError("fit_norm_stats: no training images");
  const auto& first = training.front();
  for (const auto& img : training) {
    if (img.n_channels != first.n_channels || img.n_freqs != first.n_freqs) {
      throw ValidationError("fit_norm_stats: images disagree on shape");
    }
  }
  return fit_stats(first.n_channels, first.n_freqs, center, scale_floor,
                   [&](std::size_t c, std::size_t f, std::vector<double>& out) {
                     for (const auto& img : training) {
                       for (std::size_t t = 0; t < kImageTimeBins; ++t) out.push_back(img.at(c, f, t));
                     }
                   });
}

Scalogram normalize(const Scalogram& scalogram, const NormStats& stats) {
  if (stats.n_channels != scalogram.n_channels || stats.n_freqs != scalogram.n_freqs() ||
      stats.center.size() != stats.n_channels * stats.n_freqs ||
      stats.scale.size() != stats.center.size()) {
    throw ValidationError("normalize: stats do not cover every (channel, frequency) pair");
  }
  Scalogram out = scalogram;
  for (std::size_t c = 0; c < out.n_channels; ++c) {
    for (std::size_t f = 0; f < out.n_freqs(); ++f) {
      const std::size_t k = stats.index(c, f);
      for (std::size_t t = 0; t < out.n_times; ++t) {
        out.at(c, f, t) = (out.at(c, f, t) - stats.center[k]) / stats.scale[k];
      }
    }
  }
  return out;
}

void normalize_in_place(std::span<WaveletImage> images, const NormStats& stats) {
  for (auto& img : images) {
    if (stats.n_channels != img.n_channels || stats.n_freqs != img.n_freqs ||
        stats.center.size() != stats.n_channels * stats.n_freqs) {
      throw ValidationError("normalize: stats do not cover every (channel, frequency) pair");
    }
    for (std::size_t c = 0; c < img.n_channels; ++c) {
      for (std::size_t f = 0; f < img.n_freqs; ++f) {
        const std::size_t k = stats.index(c, f);
        for (std::size_t t = 0; t < kImageTimeBins; ++t) {
          img.at(c, f, t) = (img.at(c, f, t) - stats.center[k]) / stats.scale[k];
        }
      }
    }
  }
}

}  // namespace brainslam

#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "brainslam/lfp.hpp"
#include "brainslam/trajectory.hpp"

namespace brainslam {

inline constexpr double kMorletOmega0 = 6.0;
inline constexpr std::size_t kImageTimeBins = 64;  // 32 ms at 2 kHz
inline constexpr double kDefaultScaleFloor = 1e-6;

/// psi(t) = pi^(-1/4) exp(i w0 t) exp(-t^2 / 2)
std::complex<double> morlet(double t, double omega0 = kMorletOmega0);

/// Scale (seconds) whose wavelet responds most strongly to a tone at f_hz:
/// f = (w0 + sqrt(2 + w0^2)) / (4 pi s).
double morlet_scale_for_frequency(double f_hz, double omega0 = kMorletOmega0);

/// 26 log-spaced centre frequencies, 2 Hz to 250 Hz.
std::vector<double> default_frequencies();

/// Morlet filters for a fixed frequency grid. Each filter is the wavelet
/// scaled to its centre frequency, normalised by sqrt(dt / s) and truncated to
/// |t| < 4 s; samples outside the signal count as zero.
class MorletFilterBank {
 public:
  MorletFilterBank(std::vector<double> frequencies_hz, double sample_rate_hz = kLfpSampleRateHz,
                   double omega0 = kMorletOmega0);
  ~MorletFilterBank();
  MorletFilterBank(MorletFilterBank&&) noexcept;
  MorletFilterBank& operator=(MorletFilterBank&&) noexcept;
  MorletFilterBank(const MorletFilterBank&) = delete;
  MorletFilterBank& operator=(const MorletFilterBank&) = delete;

  const std::vector<double>& frequencies() const { return frequencies_; }
  double sample_rate_hz() const { return sample_rate_hz_; }
  std::size_t half_width(std::size_t f) const { return (taps_[f].size() - 1) / 2; }
  // Taps g[-H..H] stored at [0, 2H].
  std::span<const std::complex<double>> taps(std::size_t f) const { return taps_[f]; }

  /// Reference route: |sum_j x[n - j] g[j]| evaluated term by term.
  void magnitude_direct(std::span<const double> x, std::size_t f, std::span<double> out) const;

  /// FFT overlap-save route; `out` is [frequency][sample].
  void magnitudes(std::span<const double> x, std::span<double> out) const;

  /// Streams the complex filter outputs block by block: `sink(f, n0, y)`
  /// receives outputs for samples [n0, n0 + y.size()).
  using BlockSink =
      std::function<void(std::size_t f, std::size_t n0, std::span<const std::complex<double>> y)>;
  void convolve_blocks(std::span<const double> x, const BlockSink& sink) const;

 private:
  struct Engine;

  std::vector<double> frequencies_;
  double sample_rate_hz_;
  std::vector<std::vector<std::complex<double>>> taps_;
  std::unique_ptr<Engine> engine_;
};

/// Magnitudes [channel][frequency][time] for one recording.
struct Scalogram {
  std::vector<double> frequencies;
  std::int64_t t0_ms = 0;
  double sample_rate_hz = kLfpSampleRateHz;
  std::size_t n_channels = 0;
  std::size_t n_times = 0;
  std::vector<double> values;

  std::size_t n_freqs() const { return frequencies.size(); }
  double& at(std::size_t c, std::size_t f, std::size_t t) {
    return values[(c * n_freqs() + f) * n_times + t];
  }
  double at(std::size_t c, std::size_t f, std::size_t t) const {
    return values[(c * n_freqs() + f) * n_times + t];
  }
};

/// Rejects frequencies outside (0, Nyquist] or not strictly increasing.
Scalogram morlet_transform(const LfpRecording& recording, std::span<const double> frequencies);

struct WaveletImage {
  std::int64_t label_t_ms = 0;
  std::size_t n_channels = 0;
  std::size_t n_freqs = 0;
  std::vector<double> values;  // [channel][frequency][64]

  double& at(std::size_t c, std::size_t f, std::size_t t) {
    return values[(c * n_freqs + f) * kImageTimeBins + t];
  }
  double at(std::size_t c, std::size_t f, std::size_t t) const {
    return values[(c * n_freqs + f) * kImageTimeBins + t];
  }
};

/// One 64-bin slice per label, centred on the label timestamp: samples
/// [c - 32, c + 32) where c is the label's sample index. Labels whose window
/// leaves the scalogram are dropped.
std::vector<WaveletImage> window(const Scalogram& scalogram, std::span<const TrajectorySample> labels);

/// Same images as window(morlet_transform(recording), labels) without
/// materialising the whole scalogram.
std::vector<WaveletImage> transform_windows(const LfpRecording& recording, const MorletFilterBank& bank,
                                            std::span<const TrajectorySample> labels);

enum class CenterStatistic { median, mean };

/// Per (channel, frequency) centre and median absolute deviation.
struct NormStats {
  std::size_t n_channels = 0;
  std::size_t n_freqs = 0;
  CenterStatistic center_statistic = CenterStatistic::median;
  double scale_floor = kDefaultScaleFloor;
  std::vector<double> center;
  std::vector<double> scale;

  std::size_t index(std::size_t c, std::size_t f) const { return c * n_freqs + f; }
};

NormStats fit_norm_stats(std::span<const Scalogram> training,
                         CenterStatistic center = CenterStatistic::median,
                         double scale_floor = kDefaultScaleFloor);
NormStats fit_norm_stats(std::span<const WaveletImage> training,
                         CenterStatistic center = CenterStatistic::median,
                         double scale_floor = kDefaultScaleFloor);

Scalogram normalize(const Scalogram& scalogram, const NormStats& stats);
void normalize_in_place(std::span<WaveletImage> images, const NormStats& stats);

// Median of a copy; the mean of the two middle values for even sizes.
double median_of(std::vector<double> values);

}  // namespace brainslam

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

#include "synchrolab/dataset.hpp"
#include "synchrolab/error.hpp"
#include "synchrolab/numeric.hpp"

namespace synchrolab {

struct PreprocessConfig {
  double cutoff_hz = 0.5;
  int filter_order = 2;
  bool zero_phase = true;
  double iqr_multiplier = 1.5;  // 0 turns the quartiles themselves into the fences
  double ma_window_s = 1.0;
  double analysis_hz = 10.0;
  double animation_hz = 30.0;
};

/// Transfer function b(z)/a(z) with a[0] == 1.
struct FilterCoefficients {
  std::vector<double> b;
  std::vector<double> a;
};

/// Digital Butterworth low-pass via the bilinear transform of the analog
/// prototype, with the cutoff pre-warped so the -3 dB point lands on cutoff_hz.
inline FilterCoefficients design_butterworth_lowpass(int order, double cutoff_hz, double rate_hz) {
  using cplx = std::complex<double>;
  if (order < 1) throw Error("preprocess", Errc::InvalidArgument, "filter order must be >= 1");
  if (!(rate_hz > 0.0) || !(cutoff_hz > 0.0))
    throw Error("preprocess", Errc::InvalidArgument, "cutoff and sample rate must be positive");
  if (cutoff_hz >= rate_hz / 2.0)
    throw Error("preprocess", Errc::CutoffAboveNyquist, "cutoff " + std::to_string(cutoff_hz) +
                                                             " Hz is not below Nyquist (" +
                                                             std::to_string(rate_hz / 2.0) + " Hz)");

  const double fs2 = 2.0 * rate_hz;
  const double warped = fs2 * std::tan(std::numbers::pi * cutoff_hz / rate_hz);

  std::vector<cplx> poles;
  cplx denom_gain = 1.0;
  for (int m = -order + 1; m < order; m += 2) {
    const cplx p = -std::exp(cplx(0.0, std::numbers::pi * m / (2.0 * order))) * warped;
    denom_gain *= (fs2 - p);
    poles.push_back((fs2 + p) / (fs2 - p));
  }
  const double gain = std::pow(warped, order) / denom_gain.real();

  // Expand prod (z - root) for the poles, and (z + 1)^order for the zeros.
  std::vector<cplx> a_poly{1.0};
  for (const cplx& p : poles) {
    std::vector<cplx> next(a_poly.size() + 1, 0.0);
    for (std::size_t i = 0; i < a_poly.size(); ++i) {
      next[i] += a_poly[i];
      next[i + 1] -= a_poly[i] * p;
    }
    a_poly = std::move(next);
  }
  FilterCoefficients fc;
  fc.a.resize(a_poly.size());
  std::transform(a_poly.begin(), a_poly.end(), fc.a.begin(), [](cplx c) { return c.real(); });
  fc.b.assign(static_cast<std::size_t>(order) + 1, 0.0);
  double binom = 1.0;
  for (int k = 0; k <= order; ++k) {
    fc.b[static_cast<std::size_t>(k)] = gain * binom;
    binom = binom * (order - k) / (k + 1);
  }
  return fc;
}

namespace detail {

inline std::vector<double> solve_dense(std::vector<double> m, std::vector<double> rhs) {
  const std::size_t n = rhs.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(m[r * n + col]) > std::abs(m[piv * n + col])) piv = r;
    if (piv != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(m[col * n + c], m[piv * n + c]);
      std::swap(rhs[col], rhs[piv]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = m[r * n + col] / m[col * n + col];
      for (std::size_t c = col; c < n; ++c) m[r * n + c] -= f * m[col * n + c];
      rhs[r] -= f * rhs[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = rhs[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= m[i * n + c] * x[c];
    x[i] = s / m[i * n + i];
  }
  return x;
}

}  // namespace detail

/// Initial state of the transposed direct form II filter corresponding to the
/// steady state of a unit step input.
inline std::vector<double> lfilter_steady_state(const FilterCoefficients& fc) {
  const std::size_t n = fc.a.size() - 1;
  if (n == 0) return {};
  // (I - A^T) zi = b[1:] - a[1:] * b[0], A the companion matrix of a.
  std::vector<double> m(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) m[i * n + i] = 1.0;
  for (std::size_t i = 0; i < n; ++i) m[i * n + 0] += fc.a[i + 1];
  for (std::size_t i = 0; i + 1 < n; ++i) m[i * n + i + 1] -= 1.0;
  std::vector<double> rhs(n);
  for (std::size_t i = 0; i < n; ++i) rhs[i] = fc.b[i + 1] - fc.a[i + 1] * fc.b[0];
  return detail::solve_dense(std::move(m), std::move(rhs));
}

/// Causal IIR filtering (transposed direct form II); `state` is updated in place.
inline Series lfilter(const FilterCoefficients& fc, SeriesView x, std::vector<double> state) {
  const std::size_t order = fc.a.size() - 1;
  state.resize(order, 0.0);
  Series y(x.size());
  for (std::size_t n = 0; n < x.size(); ++n) {
    const double xn = x[n];
    const double yn = fc.b[0] * xn + (order > 0 ? state[0] : 0.0);
    for (std::size_t k = 0; k + 1 < order; ++k) state[k] = fc.b[k + 1] * xn + state[k + 1] - fc.a[k + 1] * yn;
    if (order > 0) state[order - 1] = fc.b[order] * xn - fc.a[order] * yn;
    y[n] = yn;
  }
  return y;
}

/// Forward-backward filtering with odd (point-symmetric) edge extension of
/// `padlen` samples and steady-state initial conditions.
inline Series filtfilt(const FilterCoefficients& fc, SeriesView x, std::size_t padlen) {
  const std::size_t n = x.size();
  padlen = std::min(padlen, n > 0 ? n - 1 : 0);
  Series ext;
  ext.reserve(n + 2 * padlen);
  for (std::size_t k = padlen; k >= 1; --k) ext.push_back(2.0 * x[0] - x[k]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t k = 1; k <= padlen; ++k) ext.push_back(2.0 * x[n - 1] - x[n - 1 - k]);

  const auto zi = lfilter_steady_state(fc);
  auto scaled = [&zi](double s) {
    std::vector<double> out(zi);
    for (double& v : out) v *= s;
    return out;
  };
  Series fwd = lfilter(fc, ext, scaled(ext.front()));
  std::reverse(fwd.begin(), fwd.end());
  Series back = lfilter(fc, fwd, scaled(fwd.front()));
  std::reverse(back.begin(), back.end());
  return Series(back.begin() + static_cast<std::ptrdiff_t>(padlen),
                back.begin() + static_cast<std::ptrdiff_t>(padlen + n));
}

inline std::size_t filter_padlen(int order) { return 3 * (static_cast<std::size_t>(order) + 1); }

/// Butterworth low-pass per `cfg`; zero-phase (forward-backward) unless
/// cfg.zero_phase is false, in which case a single causal pass is made.
inline Series butterworth_lowpass(SeriesView signal, double rate_hz, const PreprocessConfig& cfg) {
  const auto fc = design_butterworth_lowpass(cfg.filter_order, cfg.cutoff_hz, rate_hz);
  const std::size_t padlen = filter_padlen(cfg.filter_order);
  if (signal.size() < padlen)
    throw Error("preprocess", Errc::SignalTooShort,
                "signal of " + std::to_string(signal.size()) + " samples is shorter than " +
                    std::to_string(padlen) + " needed by the filter");
  if (cfg.zero_phase) return filtfilt(fc, signal, padlen);
  auto zi = lfilter_steady_state(fc);
  for (double& v : zi) v *= signal[0];
  return lfilter(fc, signal, std::move(zi));
}

/// Per-sample outlier flags.
class OutlierMask {
 public:
  OutlierMask() = default;
  explicit OutlierMask(std::vector<bool> flags) : flags_(std::move(flags)) {}

  bool operator[](std::size_t i) const { return flags_[i]; }
  std::size_t size() const { return flags_.size(); }
  std::size_t count() const { return static_cast<std::size_t>(std::count(flags_.begin(), flags_.end(), true)); }
  const std::vector<bool>& flags() const { return flags_; }

  friend bool operator==(const OutlierMask&, const OutlierMask&) = default;

 private:
  std::vector<bool> flags_;
};

/// Flags samples outside [Q1 - k*IQR, Q3 + k*IQR], quartiles by type-7 interpolation.
inline OutlierMask detect_outliers(SeriesView signal, double iqr_multiplier) {
  if (signal.size() < 4)
    throw Error("preprocess", Errc::SignalTooShort, "outlier detection needs at least 4 samples");
  if (!(iqr_multiplier >= 0.0))
    throw Error("preprocess", Errc::InvalidArgument, "IQR multiplier must be non-negative");
  Series sorted(signal.begin(), signal.end());
  std::sort(sorted.begin(), sorted.end());
  const double q1 = quantile_sorted(sorted, 0.25);
  const double q3 = quantile_sorted(sorted, 0.75);
  const double iqr = q3 - q1;
  const double lo = q1 - iqr_multiplier * iqr;
  const double hi = q3 + iqr_multiplier * iqr;
  std::vector<bool> flags(signal.size());
  for (std::size_t i = 0; i < signal.size(); ++i) flags[i] = signal[i] < lo || signal[i] > hi;
  return OutlierMask(std::move(flags));
}

/// Replaces flagged runs by straight lines between the nearest valid
/// neighbours. Leading and trailing runs take the nearest valid value.
inline Series interpolate_outliers(SeriesView signal, const OutlierMask& mask) {
  if (mask.size() != signal.size())
    throw Error("preprocess", Errc::LengthMismatch, "mask length differs from signal length");
  Series out(signal.begin(), signal.end());
  const std::size_t n = signal.size();
  std::size_t prev_valid = n;  // n == none yet
  std::size_t i = 0;
  while (i < n) {
    if (!mask[i]) {
      prev_valid = i++;
      continue;
    }
    std::size_t j = i;
    while (j < n && mask[j]) ++j;
    if (prev_valid == n && j == n) throw Error("preprocess", Errc::AllFlagged, "every sample is flagged");
    if (prev_valid == n) {
      std::fill(out.begin() + static_cast<std::ptrdiff_t>(i), out.begin() + static_cast<std::ptrdiff_t>(j), signal[j]);
    } else if (j == n) {
      std::fill(out.begin() + static_cast<std::ptrdiff_t>(i), out.end(), signal[prev_valid]);
    } else {
      const double y0 = signal[prev_valid];
      const double y1 = signal[j];
      const double span = static_cast<double>(j - prev_valid);
      for (std::size_t k = i; k < j; ++k) out[k] = y0 + (y1 - y0) * static_cast<double>(k - prev_valid) / span;
    }
    i = j;
  }
  return out;
}

inline std::size_t odd_window(double window_s, double rate_hz) {
  auto w = static_cast<std::size_t>(std::max(1.0, std::round(window_s * rate_hz)));
  if (w % 2 == 0) ++w;
  return w;
}

/// Centered moving average; near the edges the window is truncated to the
/// samples that exist.
inline Series moving_average(SeriesView signal, double rate_hz, double window_s) {
  if (!(window_s > 0.0) || !(rate_hz > 0.0))
    throw Error("preprocess", Errc::InvalidArgument, "moving-average window and rate must be positive");
  const std::size_t half = odd_window(window_s, rate_hz) / 2;
  const std::size_t n = signal.size();
  Series out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n - 1, i + half);
    double s = 0.0;
    for (std::size_t k = lo; k <= hi; ++k) s += signal[k];
    out[i] = s / static_cast<double>(hi - lo + 1);
  }
  return out;
}

inline Series minmax_normalize(SeriesView signal) {
  if (signal.empty()) throw Error("preprocess", Errc::EmptyInput, "cannot normalize an empty signal");
  const auto [mn, mx] = std::minmax_element(signal.begin(), signal.end());
  const double lo = *mn;
  const double range = *mx - lo;
  const double scale = std::max(std::abs(lo), std::abs(*mx));
  if (!(range > 64.0 * std::numeric_limits<double>::epsilon() * scale))
    throw Error("preprocess", Errc::DegenerateRange, "signal has zero range");
  Series out(signal.size());
  std::transform(signal.begin(), signal.end(), out.begin(), [&](double x) { return (x - lo) / range; });
  return out;
}

/// Number of output samples when resampling n samples: the span between the
/// first and last input sample, (n - 1) / from_hz, is kept, and both ends of
/// that span are on the output grid.
inline std::size_t resampled_length(std::size_t n, double from_hz, double to_hz) {
  if (n == 0) return 0;
  return static_cast<std::size_t>(std::llround(static_cast<double>(n - 1) / from_hz * to_hz)) + 1;
}

/// Linear interpolation onto a uniform grid at to_hz starting at the first
/// input sample. Output points past the last input sample hold its value.
inline Series resample(SeriesView signal, double from_hz, double to_hz) {
  if (!(from_hz > 0.0) || !(to_hz > 0.0))
    throw Error("preprocess", Errc::InvalidArgument, "resampling rates must be positive");
  if (from_hz == to_hz) return Series(signal.begin(), signal.end());
  const std::size_t n = signal.size();
  const std::size_t len = resampled_length(n, from_hz, to_hz);
  Series out(len);
  for (std::size_t k = 0; k < len; ++k) {
    const double pos = static_cast<double>(k) * from_hz / to_hz;
    if (pos >= static_cast<double>(n - 1)) {
      out[k] = signal[n - 1];
      continue;
    }
    const auto i = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i);
    out[k] = frac == 0.0 ? signal[i] : signal[i] + frac * (signal[i + 1] - signal[i]);
  }
  return out;
}

/// Full EDA cleaning chain: low-pass, outlier flagging and repair, moving
/// average, min-max normalisation. Sample rate is unchanged.
inline Recording preprocess_pipeline(const Recording& rec, const PreprocessConfig& cfg) {
  Recording out = rec;
  const double rate = rec.sample_rate_hz;
  if (!all_finite(rec.samples))
    throw Error("preprocess", Errc::InvalidArgument, "recording '" + rec.subject_id + "' has non-finite samples");
  Series s = butterworth_lowpass(rec.samples, rate, cfg);
  const OutlierMask mask = detect_outliers(s, cfg.iqr_multiplier);
  s = interpolate_outliers(s, mask);
  s = moving_average(s, rate, cfg.ma_window_s);
  out.samples = minmax_normalize(s);
  return out;
}

}  // namespace synchrolab

#pragma once

#include <algorithm>
#include <string_view>
#include <vector>

#include "synchrolab/error.hpp"
#include "synchrolab/numeric.hpp"
#include "synchrolab/preprocess.hpp"

namespace synchrolab {

enum class DecomposeMethod { ComplementaryLowpass, MedianBaseline };

constexpr std::string_view method_name(DecomposeMethod m) {
  return m == DecomposeMethod::ComplementaryLowpass ? "complementary_lowpass" : "median_baseline";
}

inline DecomposeMethod parse_decompose_method(std::string_view s) {
  if (s == "complementary_lowpass") return DecomposeMethod::ComplementaryLowpass;
  if (s == "median_baseline") return DecomposeMethod::MedianBaseline;
  throw Error("decompose", Errc::InvalidArgument, "unknown decomposition method '" + std::string(s) + "'");
}

struct DecomposeConfig {
  DecomposeMethod method = DecomposeMethod::ComplementaryLowpass;
  double tonic_cutoff_hz = 0.05;
  int filter_order = 2;
  double median_window_s = 8.0;
};

struct EdaComponents {
  Series tonic;
  Series phasic;
  DecomposeMethod method = DecomposeMethod::ComplementaryLowpass;
};

/// Centered rolling median, truncated at the edges.
inline Series rolling_median(SeriesView signal, double rate_hz, double window_s) {
  const std::size_t half = odd_window(window_s, rate_hz) / 2;
  const std::size_t n = signal.size();
  Series out(n);
  Series buf;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n - 1, i + half);
    buf.assign(signal.begin() + static_cast<std::ptrdiff_t>(lo), signal.begin() + static_cast<std::ptrdiff_t>(hi + 1));
    out[i] = quantile(buf, 0.5);
  }
  return out;
}

/// Splits a cleaned EDA trace into a slow tonic level and the fast phasic
/// residual. For the complementary low-pass method phasic is computed as
/// signal - tonic, so the two always sum back to the input.
inline EdaComponents tonic_phasic_split(SeriesView signal, double rate_hz, const DecomposeConfig& cfg = {}) {
  EdaComponents out;
  out.method = cfg.method;
  if (!(cfg.tonic_cutoff_hz > 0.0)) throw Error("decompose", Errc::InvalidArgument, "tonic cutoff must be positive");
  if (cfg.tonic_cutoff_hz >= rate_hz / 2.0)
    throw Error("decompose", Errc::CutoffAboveNyquist, "tonic cutoff is not below Nyquist");
  if (cfg.method == DecomposeMethod::ComplementaryLowpass) {
    PreprocessConfig lp;
    lp.cutoff_hz = cfg.tonic_cutoff_hz;
    lp.filter_order = cfg.filter_order;
    lp.zero_phase = true;
    out.tonic = butterworth_lowpass(signal, rate_hz, lp);
  } else {
    if (!(cfg.median_window_s > 0.0))
      throw Error("decompose", Errc::InvalidArgument, "median window must be positive");
    out.tonic = rolling_median(signal, rate_hz, cfg.median_window_s);
  }
  out.phasic.resize(signal.size());
  for (std::size_t i = 0; i < signal.size(); ++i) out.phasic[i] = signal[i] - out.tonic[i];
  return out;
}

}  // namespace synchrolab

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "synchrolab/dataset.hpp"
#include "synchrolab/error.hpp"
#include "synchrolab/numeric.hpp"
#include "synchrolab/parallel.hpp"
#include "synchrolab/preprocess.hpp"

namespace synchrolab {

enum class BaseProfile { ConcertLike, Flat, Custom };

inline BaseProfile parse_base_profile(std::string_view s) {
  if (s == "concert_like") return BaseProfile::ConcertLike;
  if (s == "flat") return BaseProfile::Flat;
  if (s == "custom") return BaseProfile::Custom;
  throw Error("synthgen", Errc::InvalidArgument, "unknown base profile '" + std::string(s) + "'");
}

struct SynthConfig {
  std::string label = "synthetic";
  std::string id_prefix = "S";
  int n_subjects = 10;
  double duration_s = 260.0;
  double rate_hz = 10.0;
  BaseProfile base_profile = BaseProfile::ConcertLike;
  Series custom_profile;  // samples at rate_hz, used when base_profile == Custom
  double noise_sigma = 0.1;
  double lag_max_s = 0.0;
  double gain_lo = 1.0;
  double gain_hi = 1.0;
  std::uint64_t seed = 1;
};

/// Arousal-like reference shape: linear decline 1.0 -> 0.4 over 0-100 s, a
/// raised-cosine rise to 0.8 peaking at 130 s, then a raised-cosine decay to
/// 0.2 at 260 s. Held constant outside [0, 260].
inline double concert_like_profile(double t) {
  constexpr double pi = std::numbers::pi;
  if (t <= 0.0) return 1.0;
  if (t < 100.0) return 1.0 - 0.6 * t / 100.0;
  if (t < 130.0) return 0.4 + 0.4 * (1.0 - std::cos(pi * (t - 100.0) / 30.0)) / 2.0;
  if (t < 260.0) return 0.2 + 0.6 * (1.0 + std::cos(pi * (t - 130.0) / 130.0)) / 2.0;
  return 0.2;
}

inline std::size_t synth_length(const SynthConfig& cfg) {
  return static_cast<std::size_t>(std::llround(cfg.duration_s * cfg.rate_hz));
}

inline double base_profile_at(const SynthConfig& cfg, double t) {
  switch (cfg.base_profile) {
    case BaseProfile::ConcertLike: return concert_like_profile(t * 260.0 / cfg.duration_s);
    case BaseProfile::Flat: return 0.5;
    case BaseProfile::Custom: {
      const auto& c = cfg.custom_profile;
      const double pos = std::clamp(t * cfg.rate_hz, 0.0, static_cast<double>(c.size() - 1));
      const auto i = static_cast<std::size_t>(pos);
      if (i + 1 >= c.size()) return c.back();
      return c[i] + (pos - static_cast<double>(i)) * (c[i + 1] - c[i]);
    }
  }
  return 0.0;
}

inline Series base_profile_series(const SynthConfig& cfg) {
  Series out(synth_length(cfg));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = base_profile_at(cfg, static_cast<double>(i) / cfg.rate_hz);
  return out;
}

inline void check_synth_config(const SynthConfig& cfg) {
  if (cfg.n_subjects < 0 || !(cfg.duration_s > 0.0) || !(cfg.rate_hz > 1.0) || !(cfg.noise_sigma >= 0.0) ||
      !(cfg.lag_max_s >= 0.0) || !(cfg.gain_hi >= cfg.gain_lo))
    throw Error("synthgen", Errc::InvalidArgument, "invalid synthetic cohort configuration");
  if (cfg.base_profile == BaseProfile::Custom && cfg.custom_profile.empty())
    throw Error("synthgen", Errc::InvalidArgument, "custom base profile is empty");
}

/// Generates subject = gain * base(t - lag) + smooth noise. Noise is white
/// Gaussian, low-passed at 0.5 Hz (zero phase) and rescaled to standard
/// deviation noise_sigma. Each subject draws from its own stream seeded by
/// (seed, subject index), so output is independent of `threads`.
inline Cohort gen_cohort(const SynthConfig& cfg, unsigned threads = 1) {
  check_synth_config(cfg);
  const std::size_t len = synth_length(cfg);
  Cohort cohort;
  cohort.label = cfg.label;
  cohort.duration_s = cfg.duration_s;
  cohort.recordings.resize(static_cast<std::size_t>(cfg.n_subjects));

  PreprocessConfig noise_lp;
  noise_lp.cutoff_hz = 0.5;
  noise_lp.filter_order = 2;

  parallel_for(cohort.recordings.size(), threads, [&](std::size_t s) {
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed & 0xffffffffu), static_cast<std::uint32_t>(cfg.seed >> 32),
                      static_cast<std::uint32_t>(s), 0x5eedu};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double lag = cfg.lag_max_s * unit(rng);
    const double gain = cfg.gain_lo + (cfg.gain_hi - cfg.gain_lo) * unit(rng);

    Series noise(len, 0.0);
    if (cfg.noise_sigma > 0.0 && len >= filter_padlen(noise_lp.filter_order)) {
      std::normal_distribution<double> gauss(0.0, 1.0);
      for (double& v : noise) v = gauss(rng);
      noise = butterworth_lowpass(noise, cfg.rate_hz, noise_lp);
      const double sd = std::sqrt(population_variance(noise));
      const double m = mean(noise);
      for (double& v : noise) v = sd > 0.0 ? (v - m) / sd * cfg.noise_sigma : 0.0;
    }

    Recording& rec = cohort.recordings[s];
    rec.subject_id = cfg.id_prefix + (s + 1 < 10 ? "0" : "") + std::to_string(s + 1);
    rec.channel = ChannelKind::EDA;
    rec.sample_rate_hz = cfg.rate_hz;
    rec.samples.resize(len);
    for (std::size_t i = 0; i < len; ++i) {
      const double t = static_cast<double>(i) / cfg.rate_hz;
      rec.samples[i] = gain * base_profile_at(cfg, t - lag) + noise[i];
    }
  });
  return cohort;
}

}  // namespace synchrolab

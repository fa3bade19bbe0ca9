#pragma once

#include <cstdint>
#include <optional>

namespace hoturbo {

/// Horizontal sector antenna: parabolic roll-off in dB, floored at the
/// front-to-back ratio.
struct SectorPattern {
  double max_gain_dbi = 15.0;
  double hpbw_deg = 65.0;
  double front_back_db = 25.0;

  /// Gain (dBi) at an angle off boresight, in degrees.
  double gain_dbi(double off_boresight_deg) const;
  void validate() const;
};

/// Synthetic site-specific propagation model: log-distance path loss,
/// sector pattern, spatially correlated shadowing, and a small residual
/// per-tick fading term.
struct ChannelParams {
  double pl0_db = 38.0;
  double d0_m = 1.0;
  double exponent = 3.5;
  double shadow_sigma_db = 8.0;
  double shadow_corr_m = 25.0;
  double fast_fade_sigma_db = 1.0;
  SectorPattern antenna{};
  /// When set, shadowing is a fixed property of the deployment (same field
  /// for every episode seed); otherwise it is redrawn per episode seed.
  std::optional<std::uint64_t> shadow_seed{};

  void validate() const;
};

}  // namespace hoturbo

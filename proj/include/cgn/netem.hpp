#pragma once

// Deterministic emulated path: seeded loss (uniform or Gilbert-Elliott) and a
// closed-form, round-based transfer time model.

#include <cstdint>
#include <random>
#include <string_view>

#include "cgn/core.hpp"

namespace cgn::netem {

enum class GeState { Good, Bad };
enum class Congestion { CubicLike, BbrLike };

std::string_view congestion_name(Congestion c);
Congestion parse_congestion(std::string_view name);

using Rng = std::mt19937_64;

/// Uniform double in [0, 1) from the top 53 bits of one draw.
inline double unit(Rng& rng) { return double(rng() >> 11) * 0x1.0p-53; }

struct GeStep {
  GeState state;
  bool lost;
};

/// One chain step: transition first (good->bad w.p. p, bad->good w.p. r),
/// then emit a loss with the new state's probability.
GeStep ge_step(const GeParams& params, GeState state, Rng& rng);

/// Single-owner, seeded loss sequence.
class LossStream {
 public:
  LossStream(LossModel model, std::uint64_t seed);

  bool sample();
  GeState state() const noexcept { return state_; }
  const LossModel& model() const noexcept { return model_; }

 private:
  LossModel model_;
  GeState state_ = GeState::Good;
  Rng rng_;
};

/// Loss fraction above which a BbrLike round pays a recovery round trip.
inline constexpr double kBbrLossTolerance = 0.02;
inline constexpr double kCubicBackoff = 0.7;

/// One transfer stepped round by round, for callers that schedule rounds on a
/// shared link themselves. transfer_time is the sum over its rounds of
/// rtt + bytes*8/bandwidth + penalty.
class RoundModel {
 public:
  RoundModel(std::uint64_t bytes, const LinkSpec& link, Congestion congestion, double start_cwnd_bytes);

  struct Round {
    double bytes;      // delivered this round
    double penalty_s;  // recovery round trip owed after the round, or 0
  };
  bool done() const noexcept { return remaining_ <= 0.0; }
  /// Draws this round's losses and advances the window.
  Round next(LossStream& loss);

 private:
  const LinkSpec* link_;
  Congestion congestion_;
  double bdp_;
  double cwnd_;
  double remaining_;
};

/// Seconds to move `bytes` over `link`. Each round delivers min(cwnd, rest)
/// bytes at a cost of rtt + delivered*8/bandwidth and draws one loss sample per
/// MSS-sized segment. Without loss cwnd doubles up to the BDP. CubicLike backs
/// off to 0.7*cwnd and pays one extra RTT on any loss; BbrLike keeps its rate
/// and pays the extra RTT only when the round's loss fraction exceeds 2%.
double transfer_time(std::uint64_t bytes, const LinkSpec& link, LossStream& loss, Congestion congestion,
                     double start_cwnd_bytes);

}  // namespace cgn::netem

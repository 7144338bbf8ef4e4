#include "cgn/netem.hpp"

#include <algorithm>
#include <cmath>

namespace cgn::netem {

std::string_view congestion_name(Congestion c) { return c == Congestion::BbrLike ? "bbr" : "cubic"; }

Congestion parse_congestion(std::string_view name) {
  if (name == "bbr" || name == "BbrLike") return Congestion::BbrLike;
  if (name == "cubic" || name == "CubicLike") return Congestion::CubicLike;
  throw ValidationError("unknown congestion control '" + std::string(name) + "' (cubic|bbr)");
}

GeStep ge_step(const GeParams& g, GeState state, Rng& rng) {
  if (state == GeState::Good) {
    if (unit(rng) < g.p) state = GeState::Bad;
  } else {
    if (unit(rng) < g.r) state = GeState::Good;
  }
  const double loss = state == GeState::Good ? g.one_minus_k : g.one_minus_h;
  return {state, unit(rng) < loss};
}

LossStream::LossStream(LossModel model, std::uint64_t seed) : model_(std::move(model)), rng_(seed) {}

bool LossStream::sample() {
  if (const auto* u = std::get_if<UniformLoss>(&model_)) return unit(rng_) < u->rate;
  if (const auto* g = std::get_if<GeParams>(&model_)) {
    auto step = ge_step(*g, state_, rng_);
    state_ = step.state;
    return step.lost;
  }
  return false;
}

RoundModel::RoundModel(std::uint64_t bytes, const LinkSpec& link, Congestion congestion, double start_cwnd_bytes)
    : link_(&link),
      congestion_(congestion),
      bdp_(std::max(double(link.mss_bytes), link.bdp_bytes())),
      cwnd_(start_cwnd_bytes),
      remaining_(double(bytes)) {
  if (!(start_cwnd_bytes >= double(link.mss_bytes))) throw ValidationError("start cwnd must be at least one MSS");
}

RoundModel::Round RoundModel::next(LossStream& loss) {
  const double mss = link_->mss_bytes;
  const double delivered = std::min(cwnd_, remaining_);
  remaining_ -= delivered;
  std::uint64_t lost = 0;
  const auto segments = std::uint64_t(std::ceil(delivered / mss));
  if (!std::holds_alternative<NoLoss>(loss.model())) {
    for (std::uint64_t s = 0; s < segments; ++s) lost += loss.sample() ? 1 : 0;
  }
  if (congestion_ == Congestion::CubicLike && lost > 0) {
    cwnd_ = std::max(mss, kCubicBackoff * cwnd_);
    return {delivered, link_->rtt_s};
  }
  double penalty = 0.0;
  if (congestion_ == Congestion::BbrLike && double(lost) > kBbrLossTolerance * double(segments)) {
    penalty = link_->rtt_s;
  }
  cwnd_ = std::max(mss, std::min(2.0 * cwnd_, bdp_));
  return {delivered, penalty};
}

double transfer_time(std::uint64_t bytes, const LinkSpec& link, LossStream& loss, Congestion congestion,
                     double start_cwnd_bytes) {
  RoundModel rounds(bytes, link, congestion, start_cwnd_bytes);
  double t = 0.0;
  while (!rounds.done()) {
    const auto r = rounds.next(loss);
    t += link.rtt_s + r.bytes * 8.0 / link.bandwidth_bps + r.penalty_s;
  }
  return t;
}

}  // namespace cgn::netem

#include <algorithm>
#include <cmath>
#include <string>

#include "proxguard/commutative.hpp"
#include "proxguard/error.hpp"
#include "proxguard/random.hpp"
#include "proxguard/simulator.hpp"

namespace proxguard {

namespace {

std::size_t sample_slot(const Trajectory& tr, double t) {
  if (tr.samples.empty()) throw ParameterError("trajectory of user " + std::to_string(tr.user) + " is empty");
  const auto it = std::upper_bound(tr.samples.begin(), tr.samples.end(), t,
                                   [](double v, const Sample& s) { return v < s.t; });
  if (it == tr.samples.begin()) return 0;
  return static_cast<std::size_t>(it - tr.samples.begin()) - 1;
}

}  // namespace

Point Trajectory::at(double t) const { return samples[sample_slot(*this, t)].p; }

double Trajectory::sample_time(double t) const { return samples[sample_slot(*this, t)].t; }

std::string_view to_string(ProtocolKind p) {
  switch (p) {
    case ProtocolKind::kNaive: return "naive";
    case ProtocolKind::kHideSeek: return "c-hide-seek";
    case ProtocolKind::kHideHash: return "c-hide-hash";
    case ProtocolKind::kPierre: return "pierre-baseline";
  }
  return "unknown";
}

ProtocolKind parse_protocol(std::string_view name) {
  for (const auto p : {ProtocolKind::kNaive, ProtocolKind::kHideSeek, ProtocolKind::kHideHash,
                       ProtocolKind::kPierre}) {
    if (name == to_string(p)) return p;
  }
  throw UsageError("unknown protocol '" + std::string(name) + "'");
}

void ScenarioConfig::validate() const {
  const auto positive = [](double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ParameterError(std::string(what) + " must be positive");
  };
  if (users < 2) throw ParameterError("a scenario needs at least 2 users");
  if (buddies == 0 || buddies >= users) {
    throw ParameterError("buddies per user must be in [1, users - 1]");
  }
  positive(domain_width, "domain width");
  positive(domain_height, "domain height");
  positive(delta, "delta");
  positive(cell_edge, "cell edge");
  positive(update_interval, "update interval");
  positive(request_period, "request period");
  positive(duration, "duration");
  positive(sampling_period, "sampling period");
  positive(v_min, "v_min");
  if (v_max < v_min) throw ParameterError("v_max must be >= v_min");
  if (pause_max < 0.0) throw ParameterError("pause time must be non-negative");
  if (latency < 0.0) throw ParameterError("latency must be non-negative");
  if (max_velocity < 0.0) throw ParameterError("max velocity must be non-negative");
  // Grid sizes must stay addressable by the 32-bit column/row fields.
  if (domain_width / cell_edge > 1e6 || domain_height / cell_edge > 1e6) {
    throw ParameterError("domain has too many cells");
  }
  CommutativeGroup::by_name(group);
}

GridGranularity scenario_granularity(const ScenarioConfig& c) {
  const auto cols = static_cast<std::uint32_t>(std::ceil(c.domain_width / c.cell_edge - 1e-9));
  const auto rows = static_cast<std::uint32_t>(std::ceil(c.domain_height / c.cell_edge - 1e-9));
  return GridGranularity({0.0, 0.0}, c.cell_edge, std::max(cols, 1U), std::max(rows, 1U));
}

std::vector<Trajectory> random_waypoint(const ScenarioConfig& config, std::uint64_t seed) {
  config.validate();
  const double w = config.domain_width;
  const double h = config.domain_height;
  const double step = config.sampling_period;
  const auto n_samples = static_cast<std::size_t>(std::floor(config.duration / step)) + 1;

  std::vector<Trajectory> out;
  out.reserve(config.users);
  for (UserId u = 0; u < config.users; ++u) {
    DeterministicRandom rng(seed, "waypoint/" + std::to_string(u));
    Trajectory tr;
    tr.user = u;
    tr.samples.reserve(n_samples);

    Point pos{rng.uniform_unit() * w, rng.uniform_unit() * h};
    Point dest = pos;
    double speed = 0.0;
    double pause_left = 0.0;  // the first leg starts moving immediately
    double t = 0.0;
    bool moving = false;

    for (std::size_t k = 0; k < n_samples; ++k) {
      const double target = static_cast<double>(k) * step;
      while (t < target) {
        if (!moving && pause_left <= 0.0) {
          dest = {rng.uniform_unit() * w, rng.uniform_unit() * h};
          speed = config.v_min + rng.uniform_unit() * (config.v_max - config.v_min);
          moving = true;
        }
        if (!moving) {
          const double dt = std::min(pause_left, target - t);
          pause_left -= dt;
          t += dt;
          continue;
        }
        const double remaining = distance(pos, dest);
        const double dt = std::min(remaining / speed, target - t);
        if (dt >= remaining / speed) {
          pos = dest;
          moving = false;
          pause_left = rng.uniform_unit() * config.pause_max;
        } else {
          const double f = dt * speed / remaining;
          pos = {pos.x + (dest.x - pos.x) * f, pos.y + (dest.y - pos.y) * f};
        }
        t += dt;
      }
      tr.samples.push_back({target, {std::clamp(pos.x, 0.0, w), std::clamp(pos.y, 0.0, h)}});
    }
    out.push_back(std::move(tr));
  }
  return out;
}

}  // namespace proxguard

#pragma once

// Hierarchical search space of trial designs: a selection strategy, the
// stage ratio r, and the rule parameter that is active for the strategy.

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "asdopt/rng.hpp"
#include "asdopt/trial_sim.hpp"

namespace asdopt {

enum class Strategy { kBest1, kBest2, kBest3, kAll, kEps, kThresh };

inline constexpr std::array<Strategy, 6> kStrategies = {
    Strategy::kBest1, Strategy::kBest2, Strategy::kBest3,
    Strategy::kAll,   Strategy::kEps,   Strategy::kThresh};

std::string_view to_string(Strategy s);
/// Accepts "1-best", "2-best", "3-best", "all", "eps", "thresh".
std::optional<Strategy> parse_strategy(std::string_view name);

inline constexpr double kEpsMax = 4.0;
inline constexpr double kTauMax = 10.0;
// Parameters of inactive rules sit at twice their range maximum, beyond
// the reach of the kernel from any active value.
inline constexpr double kEpsInactive = 2.0 * kEpsMax;
inline constexpr double kTauInactive = 2.0 * kTauMax;

struct DesignPoint {
  Strategy strategy = Strategy::kBest1;
  double r = 0.5;
  std::optional<double> eps;
  std::optional<double> tau;

  /// Throws InputError unless exactly the strategy's parameters are set
  /// and all lie in range: r in (0, 1), eps in [0, 4], tau in [0, 10].
  void validate() const;

  friend bool operator==(const DesignPoint&, const DesignPoint&) = default;
};

DesignPoint make_point(Strategy s, double r, double param = 0.0);

std::string describe(const DesignPoint& p);

/// Six one-hot strategy indicators, then r, eps slot, tau slot.
inline constexpr std::size_t kEncodedDim = 9;
using EncodedPoint = std::array<double, kEncodedDim>;

EncodedPoint encode(const DesignPoint& p);

/// Inverse of encode. Throws DecodeError on a malformed one-hot block, r
/// outside (0, 1) or an active slot out of range.
DesignPoint decode(const EncodedPoint& v);

/// Selection rule for a design with `treatments` experimental arms.
SelectionRule to_rule(const DesignPoint& p, int treatments);

DesignPoint sample_point(Engine& rng);
std::vector<DesignPoint> sample_uniform(std::size_t n, Engine& rng);

/// Full factorial grid with l values per real-valued dimension:
/// 4l points for the fixed-kappa strategies, l^2 each for eps and thresh.
/// r_i = i / (l + 1); eps and tau values include both range endpoints.
std::vector<DesignPoint> make_grid(int l);

inline constexpr std::size_t grid_size(int l) {
  return 4 * static_cast<std::size_t>(l) + 2 * static_cast<std::size_t>(l) * l;
}

}  // namespace asdopt

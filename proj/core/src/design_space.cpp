#include "asdopt/design_space.hpp"

#include <cmath>
#include <cstdio>

#include "asdopt/errors.hpp"

namespace asdopt {

namespace {

constexpr std::array<std::string_view, 6> kNames = {"1-best", "2-best", "3-best",
                                                     "all",    "eps",    "thresh"};

std::size_t index_of(Strategy s) { return static_cast<std::size_t>(s); }

}  // namespace

std::string_view to_string(Strategy s) { return kNames[index_of(s)]; }

std::optional<Strategy> parse_strategy(std::string_view name) {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == name) return kStrategies[i];
  }
  return std::nullopt;
}

void DesignPoint::validate() const {
  if (!(r > 0.0 && r < 1.0)) throw InputError("r must lie in (0, 1)");
  const bool wants_eps = strategy == Strategy::kEps;
  const bool wants_tau = strategy == Strategy::kThresh;
  if (eps.has_value() != wants_eps || tau.has_value() != wants_tau) {
    throw InputError(std::string("parameters do not match strategy ") +
                     std::string(to_string(strategy)));
  }
  if (eps && !(*eps >= 0.0 && *eps <= kEpsMax)) {
    throw InputError("eps must lie in [0, 4]");
  }
  if (tau && !(*tau >= 0.0 && *tau <= kTauMax)) {
    throw InputError("tau must lie in [0, 10]");
  }
}

DesignPoint make_point(Strategy s, double r, double param) {
  DesignPoint p;
  p.strategy = s;
  p.r = r;
  if (s == Strategy::kEps) p.eps = param;
  if (s == Strategy::kThresh) p.tau = param;
  return p;
}

std::string describe(const DesignPoint& p) {
  char buf[96];
  if (p.eps) {
    std::snprintf(buf, sizeof buf, "%s(r=%.4g, eps=%.4g)",
                  std::string(to_string(p.strategy)).c_str(), p.r, *p.eps);
  } else if (p.tau) {
    std::snprintf(buf, sizeof buf, "%s(r=%.4g, tau=%.4g)",
                  std::string(to_string(p.strategy)).c_str(), p.r, *p.tau);
  } else {
    std::snprintf(buf, sizeof buf, "%s(r=%.4g)",
                  std::string(to_string(p.strategy)).c_str(), p.r);
  }
  return buf;
}

EncodedPoint encode(const DesignPoint& p) {
  EncodedPoint v{};
  v[index_of(p.strategy)] = 1.0;
  v[6] = p.r;
  v[7] = p.eps.value_or(kEpsInactive);
  v[8] = p.tau.value_or(kTauInactive);
  return v;
}

DesignPoint decode(const EncodedPoint& v) {
  int hot = -1;
  for (int i = 0; i < 6; ++i) {
    if (v[i] == 1.0) {
      if (hot >= 0) throw DecodeError("more than one strategy indicator set");
      hot = i;
    } else if (v[i] != 0.0) {
      throw DecodeError("strategy indicators must be 0 or 1");
    }
  }
  if (hot < 0) throw DecodeError("no strategy indicator set");

  DesignPoint p;
  p.strategy = kStrategies[hot];
  p.r = v[6];
  if (!(p.r > 0.0 && p.r < 1.0)) throw DecodeError("r outside (0, 1)");
  if (p.strategy == Strategy::kEps) {
    if (!(v[7] >= 0.0 && v[7] <= kEpsMax)) throw DecodeError("eps outside [0, 4]");
    p.eps = v[7];
  } else if (v[7] != kEpsInactive) {
    throw DecodeError("inactive eps slot must hold the inactive fill value");
  }
  if (p.strategy == Strategy::kThresh) {
    if (!(v[8] >= 0.0 && v[8] <= kTauMax)) throw DecodeError("tau outside [0, 10]");
    p.tau = v[8];
  } else if (v[8] != kTauInactive) {
    throw DecodeError("inactive tau slot must hold the inactive fill value");
  }
  return p;
}

SelectionRule to_rule(const DesignPoint& p, int treatments) {
  switch (p.strategy) {
    case Strategy::kBest1: return KappaBest{1};
    case Strategy::kBest2: return KappaBest{2};
    case Strategy::kBest3: return KappaBest{3};
    case Strategy::kAll: return KappaBest{treatments};
    case Strategy::kEps: return Epsilon{p.eps.value()};
    case Strategy::kThresh: return Threshold{p.tau.value()};
  }
  throw InputError("unknown strategy");
}

DesignPoint sample_point(Engine& rng) {
  std::uniform_int_distribution<int> pick(0, 5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Strategy s = kStrategies[pick(rng)];
  const double r = open_unit(rng);
  double param = 0.0;
  if (s == Strategy::kEps) param = kEpsMax * unit(rng);
  if (s == Strategy::kThresh) param = kTauMax * unit(rng);
  return make_point(s, r, param);
}

std::vector<DesignPoint> sample_uniform(std::size_t n, Engine& rng) {
  std::vector<DesignPoint> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(sample_point(rng));
  return out;
}

std::vector<DesignPoint> make_grid(int l) {
  if (l < 2) throw InputError("grid resolution must be at least 2");
  std::vector<double> rs(l), eps(l), taus(l);
  for (int i = 0; i < l; ++i) {
    rs[i] = static_cast<double>(i + 1) / (l + 1);
    eps[i] = kEpsMax * i / (l - 1);
    taus[i] = kTauMax * i / (l - 1);
  }
  std::vector<DesignPoint> grid;
  grid.reserve(grid_size(l));
  for (Strategy s : {Strategy::kBest1, Strategy::kBest2, Strategy::kBest3, Strategy::kAll}) {
    for (double r : rs) grid.push_back(make_point(s, r));
  }
  for (double r : rs) {
    for (double e : eps) grid.push_back(make_point(Strategy::kEps, r, e));
  }
  for (double r : rs) {
    for (double t : taus) grid.push_back(make_point(Strategy::kThresh, r, t));
  }
  return grid;
}

}  // namespace asdopt

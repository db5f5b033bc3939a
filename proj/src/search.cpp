#include "geoda/search.hpp"

#include <cmath>

namespace geoda {

void SearchConfig::validate() const {
  if (!(tol > 0.0) || max_steps < 1 || !(init_radius_growth > 1.0) || max_restarts < 1) {
    throw GeodaError(ErrorCode::invalid_argument,
                     "search config needs tol > 0, max_steps >= 1, growth > 1, restarts >= 1");
  }
}

namespace {

Point lerp(const Point& a, const Point& b, double t) {
  Point p = a;
  p.axpy(t, b - a);
  return p;
}

// Fixed number of halvings of [clean, adv]; returns the adversarial end.
Point bisect_steps(QuerySession& session, const Point& x_clean, const Point& x_adv,
                   int steps, Phase phase) {
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < steps; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (session.is_adversarial(lerp(x_clean, x_adv, mid), phase)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi == 1.0 ? x_adv : session.prepare(lerp(x_clean, x_adv, hi));
}

int halvings_for(double fraction) {
  if (fraction >= 1.0) return 0;
  return static_cast<int>(std::ceil(std::log2(1.0 / fraction) - 1e-12));
}

}  // namespace

Point bisect_to_boundary(QuerySession& session, const Point& x_clean, const Point& x_adv,
                         const SearchConfig& cfg, Phase phase) {
  cfg.validate();
  require_same_dim(x_clean, x_adv, "bisect_to_boundary");
  if (l2_norm(x_adv - x_clean) <= cfg.tol) return x_adv;
  return bisect_steps(session, x_clean, x_adv, halvings_for(cfg.tol), phase);
}

Point find_initial_boundary_point(QuerySession& session, RandomSource& rng,
                                  const SearchConfig& cfg) {
  cfg.validate();
  const Point& x = session.original();
  const std::size_t d = x.dim();
  double scale = 0.0;
  for (double v : x) scale += std::abs(v);
  scale /= static_cast<double>(d);
  if (!(scale > 0.0)) scale = 1.0;
  const double rho0 = 0.1 * std::sqrt(static_cast<double>(d)) * scale;

  for (int round = 0; round < cfg.max_restarts; ++round) {
    const Point u = rng.unit_direction(d);
    double rho = rho0;
    for (int step = 0; step < cfg.max_steps; ++step, rho *= cfg.init_radius_growth) {
      for (double sign : {1.0, -1.0}) {
        Point probe = session.prepare(x + u * (sign * rho));
        if (!session.is_adversarial(probe, Phase::binary_search)) continue;
        const double len = l2_norm(probe - x);
        if (len <= cfg.tol) return probe;
        return bisect_steps(session, x, probe, halvings_for(cfg.tol / len),
                            Phase::binary_search);
      }
    }
  }
  throw GeodaError(ErrorCode::no_adversarial_found,
                   "no adversarial point found along any search direction");
}

RadiusBracket line_search_bracket(QuerySession& session, const Point& v, double r_hint,
                                  const SearchConfig& cfg) {
  cfg.validate();
  require_same_dim(v, session.original(), "line_search_radius");
  if (!(r_hint > 0.0)) {
    throw GeodaError(ErrorCode::invalid_argument, "line search needs a positive radius hint");
  }
  const Point& x = session.original();
  auto adversarial_at = [&](double r) {
    return session.is_adversarial(x + v * r, Phase::line_search);
  };

  double lo = 0.0, hi = 0.0;
  if (adversarial_at(r_hint)) {
    hi = r_hint;
    double r = r_hint;
    for (int step = 0; step < cfg.max_steps; ++step) {
      r /= cfg.init_radius_growth;
      if (!adversarial_at(r)) {
        lo = r;
        break;
      }
      hi = r;
    }
  } else {
    lo = r_hint;
    double r = r_hint;
    for (int step = 0; step < cfg.max_steps && hi == 0.0; ++step) {
      r *= cfg.init_radius_growth;
      if (adversarial_at(r)) {
        hi = r;
      } else {
        lo = r;
      }
    }
    if (hi == 0.0) {
      throw GeodaError(ErrorCode::no_crossing_found,
                       "no label change along the search direction");
    }
  }

  while (hi - lo > cfg.tol * hi) {
    const double mid = 0.5 * (lo + hi);
    if (adversarial_at(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return {hi, lo};
}

double line_search_radius(QuerySession& session, const Point& v, double r_hint,
                          const SearchConfig& cfg) {
  return line_search_bracket(session, v, r_hint, cfg).adversarial;
}

}  // namespace geoda

#pragma once

#include "geoda/core.hpp"
#include "geoda/oracle.hpp"

namespace geoda {

struct SearchConfig {
  /// Bisection stopping width: a fraction of the bracket for
  /// bisect_to_boundary and line_search_radius, an absolute distance for
  /// find_initial_boundary_point.
  double tol = 1e-4;
  /// Radius doublings (or halvings) allowed per bracketing walk.
  int max_steps = 30;
  double init_radius_growth = 2.0;
  /// Fresh random directions tried by find_initial_boundary_point.
  int max_restarts = 8;

  void validate() const;
};

/// Walk from the session's original point along random directions u,
/// probing x + rho*u and x - rho*u with rho growing geometrically from
/// 0.1 * sqrt(d) * mean|x_j|, then bisect the first bracket down to an
/// absolute width of cfg.tol. Charges `binary_search`. Throws
/// NoAdversarialFound when every walk stays in the original class.
Point find_initial_boundary_point(QuerySession& session, RandomSource& rng,
                                  const SearchConfig& cfg = {});

/// Bisect the segment [x_clean, x_adv] (labels already known) until the
/// bracket is at most cfg.tol of the segment, i.e. ceil(log2(1/tol))
/// queries, and return its adversarial end. Returns x_adv untouched when the
/// endpoints are already within cfg.tol of each other.
Point bisect_to_boundary(QuerySession& session, const Point& x_clean, const Point& x_adv,
                         const SearchConfig& cfg = {}, Phase phase = Phase::binary_search);

struct RadiusBracket {
  double adversarial = 0.0;  // x + adversarial * v flips the label
  double clean = 0.0;        // x + clean * v does not
};

/// Smallest r with x + r*v adversarial, bracketed to a relative width of
/// cfg.tol. Starts at r_hint, expands or contracts geometrically to bracket,
/// then bisects. Charges `line_search`. Throws NoCrossingFound if nothing
/// flips up to r_hint * growth^max_steps.
RadiusBracket line_search_bracket(QuerySession& session, const Point& v, double r_hint,
                                  const SearchConfig& cfg = {});

double line_search_radius(QuerySession& session, const Point& v, double r_hint,
                          const SearchConfig& cfg = {});

}  // namespace geoda

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "geoda/core.hpp"
#include "geoda/estimator.hpp"
#include "geoda/oracle.hpp"
#include "geoda/search.hpp"

namespace geoda {

/// Per-iteration split of the estimation budget.
struct QuerySchedule {
  double lambda = 0.6;
  std::size_t budget = 0;
  std::vector<std::size_t> counts;

  std::size_t iterations() const { return counts.size(); }
  std::size_t total() const;
};

/// Geometric allocation N_t proportional to lambda^(-2t/3). T is the largest
/// iteration count whose first share is still >= first_iter_floor. Shares
/// are rounded down and the leftover queries are handed out one at a time
/// from the last iteration backwards, so counts sum to `budget`.
/// Throws InvalidBudget if budget < first_iter_floor.
QuerySchedule optimal_schedule(std::size_t budget, double lambda,
                               std::size_t first_iter_floor = 70);

/// Same allocation with T fixed by the caller.
QuerySchedule schedule_with_iterations(std::size_t budget, double lambda, std::size_t T);

/// Maximizer of w.v over the unit l_p ball. p = 2 returns w unchanged and
/// p = inf returns sign(w). Throws UnsupportedP for p = 1.
Point step_direction(const Point& w_hat, PNorm p);

/// How the sparse attack orders coordinates before pushing them to the box.
enum class SparseRanking {
  gain,       // |w_j| * room to the matching box face
  magnitude,  // |w_j| only
};

struct AttackConfig {
  PNorm p = PNorm::two();
  /// Estimation queries available (boundary and line searches are extra).
  std::size_t budget = 1000;
  double lambda = 0.6;
  std::size_t first_iter_floor = 70;
  /// Force T instead of deriving it from first_iter_floor.
  std::optional<std::size_t> iterations;

  CovariancePrior prior = CovariancePrior::identity();
  /// Variance of the estimation draws. Unset: calibrate at x0, charging the
  /// pilot queries to the estimation budget.
  std::optional<double> sigma;
  CalibrationConfig calibration;
  SearchConfig search;

  /// Weight of the previous normal in the running estimate (0 = off).
  double momentum = 0.0;

  // Sparse attack only.
  double zeta = 0.0;
  std::optional<Point> lower;
  std::optional<Point> upper;
  SparseRanking ranking = SparseRanking::gain;

  void validate(std::size_t dim) const;
};

struct IterationRecord {
  std::size_t t = 0;
  std::size_t n_t = 0;           // estimation queries spent this iteration
  double r_hat = 0.0;
  double lp = 0.0;               // ||x_t - x||_p
  double l2 = 0.0;
  std::uint64_t queries_cum = 0; // all phases, at the end of the iteration
  double wall_ms = 0.0;
};

struct AttackReport {
  PNorm p;
  Point original;
  Point adversarial;  // final point (the original itself if nothing was found)
  Label original_label;
  std::vector<IterationRecord> iterations;
  QueryCounts queries;
  QuerySchedule schedule;
  double sigma = 0.0;
  double initial_lp = 0.0;  // ||x_0 - x||_p at the first boundary point
  bool converged = false;
  /// Final point known to change the label (from a query already spent).
  bool fooled = false;
  std::optional<std::size_t> sparse_k;
  Point w_hat;  // last normal estimate
  /// Set when the run stopped early (budget exhausted, oracle unavailable).
  std::optional<ErrorCode> abort_code;
  std::string abort_message;

  double final_lp() const { return lp_norm(adversarial - original, p); }
};

/// Alg. 1: boundary point, then T rounds of normal estimation, dual-norm
/// step and line search. Running out of estimation budget or losing the
/// remote oracle ends the run early with converged = false and the last
/// completed iterate; other failures throw.
AttackReport geoda_attack(const Oracle& oracle, const Point& x, const AttackConfig& cfg,
                          RandomSource& rng);

/// The l2 update x_t = x + r_t * w_hat written out directly; iterates match
/// geoda_attack with p = 2 for the same seed.
AttackReport geoda_l2_attack(const Oracle& oracle, const Point& x, const AttackConfig& cfg,
                             RandomSource& rng);

/// Alg. 2: l2 GeoDA to x_B, then a binary search over the number k of
/// coordinates pushed to the box [lower, upper], tested against the
/// hyperplane through x_B + zeta (x_B - x). At most round(log2 d) + 1
/// candidates are checked against the oracle (`sparse_search`) and the
/// sparsest one that fools it is returned. Throws SparseFailed if even
/// k = d does not cross the estimated hyperplane.
AttackReport sparse_attack(const Oracle& oracle, const Point& x, const AttackConfig& cfg,
                           RandomSource& rng);

/// sparse_attack for p = 1, geoda_attack otherwise.
AttackReport run_attack(const Oracle& oracle, const Point& x, const AttackConfig& cfg,
                        RandomSource& rng);

/// Asymptotic per-iteration contraction of r_t - r on a sphere of radius R
/// at distance r: r^2 (R - r) / (R^2 (R + r)).
double convergence_rate(double R, double r);

/// lambda^T (r0 - r) -+ e with e = gamma * sum_i lambda^(T-i) r_i / sqrt(N_i)
/// and gamma = sqrt(d + c2) + sqrt(2 (1 + c2) ln(1/delta)), c2 = -2/pi.
/// `radii` are the per-iteration r_i, one per schedule entry.
std::pair<double, double> convergence_error_bound(double r0, double r, double lambda,
                                                  const QuerySchedule& schedule, std::size_t d,
                                                  double delta, const std::vector<double>& radii);

}  // namespace geoda

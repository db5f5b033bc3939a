#include "geoda/attack.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>

namespace geoda {

std::size_t QuerySchedule::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

namespace {

void check_lambda(double lambda) {
  if (!(lambda > 0.0 && lambda <= 1.0)) {
    throw GeodaError(ErrorCode::invalid_argument, "lambda must be in (0, 1]");
  }
}

std::vector<double> schedule_weights(double lambda, std::size_t T) {
  std::vector<double> w(T);
  for (std::size_t t = 0; t < T; ++t) {
    w[t] = std::pow(lambda, -2.0 * static_cast<double>(t + 1) / 3.0);
  }
  return w;
}

// Consecutive counts may deviate from the exact ratio by the rounding slack
// |c_{t+1} - rho * c_t| <= 2.
constexpr double kRatioSlack = 2.0;

bool ratios_ok(const std::vector<std::size_t>& c, double rho) {
  for (std::size_t t = 0; t + 1 < c.size(); ++t) {
    if (std::abs(static_cast<double>(c[t + 1]) - rho * static_cast<double>(c[t])) >
        kRatioSlack + 1e-9) {
      return false;
    }
  }
  return true;
}

// Depth-first search for integer counts that sum to the budget and keep every
// ratio within the slack, trying values nearest the rounded target first.
class CountSearch {
 public:
  CountSearch(double rho, std::size_t first_min, const std::vector<std::size_t>& target)
      : rho_(rho), first_min_(first_min), target_(target), counts_(target.size()) {}

  bool run(std::size_t budget) {
    const std::size_t T = target_.size();
    const auto t0 = static_cast<long long>(target_[0]);
    for (long long c : ordered(t0 - 8, t0 + 8, t0)) {
      if (c < static_cast<long long>(first_min_)) continue;
      if (place(0, static_cast<std::size_t>(c), budget, T)) return true;
    }
    return false;
  }

  const std::vector<std::size_t>& counts() const { return counts_; }

 private:
  static std::vector<long long> ordered(long long lo, long long hi, long long center) {
    std::vector<long long> v;
    for (long long c = std::max(lo, 1LL); c <= hi; ++c) v.push_back(c);
    std::stable_sort(v.begin(), v.end(), [center](long long a, long long b) {
      return std::llabs(a - center) < std::llabs(b - center);
    });
    return v;
  }

  long long next_lo(long long c) const {
    return std::max(1LL, static_cast<long long>(std::ceil(rho_ * c - kRatioSlack - 1e-9)));
  }
  long long next_hi(long long c) const {
    return static_cast<long long>(std::floor(rho_ * c + kRatioSlack + 1e-9));
  }

  // Range of sums the `k` counts after a count of `c` can reach.
  std::pair<long long, long long> rest_range(long long c, std::size_t k) const {
    long long lo = 0, hi = 0, a = c, b = c;
    for (std::size_t i = 0; i < k; ++i) {
      a = next_lo(a);
      b = next_hi(b);
      lo += a;
      hi += b;
      if (hi > (1LL << 50)) break;
    }
    return {lo, hi};
  }

  bool place(std::size_t t, std::size_t c, std::size_t left, std::size_t T) {
    if (++nodes_ > 2000000 || c > left) return false;
    const std::size_t rest = left - c;
    const std::size_t k = T - t - 1;
    if (k == 0) {
      if (rest != 0) return false;
      counts_[t] = c;
      return true;
    }
    const auto [lo, hi] = rest_range(static_cast<long long>(c), k);
    const auto r = static_cast<long long>(rest);
    if (r < lo || r > hi) return false;
    counts_[t] = c;
    const auto cc = static_cast<long long>(c);
    for (long long n : ordered(next_lo(cc), next_hi(cc), static_cast<long long>(target_[t + 1]))) {
      if (place(t + 1, static_cast<std::size_t>(n), rest, T)) return true;
    }
    return false;
  }

  double rho_;
  std::size_t first_min_;
  const std::vector<std::size_t>& target_;
  std::vector<std::size_t> counts_;
  std::size_t nodes_ = 0;
};

QuerySchedule allocate(std::size_t budget, double lambda, std::size_t T, std::size_t first_min) {
  const std::vector<double> w = schedule_weights(lambda, T);
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  QuerySchedule s{lambda, budget, std::vector<std::size_t>(T)};
  std::size_t used = 0;
  for (std::size_t t = 0; t < T; ++t) {
    s.counts[t] = static_cast<std::size_t>(std::floor(static_cast<double>(budget) * w[t] / total));
    used += s.counts[t];
  }
  // Flooring loses less than one query per iteration, so each iteration
  // gets at most one extra; later iterations first.
  for (std::size_t i = 0; used < budget; ++i, ++used) ++s.counts[T - 1 - (i % T)];

  const double rho = std::pow(lambda, -2.0 / 3.0);
  const bool empty_iteration = std::find(s.counts.begin(), s.counts.end(), 0) != s.counts.end();
  if (empty_iteration || !ratios_ok(s.counts, rho)) {
    // The spread remainder can still bend a ratio on steep schedules, and
    // tiny budgets floor early iterations to zero; search nearby integer
    // counts that respect the rounding slack.
    CountSearch search(rho, first_min, s.counts);
    if (search.run(budget)) s.counts = search.counts();
  }
  return s;
}

}  // namespace

QuerySchedule optimal_schedule(std::size_t budget, double lambda, std::size_t first_iter_floor) {
  check_lambda(lambda);
  if (first_iter_floor == 0) {
    throw GeodaError(ErrorCode::invalid_argument, "first-iteration floor must be >= 1");
  }
  if (budget < first_iter_floor) {
    throw GeodaError(ErrorCode::invalid_budget, "budget " + std::to_string(budget) +
                                                    " is below the first-iteration floor " +
                                                    std::to_string(first_iter_floor));
  }
  // N_1(T) = budget * w_1 / sum_{t<=T} w_t shrinks as T grows.
  const double b = static_cast<double>(budget);
  const double w1 = std::pow(lambda, -2.0 / 3.0);
  double sum = w1;
  std::size_t T = 1;
  while (T < budget) {
    const double next = sum + std::pow(lambda, -2.0 * static_cast<double>(T + 1) / 3.0);
    if (b * w1 / next < static_cast<double>(first_iter_floor)) break;
    sum = next;
    ++T;
  }
  return allocate(budget, lambda, T, first_iter_floor);
}

QuerySchedule schedule_with_iterations(std::size_t budget, double lambda, std::size_t T) {
  check_lambda(lambda);
  if (T == 0 || T > budget) {
    throw GeodaError(ErrorCode::invalid_budget,
                     "need 1 <= T <= budget (T=" + std::to_string(T) +
                         ", budget=" + std::to_string(budget) + ")");
  }
  return allocate(budget, lambda, T, 1);
}

Point step_direction(const Point& w_hat, PNorm p) {
  if (p.value() == 1.0) {
    throw GeodaError(ErrorCode::unsupported_p, "p = 1 is handled by the sparse attack");
  }
  if (w_hat.empty()) throw GeodaError(ErrorCode::invalid_argument, "empty normal");
  if (p.value() == 2.0) return w_hat;

  Point v(w_hat.dim());
  if (p.is_infinite()) {
    for (std::size_t j = 0; j < v.dim(); ++j) {
      v[j] = w_hat[j] > 0.0 ? 1.0 : (w_hat[j] < 0.0 ? -1.0 : 0.0);
    }
    return v;
  }
  double top = 0.0;
  for (double x : w_hat) top = std::max(top, std::abs(x));
  if (!(top > 0.0)) throw GeodaError(ErrorCode::invalid_argument, "zero normal");
  // |w|^(1/(p-1)) computed relative to max|w| so large p cannot underflow.
  const double e = 1.0 / (p.value() - 1.0);
  for (std::size_t j = 0; j < v.dim(); ++j) {
    v[j] = std::copysign(std::pow(std::abs(w_hat[j]) / top, e), w_hat[j]);
    if (w_hat[j] == 0.0) v[j] = 0.0;
  }
  return v * (1.0 / lp_norm(v, p));
}

void AttackConfig::validate(std::size_t dim) const {
  check_lambda(lambda);
  search.validate();
  if (iterations) {
    if (*iterations == 0 || budget < 2 * *iterations) {
      throw GeodaError(ErrorCode::invalid_budget,
                       "budget must allow at least two queries per forced iteration");
    }
  } else if (budget < first_iter_floor || first_iter_floor == 0) {
    throw GeodaError(ErrorCode::invalid_budget,
                     "budget " + std::to_string(budget) + " is below the first-iteration floor " +
                         std::to_string(first_iter_floor));
  }
  if (sigma && !(*sigma > 0.0)) {
    throw GeodaError(ErrorCode::invalid_argument, "sigma must be > 0");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw GeodaError(ErrorCode::invalid_argument, "momentum must be in [0, 1)");
  }
  if (!(zeta >= 0.0)) throw GeodaError(ErrorCode::invalid_argument, "zeta must be >= 0");
  if ((lower && lower->dim() != dim) || (upper && upper->dim() != dim)) {
    throw GeodaError(ErrorCode::dimension_mismatch, "box bounds do not match the input");
  }
}

namespace {

using Clock = std::chrono::steady_clock;

bool recoverable(ErrorCode code) {
  return code == ErrorCode::budget_exhausted || code == ErrorCode::remote_unavailable;
}

// Alg. 1 on an open session. `direct_l2` takes the step as w_hat itself.
AttackReport run_geoda(QuerySession& session, const AttackConfig& cfg, RandomSource& rng,
                       bool direct_l2) {
  const Point& x = session.original();
  AttackReport rep;
  rep.p = direct_l2 ? PNorm::two() : cfg.p;
  rep.original = x;
  rep.adversarial = x;
  rep.original_label = session.original_label();
  rep.schedule.lambda = cfg.lambda;

  try {
    Point x_prev = find_initial_boundary_point(session, rng, cfg.search);
    rep.adversarial = x_prev;
    rep.initial_lp = lp_norm(x_prev - x, rep.p);
    rep.fooled = true;

    session.set_estimation_limit(cfg.budget);
    CovariancePrior prior = cfg.prior;
    if (cfg.sigma) {
      prior = prior.with_sigma(*cfg.sigma);
    } else {
      prior = prior.with_sigma(
          calibrate_sigma(session, x_prev, prior, rng, cfg.calibration).sigma);
    }
    rep.sigma = prior.sigma();

    const std::size_t remaining = cfg.budget - session.counts()[Phase::estimation];
    if (cfg.iterations) {
      const std::size_t T = std::min(*cfg.iterations, remaining / 2);
      if (T == 0) throw GeodaError(ErrorCode::budget_exhausted, "calibration used the budget");
      rep.schedule = schedule_with_iterations(remaining, cfg.lambda, T);
    } else if (remaining >= cfg.first_iter_floor) {
      rep.schedule = optimal_schedule(remaining, cfg.lambda, cfg.first_iter_floor);
    } else if (remaining >= 2) {
      rep.schedule = QuerySchedule{cfg.lambda, remaining, {remaining}};
    } else {
      throw GeodaError(ErrorCode::budget_exhausted, "calibration used the budget");
    }

    Point w_run;
    for (std::size_t t = 0; t < rep.schedule.iterations(); ++t) {
      const auto start = Clock::now();
      const std::size_t n_t = rep.schedule.counts[t];
      // One of the n_t queries is the orientation probe.
      NormalEstimate est =
          estimate_normal(session, x_prev, std::max<std::size_t>(n_t, 2) - 1, prior, rng);
      if (cfg.momentum > 0.0 && !w_run.empty()) {
        Point mixed = w_run * cfg.momentum;
        mixed.axpy(1.0 - cfg.momentum, est.w_hat);
        est.w_hat = normalized(mixed);
      }
      w_run = est.w_hat;
      rep.w_hat = est.w_hat;

      const Point v = direct_l2 ? est.w_hat : step_direction(est.w_hat, cfg.p);
      const double hint = l2_norm(x_prev - x) / l2_norm(v);
      const double r = line_search_radius(session, v, hint, cfg.search);
      Point x_t = x;
      x_t.axpy(r, v);
      x_t = session.prepare(std::move(x_t));

      IterationRecord rec;
      rec.t = t + 1;
      rec.n_t = est.n_used;
      rec.r_hat = r;
      rec.lp = lp_norm(x_t - x, rep.p);
      rec.l2 = l2_norm(x_t - x);
      rec.queries_cum = session.counts().total();
      rec.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
      rep.iterations.push_back(rec);
      rep.adversarial = x_t;
      x_prev = std::move(x_t);
    }
    rep.converged = true;
  } catch (const GeodaError& e) {
    if (!recoverable(e.code())) throw;
    rep.abort_code = e.code();
    rep.abort_message = e.what();
    rep.converged = false;
  }
  rep.queries = session.counts();
  return rep;
}

}  // namespace

AttackReport geoda_attack(const Oracle& oracle, const Point& x, const AttackConfig& cfg,
                          RandomSource& rng) {
  if (cfg.p.value() == 1.0) {
    throw GeodaError(ErrorCode::unsupported_p, "p = 1 is handled by the sparse attack");
  }
  cfg.validate(x.dim());
  QuerySession session(oracle, x);
  return run_geoda(session, cfg, rng, false);
}

AttackReport geoda_l2_attack(const Oracle& oracle, const Point& x, const AttackConfig& cfg,
                             RandomSource& rng) {
  cfg.validate(x.dim());
  QuerySession session(oracle, x);
  return run_geoda(session, cfg, rng, true);
}

AttackReport sparse_attack(const Oracle& oracle, const Point& x, const AttackConfig& cfg,
                           RandomSource& rng) {
  const std::size_t d = x.dim();
  cfg.validate(d);
  const Point lo = cfg.lower.value_or(Point(d, 0.0));
  const Point hi = cfg.upper.value_or(Point(d, 1.0));
  for (std::size_t j = 0; j < d; ++j) {
    if (!(lo[j] <= x[j] && x[j] <= hi[j])) {
      throw GeodaError(ErrorCode::invalid_argument, "x must lie inside the sparse box");
    }
  }

  QuerySession session(oracle, x);
  AttackReport rep = run_geoda(session, cfg, rng, true);
  rep.p = PNorm::one();
  if (rep.w_hat.empty() || rep.abort_code == ErrorCode::remote_unavailable) return rep;

  const Point& w = rep.w_hat;
  const Point x_b = rep.adversarial;
  Point x_ref = x_b;
  x_ref.axpy(cfg.zeta, x_b - x);

  std::vector<double> key(d);
  for (std::size_t j = 0; j < d; ++j) {
    const double room = w[j] > 0.0 ? hi[j] - x[j] : x[j] - lo[j];
    key[j] = cfg.ranking == SparseRanking::gain ? std::abs(w[j]) * room : std::abs(w[j]);
  }
  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return key[a] > key[b]; });

  const auto candidate = [&](std::size_t k) {
    Point c = x;
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = order[i];
      if (w[j] > 0.0) c[j] = hi[j];
      if (w[j] < 0.0) c[j] = lo[j];
    }
    return c;
  };
  const auto crosses = [&](std::size_t k) { return dot(w, candidate(k) - x_ref) > 0.0; };

  if (!crosses(d)) {
    throw GeodaError(ErrorCode::sparse_failed,
                     "pushing every coordinate to the box does not cross the estimated boundary");
  }

  std::vector<std::pair<std::size_t, bool>> checked;
  const auto verify = [&](std::size_t k) {
    checked.emplace_back(k, session.is_adversarial(candidate(k), Phase::sparse_search));
  };
  const std::size_t rounds =
      static_cast<std::size_t>(std::lround(std::log2(static_cast<double>(d)))) + 1;
  std::size_t k_lo = 0, k_hi = d;
  for (std::size_t j = 0; j < rounds && k_hi - k_lo > 1; ++j) {
    const std::size_t k = (k_lo + k_hi) / 2;
    if (crosses(k)) {
      k_hi = k;
      verify(k);
    } else {
      k_lo = k;
    }
  }
  if (checked.empty()) verify(k_hi);

  std::optional<std::size_t> best;
  for (auto [k, fooled] : checked) {
    if (fooled && (!best || k < *best)) best = k;
  }
  rep.sparse_k = best.value_or(k_hi);
  rep.fooled = best.has_value();
  rep.adversarial = candidate(*rep.sparse_k);
  rep.queries = session.counts();
  return rep;
}

AttackReport run_attack(const Oracle& oracle, const Point& x, const AttackConfig& cfg,
                        RandomSource& rng) {
  return cfg.p.value() == 1.0 ? sparse_attack(oracle, x, cfg, rng)
                              : geoda_attack(oracle, x, cfg, rng);
}

double convergence_rate(double R, double r) {
  if (!(R > 0.0)) throw GeodaError(ErrorCode::invalid_argument, "radius must be > 0");
  return r * r * (R - r) / (R * R * (R + r));
}

std::pair<double, double> convergence_error_bound(double r0, double r, double lambda,
                                                  const QuerySchedule& schedule, std::size_t d,
                                                  double delta, const std::vector<double>& radii) {
  const std::size_t T = schedule.iterations();
  if (radii.size() != T || T == 0) {
    throw GeodaError(ErrorCode::invalid_argument, "need one radius per scheduled iteration");
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw GeodaError(ErrorCode::invalid_argument, "delta must be in (0,1)");
  }
  const double c2 = -2.0 / std::numbers::pi;
  const double gamma = std::sqrt(static_cast<double>(d) + c2) +
                       std::sqrt(2.0 * (1.0 + c2) * std::log(1.0 / delta));
  double e = 0.0;
  for (std::size_t i = 0; i < T; ++i) {
    e += std::pow(lambda, static_cast<double>(T - 1 - i)) * radii[i] /
         std::sqrt(static_cast<double>(schedule.counts[i]));
  }
  e *= gamma;
  const double centre = std::pow(lambda, static_cast<double>(T)) * (r0 - r);
  return {centre - e, centre + e};
}

}  // namespace geoda

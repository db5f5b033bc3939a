#include "geoda/estimator.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace geoda {

namespace {

constexpr std::size_t kQueryChunk = 32;

}  // namespace

CovariancePrior CovariancePrior::identity(double sigma) {
  if (!(sigma > 0.0)) throw GeodaError(ErrorCode::invalid_argument, "sigma must be > 0");
  CovariancePrior p;
  p.kind_ = PriorKind::identity;
  p.sigma_ = sigma;
  return p;
}

CovariancePrior CovariancePrior::subspace(std::shared_ptr<const SubspaceBasis> basis,
                                          double sigma) {
  if (!basis || basis->rank() == 0) {
    throw GeodaError(ErrorCode::invalid_subspace_size, "subspace prior needs a basis");
  }
  if (!(sigma > 0.0)) throw GeodaError(ErrorCode::invalid_argument, "sigma must be > 0");
  CovariancePrior p;
  p.kind_ = PriorKind::subspace;
  p.sigma_ = sigma;
  p.basis_ = std::move(basis);
  return p;
}

CovariancePrior CovariancePrior::transfer(Point direction, double beta, double sigma) {
  if (!(beta >= 0.0 && beta <= 1.0)) {
    throw GeodaError(ErrorCode::invalid_argument, "transfer beta must be in [0,1]");
  }
  if (!(sigma > 0.0)) throw GeodaError(ErrorCode::invalid_argument, "sigma must be > 0");
  CovariancePrior p;
  p.kind_ = PriorKind::transfer;
  p.sigma_ = sigma;
  p.beta_ = beta;
  p.direction_ = normalized(direction);
  return p;
}

CovariancePrior CovariancePrior::with_sigma(double sigma) const {
  if (!(sigma > 0.0)) throw GeodaError(ErrorCode::invalid_argument, "sigma must be > 0");
  CovariancePrior p = *this;
  p.sigma_ = sigma;
  return p;
}

void CovariancePrior::check_dim(std::size_t dim) const {
  if ((kind_ == PriorKind::subspace && basis_->dim() != dim) ||
      (kind_ == PriorKind::transfer && direction_.dim() != dim)) {
    throw GeodaError(ErrorCode::dimension_mismatch, "prior dimension mismatch");
  }
}

Point CovariancePrior::sample(RandomSource& rng, std::size_t dim) const {
  check_dim(dim);
  switch (kind_) {
    case PriorKind::identity:
      return rng.gaussian_point(dim) * std::sqrt(sigma_);
    case PriorKind::subspace: {
      const std::size_t m = basis_->rank();
      std::vector<double> z(m);
      for (double& v : z) v = rng.gaussian();
      return basis_->synthesize(z) * std::sqrt(sigma_ / static_cast<double>(m));
    }
    case PriorKind::transfer: {
      Point eta = rng.gaussian_point(dim) * std::sqrt(beta_);
      const double z = rng.gaussian();
      eta.axpy(std::sqrt(1.0 - beta_) * z, direction_);
      return eta * std::sqrt(sigma_);
    }
  }
  return Point(dim);
}

double CovariancePrior::trace_factor(std::size_t dim) const {
  switch (kind_) {
    case PriorKind::identity: return static_cast<double>(dim);
    case PriorKind::subspace: return 1.0;
    case PriorKind::transfer: return beta_ * static_cast<double>(dim) + (1.0 - beta_);
  }
  return static_cast<double>(dim);
}

std::string CovariancePrior::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case PriorKind::identity: os << "identity"; break;
    case PriorKind::subspace: os << "subspace(m=" << basis_->rank() << ")"; break;
    case PriorKind::transfer: os << "transfer(beta=" << beta_ << ")"; break;
  }
  os << " sigma=" << sigma_;
  return os.str();
}

Point sample_perturbation(const CovariancePrior& prior, RandomSource& rng, std::size_t dim) {
  return prior.sample(rng, dim);
}

WeightedMean sign_weighted_mean(QuerySession& session, const Point& x_b, std::size_t n,
                                const CovariancePrior& prior, RandomSource& rng) {
  if (n == 0) throw GeodaError(ErrorCode::invalid_argument, "need at least one draw");
  require_same_dim(x_b, session.original(), "sign_weighted_mean");
  const std::size_t d = x_b.dim();
  const bool boxed = session.oracle().input_box().has_value();

  WeightedMean out{Point(d), 0};
  std::vector<Point> etas;
  std::vector<Point> queries;
  for (std::size_t start = 0; start < n; start += kQueryChunk) {
    const std::size_t count = std::min(kQueryChunk, n - start);
    etas.clear();
    queries.clear();
    for (std::size_t i = 0; i < count; ++i) {
      Point eta = prior.sample(rng, d);
      Point q = x_b + eta;
      if (boxed) {
        // The label belongs to the clipped point, so weight its actual offset.
        q = session.prepare(std::move(q));
        eta = q - x_b;
      }
      etas.push_back(std::move(eta));
      queries.push_back(std::move(q));
    }
    const auto flags = session.is_adversarial_batch(queries, Phase::estimation);
    for (std::size_t i = 0; i < count; ++i) {
      if (flags[i]) ++out.adversarial;
      out.mean.axpy(flags[i] ? 1.0 : -1.0, etas[i]);
    }
  }
  out.mean *= 1.0 / static_cast<double>(n);
  return out;
}

NormalEstimate estimate_normal(QuerySession& session, const Point& x_b, std::size_t n,
                               const CovariancePrior& prior, RandomSource& rng) {
  WeightedMean wm = sign_weighted_mean(session, x_b, n, prior, rng);
  const double norm = l2_norm(wm.mean);
  if (!(norm >= 1e-15)) {
    throw GeodaError(ErrorCode::degenerate_mean,
                     "weighted mean vanished; sigma too small or point off the boundary");
  }
  NormalEstimate est;
  est.w_hat = wm.mean * (1.0 / norm);
  est.raw_mean_norm = norm;
  est.adversarial = wm.adversarial;

  double scale = l2_norm(x_b - session.original());
  if (!(scale > 0.0)) scale = 1.0;
  Point probe = x_b;
  probe.axpy(1e-3 * scale, est.w_hat);
  if (!session.is_adversarial(probe, Phase::estimation)) est.w_hat *= -1.0;
  est.n_used = n + 1;
  return est;
}

TruncatedMeanConstants truncated_mean_constants(double sigma) {
  if (!(sigma > 0.0)) throw GeodaError(ErrorCode::invalid_argument, "sigma must be > 0");
  // phi(0) / Phi(0) for the standard normal, Phi(0) = 1/2.
  const double ratio = 2.0 / std::sqrt(2.0 * std::numbers::pi);
  return {ratio / std::sqrt(sigma), -sigma * ratio * ratio};
}

EstimatorBound estimator_error_bound(std::size_t d, std::size_t n, double delta,
                                     double sigma) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw GeodaError(ErrorCode::invalid_argument, "delta must be in (0,1)");
  }
  if (n == 0 || d == 0) throw GeodaError(ErrorCode::invalid_argument, "d and n must be >= 1");
  const double c2 = truncated_mean_constants(1.0).c2;
  const double nn = static_cast<double>(n);
  const double trace = static_cast<double>(d) + c2;
  const double lambda_max = 1.0 + c2;
  const double b = std::sqrt(trace / nn) + std::sqrt(2.0 * lambda_max * std::log(1.0 / delta) / nn);
  return {d, n, delta, std::sqrt(sigma) * b};
}

SigmaCalibration calibrate_sigma(QuerySession& session, const Point& x_b,
                                 const CovariancePrior& prior, RandomSource& rng,
                                 const CalibrationConfig& cfg) {
  if (cfg.pilot_size == 0 || cfg.max_rounds == 0 || !(cfg.low <= cfg.high)) {
    throw GeodaError(ErrorCode::invalid_argument, "bad calibration settings");
  }
  double base = 0.0;
  if (cfg.initial_sigma) {
    base = *cfg.initial_sigma;
  } else {
    double r = l2_norm(x_b - session.original());
    if (!(r > 0.0)) r = 1.0;
    base = (0.01 * r) * (0.01 * r) / prior.trace_factor(x_b.dim());
  }
  if (!(base > 0.0)) throw GeodaError(ErrorCode::invalid_argument, "sigma must be > 0");

  // x_b sits on the adversarial side, so a vanishing sigma gives fraction 1.
  // Too many clean pilots means sigma overshoots the boundary: halve. Too
  // many adversarial ones is read as "still too small": double. A reversal
  // halves the log-step so the scan cannot oscillate across a narrow band.
  SigmaCalibration result;
  double sigma = base;
  double log_step = 1.0;
  int last_dir = 0;
  for (std::size_t round = 0; round < cfg.max_rounds; ++round) {
    const WeightedMean wm =
        sign_weighted_mean(session, x_b, cfg.pilot_size, prior.with_sigma(sigma), rng);
    result.queries += cfg.pilot_size;
    result.rounds = round + 1;
    result.sigma = sigma;
    result.adversarial_fraction =
        static_cast<double>(wm.adversarial) / static_cast<double>(cfg.pilot_size);
    result.trace.emplace_back(sigma, result.adversarial_fraction);
    if (result.adversarial_fraction >= cfg.low && result.adversarial_fraction <= cfg.high) {
      return result;
    }
    const int dir = result.adversarial_fraction > cfg.high ? 1 : -1;
    if (last_dir != 0 && dir != last_dir) log_step /= 2.0;
    last_dir = dir;
    sigma *= std::exp2(dir * log_step);
    if (!(sigma > 0.0) || !std::isfinite(sigma)) break;
  }
  std::ostringstream os;
  os << "sigma calibration failed after " << result.rounds
     << " rounds (last adversarial fraction " << result.adversarial_fraction << ")";
  throw GeodaError(ErrorCode::degenerate_mean, os.str());
}

}  // namespace geoda

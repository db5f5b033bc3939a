#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "geoda/core.hpp"
#include "geoda/oracle.hpp"

namespace geoda {

/// An m-dimensional orthonormal subspace of R^d that can synthesize
/// sum_i c_i s_i without storing the basis.
class SubspaceBasis {
 public:
  virtual ~SubspaceBasis() = default;
  virtual std::size_t dim() const = 0;
  virtual std::size_t rank() const = 0;
  virtual Point synthesize(std::span<const double> coefficients) const = 0;
  /// Basis vector i.
  Point vector(std::size_t i) const;
};

/// Basis given explicitly as a list of orthonormal points.
class ExplicitBasis final : public SubspaceBasis {
 public:
  /// Throws invalid_argument unless |s_i.s_j - delta_ij| < 1e-10.
  explicit ExplicitBasis(std::vector<Point> vectors);

  std::size_t dim() const override { return vectors_.front().dim(); }
  std::size_t rank() const override { return vectors_.size(); }
  Point synthesize(std::span<const double> coefficients) const override;

 private:
  std::vector<Point> vectors_;
};

/// The m lowest-frequency 2-D DCT-II basis images of an H x W grid, each
/// replicated over C channels and scaled to unit l2 norm. Frequencies (u, v)
/// are ordered by u + v, ties by u. Synthesis is separable and never
/// materializes the basis.
class DctBasis final : public SubspaceBasis {
 public:
  /// Throws InvalidSubspaceSize if m == 0 or m > height * width.
  DctBasis(std::size_t height, std::size_t width, std::size_t channels, std::size_t m);

  std::size_t dim() const override { return channels_ * height_ * width_; }
  std::size_t rank() const override { return freqs_.size(); }
  Point synthesize(std::span<const double> coefficients) const override;

  const std::vector<std::pair<std::size_t, std::size_t>>& frequencies() const {
    return freqs_;
  }

 private:
  std::size_t height_, width_, channels_;
  std::vector<std::pair<std::size_t, std::size_t>> freqs_;
  std::vector<double> row_cos_;  // [u * height + y]
  std::vector<double> col_cos_;  // [v * width + x]
  // Coefficient indices grouped by row frequency u.
  std::vector<std::pair<std::size_t, std::vector<std::size_t>>> by_row_;
};

/// Materialized DCT basis; see DctBasis.
std::vector<Point> dct_basis(std::size_t height, std::size_t width, std::size_t channels,
                             std::size_t m);

enum class PriorKind { identity, subspace, transfer };

/// Covariance of the estimation draws, always scaled by a variance factor
/// sigma:
///   identity:  sigma * I
///   subspace:  sigma * (1/m) * sum_i s_i s_i^T
///   transfer:  sigma * (beta * I + (1 - beta) * g g^T)
class CovariancePrior {
 public:
  static CovariancePrior identity(double sigma = 1.0);
  static CovariancePrior subspace(std::shared_ptr<const SubspaceBasis> basis,
                                  double sigma = 1.0);
  /// `direction` is normalized; throws if it is zero or beta is outside [0,1].
  static CovariancePrior transfer(Point direction, double beta, double sigma = 1.0);

  PriorKind kind() const { return kind_; }
  double sigma() const { return sigma_; }
  CovariancePrior with_sigma(double sigma) const;

  double beta() const { return beta_; }
  const Point& direction() const { return direction_; }
  const SubspaceBasis* basis() const { return basis_.get(); }

  /// Draw eta ~ N(0, Sigma) in dimension `dim`.
  Point sample(RandomSource& rng, std::size_t dim) const;
  /// trace(Sigma) / sigma for dimension `dim` (E||eta||^2 = sigma * this).
  double trace_factor(std::size_t dim) const;

  std::string describe() const;

 private:
  CovariancePrior() = default;
  void check_dim(std::size_t dim) const;

  PriorKind kind_ = PriorKind::identity;
  double sigma_ = 1.0;
  double beta_ = 1.0;
  Point direction_;
  std::shared_ptr<const SubspaceBasis> basis_;
};

/// Draw one perturbation from `prior`.
Point sample_perturbation(const CovariancePrior& prior, RandomSource& rng, std::size_t dim);

struct NormalEstimate {
  Point w_hat;
  std::size_t n_used = 0;        // queries including the orientation probe
  double raw_mean_norm = 0.0;    // ||mean(rho_i eta_i)||_2
  std::size_t adversarial = 0;   // draws that flipped the label
};

struct WeightedMean {
  Point mean;
  std::size_t adversarial = 0;
};

/// (1/n) sum_i rho_i eta_i with rho_i = +1 when x_b + eta_i is adversarial,
/// -1 otherwise. Exactly n estimation queries. Draws are generated and
/// accumulated in sample order, so the result depends only on the seed.
WeightedMean sign_weighted_mean(QuerySession& session, const Point& x_b, std::size_t n,
                                const CovariancePrior& prior, RandomSource& rng);

/// Unit normal estimate at boundary point x_b from n draws, plus one
/// orientation probe so that +w_hat points into the adversarial region.
/// Throws DegenerateMean if the weighted mean vanishes.
NormalEstimate estimate_normal(QuerySession& session, const Point& x_b, std::size_t n,
                               const CovariancePrior& prior, RandomSource& rng);

/// Half-space truncated Gaussian constants for Sigma = sigma * I (sigma is a
/// variance): the truncated mean is c1 * Sigma * w = sqrt(2 sigma / pi) w and
/// the truncated covariance is Sigma + c2 w w^T.
struct TruncatedMeanConstants {
  double c1 = 0.0;
  double c2 = 0.0;
};
TruncatedMeanConstants truncated_mean_constants(double sigma);

struct EstimatorBound {
  std::size_t d = 0;
  std::size_t n = 0;
  double delta = 0.0;
  double bound = 0.0;
};

/// With probability >= 1 - delta the sign-weighted mean of n draws with
/// covariance sigma * I lies within `bound` of its expectation:
///   sqrt(sigma) * (sqrt((d + c2) / n) + sqrt(2 (1 + c2) ln(1/delta) / n)),
/// with c2 = -2/pi taken at unit variance.
EstimatorBound estimator_error_bound(std::size_t d, std::size_t n, double delta,
                                     double sigma = 1.0);

struct CalibrationConfig {
  std::size_t pilot_size = 32;
  double low = 0.35;
  double high = 0.65;
  std::size_t max_rounds = 20;
  /// Starting variance; default makes E||eta|| about 1% of ||x_b - x||.
  std::optional<double> initial_sigma;
};

struct SigmaCalibration {
  double sigma = 0.0;
  double adversarial_fraction = 0.0;
  std::size_t queries = 0;
  std::size_t rounds = 0;
  /// (sigma, adversarial fraction) of every pilot round, in order.
  std::vector<std::pair<double, double>> trace;
};

/// Probe x_b with pilot batches, doubling sigma while too many pilots are
/// adversarial and halving it while too few are (the step shrinks after a
/// reversal), until the adversarial fraction lands in [low, high]. Pilot
/// queries are charged to `estimation`. Throws DegenerateMean if no scale
/// qualifies within max_rounds.
SigmaCalibration calibrate_sigma(QuerySession& session, const Point& x_b,
                                 const CovariancePrior& prior, RandomSource& rng,
                                 const CalibrationConfig& cfg = {});

}  // namespace geoda

#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace geoda {

enum class ErrorCode {
  invalid_argument,
  dimension_mismatch,
  remote_unavailable,
  unsupported_oracle,
  degenerate_mean,
  invalid_subspace_size,
  no_adversarial_found,
  no_crossing_found,
  invalid_budget,
  unsupported_p,
  budget_exhausted,
  sparse_failed,
  empty_batch,
  not_sparse_report,
  io_error,
  config_error,
};

const char* to_string(ErrorCode code);

class GeodaError : public std::runtime_error {
 public:
  GeodaError(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// A point (image, perturbation, direction) in input space.
///
/// Images are flattened in (channel, row, column) order: the value at
/// (c, y, x) of a C x H x W image lives at index (c * H + y) * W + x.
class Point {
 public:
  Point() = default;
  explicit Point(std::size_t dim, double fill = 0.0) : values_(dim, fill) {}
  /// Throws invalid_argument if any value is NaN or infinite.
  explicit Point(std::vector<double> values);
  Point(std::initializer_list<double> values)
      : Point(std::vector<double>(values)) {}

  std::size_t dim() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  const std::vector<double>& vec() const noexcept { return values_; }

  auto begin() noexcept { return values_.begin(); }
  auto end() noexcept { return values_.end(); }
  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }

  bool all_finite() const noexcept;

  Point& operator+=(const Point& other);
  Point& operator-=(const Point& other);
  Point& operator*=(double s) noexcept;

  /// this += s * other
  Point& axpy(double s, const Point& other);

  friend bool operator==(const Point&, const Point&) = default;

 private:
  std::vector<double> values_;
};

Point operator+(Point a, const Point& b);
Point operator-(Point a, const Point& b);
Point operator*(Point a, double s);
Point operator*(double s, Point a);

double dot(const Point& a, const Point& b);
double l2_norm(const Point& v);
/// Returns v / ||v||_2. Throws invalid_argument on the zero vector.
Point normalized(const Point& v);
/// Cosine of the angle between a and b.
double cosine(const Point& a, const Point& b);
/// Clamp every coordinate into [lo, hi].
Point clipped(Point x, double lo, double hi);
Point clipped(Point x, const Point& lo, const Point& hi);

void require_same_dim(const Point& a, const Point& b, const char* what);

/// Top-1 class index.
struct Label {
  std::uint32_t id = 0;
  friend auto operator<=>(const Label&, const Label&) = default;
};

/// Norm exponent p in [1, inf]. Infinity is stored as +inf.
class PNorm {
 public:
  constexpr PNorm() = default;
  explicit PNorm(double p);

  static constexpr PNorm infinity() {
    PNorm n;
    n.p_ = std::numeric_limits<double>::infinity();
    return n;
  }
  static PNorm one() { return PNorm(1.0); }
  static PNorm two() { return PNorm(2.0); }

  double value() const noexcept { return p_; }
  bool is_infinite() const noexcept {
    return p_ == std::numeric_limits<double>::infinity();
  }

  std::string to_string() const;
  /// Accepts a positive number or "inf".
  static PNorm parse(const std::string& text);

  friend bool operator==(const PNorm&, const PNorm&) = default;

 private:
  double p_ = 2.0;
};

double lp_norm(const Point& v, PNorm p);
double lp_norm(std::span<const double> v, PNorm p);

/// Conjugate exponent q with 1/p + 1/q = 1.
PNorm dual_exponent(PNorm p);

/// Seeded random stream.
///
/// Uniforms come from std::mt19937_64 (bit-exact across standard libraries)
/// using the top 53 bits. Gaussian draws use the Marsaglia polar method and
/// cache the second value of each accepted pair. Children for parallel work
/// are derived with split(): the child seed is splitmix64(seed + k * golden)
/// for the k-th split of this source.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed);

  std::uint64_t seed() const noexcept { return seed_; }

  /// Uniform on [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n);
  double gaussian();
  /// Point of iid N(0,1) coordinates.
  Point gaussian_point(std::size_t dim);
  /// Uniformly distributed direction on the unit l2 sphere.
  Point unit_direction(std::size_t dim);

  RandomSource split();

 private:
  std::uint64_t seed_;
  std::uint64_t splits_ = 0;
  std::mt19937_64 engine_;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace geoda

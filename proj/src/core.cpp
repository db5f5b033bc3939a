#include "geoda/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace geoda {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "InvalidArgument";
    case ErrorCode::dimension_mismatch: return "DimensionMismatch";
    case ErrorCode::remote_unavailable: return "RemoteUnavailable";
    case ErrorCode::unsupported_oracle: return "UnsupportedOracle";
    case ErrorCode::degenerate_mean: return "DegenerateMean";
    case ErrorCode::invalid_subspace_size: return "InvalidSubspaceSize";
    case ErrorCode::no_adversarial_found: return "NoAdversarialFound";
    case ErrorCode::no_crossing_found: return "NoCrossingFound";
    case ErrorCode::invalid_budget: return "InvalidBudget";
    case ErrorCode::unsupported_p: return "UnsupportedP";
    case ErrorCode::budget_exhausted: return "BudgetExhausted";
    case ErrorCode::sparse_failed: return "SparseFailed";
    case ErrorCode::empty_batch: return "EmptyBatch";
    case ErrorCode::not_sparse_report: return "NotSparseReport";
    case ErrorCode::io_error: return "IoError";
    case ErrorCode::config_error: return "ConfigError";
  }
  return "Unknown";
}

Point::Point(std::vector<double> values) : values_(std::move(values)) {
  if (!all_finite()) {
    throw GeodaError(ErrorCode::invalid_argument, "point has non-finite values");
  }
}

bool Point::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return std::isfinite(v); });
}

void require_same_dim(const Point& a, const Point& b, const char* what) {
  if (a.dim() != b.dim()) {
    std::ostringstream os;
    os << what << ": dimension " << a.dim() << " vs " << b.dim();
    throw GeodaError(ErrorCode::dimension_mismatch, os.str());
  }
}

Point& Point::operator+=(const Point& other) {
  require_same_dim(*this, other, "operator+=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

Point& Point::operator-=(const Point& other) {
  require_same_dim(*this, other, "operator-=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  return *this;
}

Point& Point::operator*=(double s) noexcept {
  for (double& v : values_) v *= s;
  return *this;
}

Point& Point::axpy(double s, const Point& other) {
  require_same_dim(*this, other, "axpy");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += s * other.values_[i];
  return *this;
}

Point operator+(Point a, const Point& b) { return a += b; }
Point operator-(Point a, const Point& b) { return a -= b; }
Point operator*(Point a, double s) { return a *= s; }
Point operator*(double s, Point a) { return a *= s; }

double dot(const Point& a, const Point& b) {
  require_same_dim(a, b, "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) acc += a[i] * b[i];
  return acc;
}

double l2_norm(const Point& v) { return lp_norm(v, PNorm::two()); }

Point normalized(const Point& v) {
  const double n = l2_norm(v);
  if (!(n > 0.0)) {
    throw GeodaError(ErrorCode::invalid_argument, "cannot normalize zero vector");
  }
  return v * (1.0 / n);
}

double cosine(const Point& a, const Point& b) {
  return dot(a, b) / (l2_norm(a) * l2_norm(b));
}

Point clipped(Point x, double lo, double hi) {
  for (double& v : x) v = std::clamp(v, lo, hi);
  return x;
}

Point clipped(Point x, const Point& lo, const Point& hi) {
  require_same_dim(x, lo, "clipped");
  require_same_dim(x, hi, "clipped");
  for (std::size_t i = 0; i < x.dim(); ++i) x[i] = std::clamp(x[i], lo[i], hi[i]);
  return x;
}

PNorm::PNorm(double p) : p_(p) {
  if (!(p >= 1.0)) {
    throw GeodaError(ErrorCode::invalid_argument, "norm exponent must be >= 1");
  }
}

std::string PNorm::to_string() const {
  if (is_infinite()) return "inf";
  std::ostringstream os;
  os << p_;
  return os.str();
}

PNorm PNorm::parse(const std::string& text) {
  if (text == "inf" || text == "Inf" || text == "infinity") return infinity();
  std::size_t used = 0;
  double p = 0.0;
  try {
    p = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || text.empty()) {
    throw GeodaError(ErrorCode::invalid_argument, "bad norm exponent: " + text);
  }
  return PNorm(p);
}

double lp_norm(std::span<const double> v, PNorm p) {
  if (p.is_infinite()) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
  }
  if (p.value() == 1.0) {
    double s = 0.0;
    for (double x : v) s += std::abs(x);
    return s;
  }
  // Scale by the max magnitude so large exponents do not overflow.
  double scale = 0.0;
  for (double x : v) scale = std::max(scale, std::abs(x));
  if (scale == 0.0) return 0.0;
  double s = 0.0;
  if (p.value() == 2.0) {
    for (double x : v) {
      const double t = x / scale;
      s += t * t;
    }
    return scale * std::sqrt(s);
  }
  for (double x : v) s += std::pow(std::abs(x) / scale, p.value());
  return scale * std::pow(s, 1.0 / p.value());
}

double lp_norm(const Point& v, PNorm p) { return lp_norm(v.values(), p); }

PNorm dual_exponent(PNorm p) {
  if (p.is_infinite()) return PNorm::one();
  if (p.value() == 1.0) return PNorm::infinity();
  return PNorm(p.value() / (p.value() - 1.0));
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

RandomSource::RandomSource(std::uint64_t seed) : seed_(seed), engine_(seed) {}

double RandomSource::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::uint64_t RandomSource::uniform_index(std::uint64_t n) {
  if (n == 0) throw GeodaError(ErrorCode::invalid_argument, "uniform_index(0)");
  // Rejection sampling removes modulo bias.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t r = 0;
  do {
    r = engine_();
  } while (r >= limit);
  return r % n;
}

double RandomSource::gaussian() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  double u = 0.0, v = 0.0, s = 0.0;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  cached_ = v * f;
  has_cached_ = true;
  return u * f;
}

Point RandomSource::gaussian_point(std::size_t dim) {
  Point p(dim);
  for (double& v : p) v = gaussian();
  return p;
}

Point RandomSource::unit_direction(std::size_t dim) {
  for (;;) {
    Point p = gaussian_point(dim);
    const double n = l2_norm(p);
    if (n > 0.0) return p * (1.0 / n);
  }
}

RandomSource RandomSource::split() {
  ++splits_;
  return RandomSource(splitmix64(seed_ + splits_ * 0x9e3779b97f4a7c15ULL));
}

}  // namespace geoda

#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "geoda/core.hpp"

namespace geoda {

enum class Phase : std::size_t {
  estimation = 0,
  binary_search = 1,
  line_search = 2,
  sparse_search = 3,
};

inline constexpr std::array<Phase, 4> kAllPhases = {
    Phase::estimation, Phase::binary_search, Phase::line_search,
    Phase::sparse_search};

const char* phase_name(Phase phase);

/// Plain snapshot of a QueryCounter.
struct QueryCounts {
  std::array<std::uint64_t, 4> by_phase{};

  std::uint64_t operator[](Phase p) const {
    return by_phase[static_cast<std::size_t>(p)];
  }
  std::uint64_t total() const;

  friend bool operator==(const QueryCounts&, const QueryCounts&) = default;
};

/// Monotone per-phase query tally. Updates are atomic.
class QueryCounter {
 public:
  QueryCounter() = default;
  QueryCounter(const QueryCounter&) = delete;
  QueryCounter& operator=(const QueryCounter&) = delete;

  void add(Phase phase, std::uint64_t n = 1) {
    counts_[static_cast<std::size_t>(phase)].fetch_add(n, std::memory_order_relaxed);
  }
  std::uint64_t get(Phase phase) const {
    return counts_[static_cast<std::size_t>(phase)].load(std::memory_order_relaxed);
  }
  std::uint64_t total() const { return snapshot().total(); }
  QueryCounts snapshot() const;

 private:
  std::array<std::atomic<std::uint64_t>, 4> counts_{};
};

/// Hard-label black box. Implementations must make top1 safe to call
/// concurrently; query accounting lives in QuerySession.
class Oracle {
 public:
  virtual ~Oracle() = default;

  virtual std::size_t dimension() const = 0;
  virtual Label top1(const Point& x) const = 0;
  virtual std::vector<Label> top1_batch(std::span<const Point> xs) const;

  /// Valid input range, if the model only accepts points in a box
  /// (images in [0,1]). Queries are clipped into it.
  virtual std::optional<std::pair<double, double>> input_box() const {
    return std::nullopt;
  }

 protected:
  void check_dim(const Point& x) const;
};

/// Half-space classifier: label_outside iff w.x + b > 0. A point exactly on
/// the hyperplane gets label_inside.
class LinearOracle final : public Oracle {
 public:
  /// The (normal, offset) pair is rescaled so that the normal is unit length.
  LinearOracle(Point normal, double offset, Label label_inside = {0},
               Label label_outside = {1});

  std::size_t dimension() const override { return w_.dim(); }
  Label top1(const Point& x) const override;

  const Point& normal() const { return w_; }
  double offset() const { return b_; }
  /// w.x + b
  double signed_distance(const Point& x) const;

 private:
  Point w_;
  double b_;
  Label inside_, outside_;
};

/// Sphere classifier: label_inside iff ||x - center|| <= radius. Starting
/// inside gives a convex boundary (curvature 1/radius), starting outside a
/// concave one.
class BallOracle final : public Oracle {
 public:
  BallOracle(Point center, double radius, Label label_inside = {0},
             Label label_outside = {1});

  std::size_t dimension() const override { return center_.dim(); }
  Label top1(const Point& x) const override;

  const Point& center() const { return center_; }
  double radius() const { return radius_; }

 private:
  Point center_;
  double radius_;
  Label inside_, outside_;
};

struct ImageShape {
  std::size_t channels = 1;
  std::size_t height = 1;
  std::size_t width = 1;

  std::size_t size() const { return channels * height * width; }
  friend bool operator==(const ImageShape&, const ImageShape&) = default;
};

/// Client for a model served over HTTP:
///   POST {endpoint}/predict        {"shape":[C,H,W],"x":[...]}    -> {"label":k}
///   POST {endpoint}/predict_batch  {"shape":[C,H,W],"xs":[[...]]} -> {"labels":[...]}
/// A timed-out or failed connection is retried once. HTTP 400 maps to
/// DimensionMismatch; anything else non-200 to RemoteUnavailable.
class RemoteOracle final : public Oracle {
 public:
  RemoteOracle(std::string endpoint, ImageShape shape,
               std::chrono::milliseconds timeout = std::chrono::seconds(30),
               std::size_t max_batch = 64);

  std::size_t dimension() const override { return shape_.size(); }
  Label top1(const Point& x) const override;
  std::vector<Label> top1_batch(std::span<const Point> xs) const override;
  std::optional<std::pair<double, double>> input_box() const override {
    return std::make_pair(0.0, 1.0);
  }

  const std::string& endpoint() const { return endpoint_; }

 private:
  std::string post(const std::string& path, const std::string& body) const;

  std::string endpoint_;
  std::string host_;
  std::string base_path_;
  ImageShape shape_;
  std::chrono::milliseconds timeout_;
  std::size_t max_batch_;
};

/// Wraps another oracle and counts raw top1 evaluations. Used to audit
/// QuerySession accounting.
class CountingOracle final : public Oracle {
 public:
  explicit CountingOracle(const Oracle& inner) : inner_(inner) {}

  std::size_t dimension() const override { return inner_.dimension(); }
  Label top1(const Point& x) const override;
  std::vector<Label> top1_batch(std::span<const Point> xs) const override;
  std::optional<std::pair<double, double>> input_box() const override {
    return inner_.input_box();
  }

  std::uint64_t calls() const { return calls_.load(); }

 private:
  const Oracle& inner_;
  mutable std::atomic<std::uint64_t> calls_{0};
};

/// One attack's view of an oracle: the original point, its cached label
/// (costing one binary_search query at construction) and the query counter.
class QuerySession {
 public:
  QuerySession(const Oracle& oracle, Point original);
  QuerySession(const QuerySession&) = delete;
  QuerySession& operator=(const QuerySession&) = delete;

  const Oracle& oracle() const { return oracle_; }
  const Point& original() const { return original_; }
  Label original_label() const { return original_label_; }
  std::size_t dim() const { return original_.dim(); }

  /// Clip into the oracle's input box; identity for unconstrained oracles.
  Point prepare(Point x) const;

  Label top1(const Point& x, Phase phase);
  std::vector<Label> top1_batch(std::span<const Point> xs, Phase phase);
  bool is_adversarial(const Point& candidate, Phase phase);
  /// One flag per candidate, 1 if adversarial.
  std::vector<char> is_adversarial_batch(std::span<const Point> candidates, Phase phase);

  const QueryCounter& counter() const { return counter_; }
  QueryCounts counts() const { return counter_.snapshot(); }

  /// Queries charged to `estimation` beyond this cap throw BudgetExhausted
  /// before reaching the oracle.
  void set_estimation_limit(std::optional<std::uint64_t> limit) { limit_ = limit; }
  std::optional<std::uint64_t> estimation_limit() const { return limit_; }

 private:
  void reserve(Phase phase, std::uint64_t n) const;

  const Oracle& oracle_;
  Point original_;
  QueryCounter counter_;
  Label original_label_{};
  std::optional<std::uint64_t> limit_;
};

struct AnalyticPerturbation {
  double distance = 0.0;
  Point direction;
};

/// Exact minimal l2 perturbation for LinearOracle and BallOracle. Spends no
/// queries. Throws UnsupportedOracle for any other oracle.
AnalyticPerturbation min_perturbation_analytic(const Oracle& oracle, const Point& x);

}  // namespace geoda

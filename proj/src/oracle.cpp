#include "geoda/oracle.hpp"

#include <cmath>
#include <sstream>

namespace geoda {

const char* phase_name(Phase phase) {
  switch (phase) {
    case Phase::estimation: return "estimation";
    case Phase::binary_search: return "binary_search";
    case Phase::line_search: return "line_search";
    case Phase::sparse_search: return "sparse_search";
  }
  return "unknown";
}

std::uint64_t QueryCounts::total() const {
  std::uint64_t t = 0;
  for (auto n : by_phase) t += n;
  return t;
}

QueryCounts QueryCounter::snapshot() const {
  QueryCounts c;
  for (std::size_t i = 0; i < counts_.size(); ++i) {
    c.by_phase[i] = counts_[i].load(std::memory_order_relaxed);
  }
  return c;
}

void Oracle::check_dim(const Point& x) const {
  if (x.dim() != dimension()) {
    std::ostringstream os;
    os << "oracle expects dimension " << dimension() << ", got " << x.dim();
    throw GeodaError(ErrorCode::dimension_mismatch, os.str());
  }
}

std::vector<Label> Oracle::top1_batch(std::span<const Point> xs) const {
  std::vector<Label> labels;
  labels.reserve(xs.size());
  for (const Point& x : xs) labels.push_back(top1(x));
  return labels;
}

LinearOracle::LinearOracle(Point normal, double offset, Label label_inside,
                           Label label_outside)
    : w_(std::move(normal)), b_(offset), inside_(label_inside), outside_(label_outside) {
  const double n = l2_norm(w_);
  if (!(n > 0.0)) {
    throw GeodaError(ErrorCode::invalid_argument, "linear oracle needs a nonzero normal");
  }
  w_ *= 1.0 / n;
  b_ /= n;
  if (inside_ == outside_) {
    throw GeodaError(ErrorCode::invalid_argument, "oracle labels must differ");
  }
}

double LinearOracle::signed_distance(const Point& x) const { return dot(w_, x) + b_; }

Label LinearOracle::top1(const Point& x) const {
  check_dim(x);
  return signed_distance(x) > 0.0 ? outside_ : inside_;
}

BallOracle::BallOracle(Point center, double radius, Label label_inside,
                       Label label_outside)
    : center_(std::move(center)), radius_(radius), inside_(label_inside),
      outside_(label_outside) {
  if (!(radius_ > 0.0) || !std::isfinite(radius_)) {
    throw GeodaError(ErrorCode::invalid_argument, "ball radius must be positive");
  }
  if (center_.empty()) {
    throw GeodaError(ErrorCode::invalid_argument, "ball center must be non-empty");
  }
  if (inside_ == outside_) {
    throw GeodaError(ErrorCode::invalid_argument, "oracle labels must differ");
  }
}

Label BallOracle::top1(const Point& x) const {
  check_dim(x);
  return l2_norm(x - center_) <= radius_ ? inside_ : outside_;
}

Label CountingOracle::top1(const Point& x) const {
  calls_.fetch_add(1);
  return inner_.top1(x);
}

std::vector<Label> CountingOracle::top1_batch(std::span<const Point> xs) const {
  calls_.fetch_add(xs.size());
  return inner_.top1_batch(xs);
}

QuerySession::QuerySession(const Oracle& oracle, Point original)
    : oracle_(oracle), original_(std::move(original)) {
  if (original_.dim() != oracle_.dimension()) {
    throw GeodaError(ErrorCode::dimension_mismatch,
                     "original point does not match oracle dimension");
  }
  original_label_ = top1(original_, Phase::binary_search);
}

Point QuerySession::prepare(Point x) const {
  if (auto box = oracle_.input_box()) return clipped(std::move(x), box->first, box->second);
  return x;
}

void QuerySession::reserve(Phase phase, std::uint64_t n) const {
  if (phase == Phase::estimation && limit_ &&
      counter_.get(Phase::estimation) + n > *limit_) {
    throw GeodaError(ErrorCode::budget_exhausted, "estimation query budget exhausted");
  }
}

Label QuerySession::top1(const Point& x, Phase phase) {
  reserve(phase, 1);
  const Label label = oracle_.input_box() ? oracle_.top1(prepare(x)) : oracle_.top1(x);
  counter_.add(phase);
  return label;
}

std::vector<Label> QuerySession::top1_batch(std::span<const Point> xs, Phase phase) {
  reserve(phase, xs.size());
  std::vector<Label> labels;
  if (oracle_.input_box()) {
    std::vector<Point> ready;
    ready.reserve(xs.size());
    for (const Point& x : xs) ready.push_back(prepare(x));
    labels = oracle_.top1_batch(ready);
  } else {
    labels = oracle_.top1_batch(xs);
  }
  counter_.add(phase, labels.size());
  return labels;
}

bool QuerySession::is_adversarial(const Point& candidate, Phase phase) {
  return top1(candidate, phase) != original_label_;
}

std::vector<char> QuerySession::is_adversarial_batch(std::span<const Point> candidates,
                                                     Phase phase) {
  const auto labels = top1_batch(candidates, phase);
  std::vector<char> flags(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) flags[i] = labels[i] != original_label_;
  return flags;
}

AnalyticPerturbation min_perturbation_analytic(const Oracle& oracle, const Point& x) {
  if (const auto* lin = dynamic_cast<const LinearOracle*>(&oracle)) {
    require_same_dim(x, lin->normal(), "min_perturbation_analytic");
    const double s = lin->signed_distance(x);
    return {std::abs(s), s > 0.0 ? lin->normal() * -1.0 : lin->normal()};
  }
  if (const auto* ball = dynamic_cast<const BallOracle*>(&oracle)) {
    require_same_dim(x, ball->center(), "min_perturbation_analytic");
    Point radial = x - ball->center();
    const double rho = l2_norm(radial);
    if (rho == 0.0) {
      Point e1(x.dim());
      e1[0] = 1.0;
      return {ball->radius(), e1};
    }
    radial *= 1.0 / rho;
    if (rho > ball->radius()) radial *= -1.0;
    return {std::abs(rho - ball->radius()), radial};
  }
  throw GeodaError(ErrorCode::unsupported_oracle,
                   "analytic minimal perturbation needs a linear or ball oracle");
}

}  // namespace geoda

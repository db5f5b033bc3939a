#include <algorithm>
#include <cmath>
#include <numbers>

#include "geoda/estimator.hpp"

namespace geoda {

Point SubspaceBasis::vector(std::size_t i) const {
  std::vector<double> coeffs(rank(), 0.0);
  coeffs.at(i) = 1.0;
  return synthesize(coeffs);
}

ExplicitBasis::ExplicitBasis(std::vector<Point> vectors) : vectors_(std::move(vectors)) {
  if (vectors_.empty()) {
    throw GeodaError(ErrorCode::invalid_subspace_size, "subspace basis is empty");
  }
  for (std::size_t i = 0; i < vectors_.size(); ++i) {
    require_same_dim(vectors_[i], vectors_.front(), "ExplicitBasis");
    for (std::size_t j = i; j < vectors_.size(); ++j) {
      const double g = dot(vectors_[i], vectors_[j]);
      if (std::abs(g - (i == j ? 1.0 : 0.0)) >= 1e-10) {
        throw GeodaError(ErrorCode::invalid_argument, "subspace basis is not orthonormal");
      }
    }
  }
}

Point ExplicitBasis::synthesize(std::span<const double> coefficients) const {
  if (coefficients.size() != vectors_.size()) {
    throw GeodaError(ErrorCode::dimension_mismatch, "coefficient count != basis rank");
  }
  Point out(dim());
  for (std::size_t i = 0; i < vectors_.size(); ++i) out.axpy(coefficients[i], vectors_[i]);
  return out;
}

DctBasis::DctBasis(std::size_t height, std::size_t width, std::size_t channels,
                   std::size_t m)
    : height_(height), width_(width), channels_(channels) {
  if (height == 0 || width == 0 || channels == 0) {
    throw GeodaError(ErrorCode::invalid_argument, "DCT grid must be non-empty");
  }
  // Replicating over channels leaves only H*W distinct basis images.
  if (m == 0 || m > height * width) {
    throw GeodaError(ErrorCode::invalid_subspace_size,
                     "DCT subspace size must be in [1, height*width]");
  }
  freqs_.reserve(m);
  for (std::size_t s = 0; freqs_.size() < m; ++s) {
    const std::size_t u_lo = s >= width ? s - width + 1 : 0;
    const std::size_t u_hi = std::min(s, height - 1);
    for (std::size_t u = u_lo; u <= u_hi && freqs_.size() < m; ++u) {
      freqs_.emplace_back(u, s - u);
    }
  }

  const auto table = [](std::size_t n, std::size_t kmax) {
    std::vector<double> t(kmax * n);
    for (std::size_t k = 0; k < kmax; ++k) {
      const double alpha = std::sqrt((k == 0 ? 1.0 : 2.0) / static_cast<double>(n));
      for (std::size_t i = 0; i < n; ++i) {
        t[k * n + i] = alpha * std::cos(std::numbers::pi * (2.0 * i + 1.0) * k /
                                        (2.0 * static_cast<double>(n)));
      }
    }
    return t;
  };
  std::size_t umax = 0, vmax = 0;
  for (auto [u, v] : freqs_) {
    umax = std::max(umax, u + 1);
    vmax = std::max(vmax, v + 1);
  }
  row_cos_ = table(height_, umax);
  col_cos_ = table(width_, vmax);

  for (std::size_t j = 0; j < freqs_.size(); ++j) {
    const std::size_t u = freqs_[j].first;
    auto it = std::find_if(by_row_.begin(), by_row_.end(),
                           [u](const auto& g) { return g.first == u; });
    if (it == by_row_.end()) {
      by_row_.push_back({u, {j}});
    } else {
      it->second.push_back(j);
    }
  }
}

Point DctBasis::synthesize(std::span<const double> coefficients) const {
  if (coefficients.size() != freqs_.size()) {
    throw GeodaError(ErrorCode::dimension_mismatch, "coefficient count != basis rank");
  }
  // image(y, x) = sum_u row_cos[u](y) * (sum_v c_uv col_cos[v](x))
  std::vector<double> plane(height_ * width_, 0.0);
  std::vector<double> row(width_);
  for (const auto& [u, members] : by_row_) {
    std::fill(row.begin(), row.end(), 0.0);
    bool any = false;
    for (std::size_t j : members) {
      const double c = coefficients[j];
      if (c == 0.0) continue;
      any = true;
      const double* col = &col_cos_[freqs_[j].second * width_];
      for (std::size_t x = 0; x < width_; ++x) row[x] += c * col[x];
    }
    if (!any) continue;
    const double* rc = &row_cos_[u * height_];
    for (std::size_t y = 0; y < height_; ++y) {
      double* dst = &plane[y * width_];
      for (std::size_t x = 0; x < width_; ++x) dst[x] += rc[y] * row[x];
    }
  }

  const double scale = 1.0 / std::sqrt(static_cast<double>(channels_));
  Point out(dim());
  for (std::size_t c = 0; c < channels_; ++c) {
    for (std::size_t k = 0; k < plane.size(); ++k) out[c * plane.size() + k] = scale * plane[k];
  }
  return out;
}

std::vector<Point> dct_basis(std::size_t height, std::size_t width, std::size_t channels,
                             std::size_t m) {
  const DctBasis basis(height, width, channels, m);
  std::vector<Point> out;
  out.reserve(m);
  for (std::size_t i = 0; i < m; ++i) out.push_back(basis.vector(i));
  return out;
}

}  // namespace geoda

#pragma once
//! \file
//! \brief Finite-dimensional (weighted) l^r norms, their duals, and linear
//! maps with covector pullback.
//!
//! A weighted norm with exponent r and weights w is |v| = |(w_i v_i)_i|_r.
//! Its dual is again weighted, with the conjugate exponent and weights 1/w_i.

#include "sdl/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdl {

class Norm {
 public:
  enum class Family { lr, weighted_lr };

  static Norm lr(std::size_t dimension, double r) {
    return Norm(Family::lr, r, std::vector<double>(dimension, 1.0));
  }

  static Norm weighted_lr(double r, std::vector<double> weights) {
    return Norm(Family::weighted_lr, r, std::move(weights));
  }

  std::size_t dimension() const { return weights_.size(); }
  Family family() const { return family_; }
  double exponent() const { return r_; }
  const std::vector<double>& weights() const { return weights_; }

  double operator()(std::span<const double> v) const {
    check_dimension(v.size());
    return weighted_lr_value(v, r_, weights_, false);
  }

  /// sup{<w, v> : |v| <= 1}, through the conjugate exponent.
  double dual(std::span<const double> omega) const {
    check_dimension(omega.size());
    return weighted_lr_value(omega, conjugate_exponent(r_), weights_, true);
  }

  Norm dual_norm() const {
    std::vector<double> inv(weights_.size());
    std::transform(weights_.begin(), weights_.end(), inv.begin(), [](double w) { return 1.0 / w; });
    return Norm(family_, conjugate_exponent(r_), std::move(inv));
  }

  friend bool operator==(const Norm&, const Norm&) = default;

 private:
  Norm(Family family, double r, std::vector<double> weights)
      : family_(family), r_(r), weights_(std::move(weights)) {
    if (weights_.empty()) throw std::invalid_argument("norm dimension must be positive");
    if (!(r_ >= 1.0)) throw std::invalid_argument("norm exponent must be >= 1");
    for (double w : weights_)
      if (!(w > 0.0) || !std::isfinite(w)) throw std::invalid_argument("norm weights must be positive and finite");
  }

  void check_dimension(std::size_t n) const {
    if (n != weights_.size())
      throw std::invalid_argument("dimension mismatch: norm has dimension " + std::to_string(weights_.size()) +
                                  ", vector has " + std::to_string(n));
  }

  static double weighted_lr_value(std::span<const double> v, double r, const std::vector<double>& w, bool invert) {
    auto coord = [&](std::size_t i) { return invert ? std::abs(v[i]) / w[i] : std::abs(v[i]) * w[i]; };
    double peak = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) peak = std::max(peak, coord(i));
    if (peak == 0.0 || std::isinf(r)) return peak;
    if (r == 1.0) {
      double s = 0.0;
      for (std::size_t i = 0; i < v.size(); ++i) s += coord(i);
      return s;
    }
    // Scaled by the peak coordinate to stay clear of overflow/underflow.
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) s += std::pow(coord(i) / peak, r);
    return peak * std::pow(s, 1.0 / r);
  }

  Family family_;
  double r_;
  std::vector<double> weights_;
};

inline double norm_eval(const Norm& norm, std::span<const double> v) { return norm(v); }

inline double dual_norm_eval(const Norm& norm, std::span<const double> omega) { return norm.dual(omega); }

inline double pairing(std::span<const double> omega, std::span<const double> v) {
  if (omega.size() != v.size()) throw std::invalid_argument("dimension mismatch in pairing");
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) s += omega[i] * v[i];
  return s;
}

/// Outcome of a 1-Lipschitz certification attempt.
struct LipschitzCertificate {
  double upper_bound = 0.0;    ///< rigorous bound on the operator norm
  double sampled = 0.0;        ///< largest ratio |p v| / |v| seen while sampling
  bool certified = false;
  bool by_bound = false;       ///< true when the rigorous bound alone suffices
};

/// Linear map between normed coordinate spaces; row-major matrix of shape
/// target x source.
class LinearMap {
 public:
  static constexpr double lipschitz_slack = 1e-9;

  LinearMap(std::vector<double> matrix, Norm source, Norm target)
      : matrix_(std::move(matrix)), source_(std::move(source)), target_(std::move(target)) {
    if (matrix_.size() != source_.dimension() * target_.dimension())
      throw std::invalid_argument("matrix size does not match source/target dimensions");
  }

  /// Builds the map and certifies it 1-Lipschitz; throws if certification fails.
  static LinearMap one_lipschitz(std::vector<double> matrix, Norm source, Norm target, std::size_t samples = 2000,
                                 std::uint64_t seed = 0) {
    LinearMap map(std::move(matrix), std::move(source), std::move(target));
    const auto cert = map.certify(samples, seed);
    if (!cert.certified)
      throw std::invalid_argument("map is not 1-Lipschitz (operator norm >= " + std::to_string(cert.sampled) + ")");
    map.one_lipschitz_checked_ = true;
    return map;
  }

  std::size_t source_dimension() const { return source_.dimension(); }
  std::size_t target_dimension() const { return target_.dimension(); }
  const Norm& source() const { return source_; }
  const Norm& target() const { return target_; }
  bool one_lipschitz_checked() const { return one_lipschitz_checked_; }
  double entry(std::size_t row, std::size_t col) const { return matrix_[row * source_dimension() + col]; }

  std::vector<double> apply(std::span<const double> v) const {
    if (v.size() != source_dimension()) throw std::invalid_argument("dimension mismatch in LinearMap::apply");
    std::vector<double> out(target_dimension(), 0.0);
    for (std::size_t i = 0; i < target_dimension(); ++i)
      for (std::size_t j = 0; j < source_dimension(); ++j) out[i] += entry(i, j) * v[j];
    return out;
  }

  /// omega o p, i.e. the transpose applied to omega.
  std::vector<double> pullback(std::span<const double> omega) const {
    if (omega.size() != target_dimension()) throw std::invalid_argument("dimension mismatch in pullback");
    std::vector<double> out(source_dimension(), 0.0);
    for (std::size_t i = 0; i < target_dimension(); ++i)
      for (std::size_t j = 0; j < source_dimension(); ++j) out[j] += entry(i, j) * omega[i];
    return out;
  }

  /// Rigorous upper bound on the operator norm. Two bounds, minimum taken:
  /// column bound |p v| <= sum_j |v_j| |p e_j| (Hoelder against the source
  /// weights), exact for l^1 sources; row bound for l^inf targets, exact.
  double operator_norm_upper_bound() const {
    const std::size_t n = source_dimension(), m = target_dimension();
    std::vector<double> col_norms(n), column(m);
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t i = 0; i < m; ++i) column[i] = entry(i, j);
      col_norms[j] = target_(column);
    }
    // |v_j| = |w_j v_j| / w_j, so sum_j |v_j| c_j <= |(c_j / w_j)|_{r'} |v|.
    double bound = source_.dual(col_norms);
    if (std::isinf(target_.exponent())) {
      double rows = 0.0;
      std::vector<double> row(n);
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) row[j] = entry(i, j);
        rows = std::max(rows, target_.weights()[i] * source_.dual(row));
      }
      bound = std::min(bound, rows);
    }
    return bound;
  }

  /// Largest |p v| / |v| over random directions, signed cube vertices and
  /// coordinate axes.
  double operator_norm_sampled(std::size_t samples, std::uint64_t seed) const {
    Rng rng(seed);
    const std::size_t n = source_dimension();
    std::vector<double> v(n);
    double best = 0.0;
    auto consider = [&] {
      const double nv = source_(v);
      if (nv > 0.0) best = std::max(best, target_(apply(v)) / nv);
    };
    for (std::size_t j = 0; j < n; ++j) {
      std::fill(v.begin(), v.end(), 0.0);
      v[j] = 1.0;
      consider();
    }
    for (std::size_t s = 0; s < samples; ++s) {
      for (auto& x : v) x = uniform(rng, -1.0, 1.0);
      if (s % 2 == 1)
        for (std::size_t j = 0; j < n; ++j) v[j] = (v[j] < 0 ? -1.0 : 1.0) / source_.weights()[j];
      consider();
    }
    return best;
  }

  LipschitzCertificate certify(std::size_t samples, std::uint64_t seed) const {
    LipschitzCertificate c;
    c.upper_bound = operator_norm_upper_bound();
    c.sampled = operator_norm_sampled(samples, seed);
    c.by_bound = c.upper_bound <= 1.0 + lipschitz_slack;
    c.certified = c.by_bound || c.sampled <= 1.0 + lipschitz_slack;
    return c;
  }

 private:
  std::vector<double> matrix_;
  Norm source_;
  Norm target_;
  bool one_lipschitz_checked_ = false;
};

inline std::vector<double> pullback_covector(const LinearMap& map, std::span<const double> omega) {
  return map.pullback(omega);
}

}  // namespace sdl

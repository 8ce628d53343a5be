#pragma once

#include <algorithm>
#include <vector>

#include "uam/error.hpp"
#include "uam/geometry.hpp"

namespace uam {

// Natural cubic spline through (t_n, y_n); second derivative vanishes at both ends.
class CubicSpline {
 public:
  CubicSpline() = default;

  CubicSpline(std::vector<double> t, std::vector<double> y) : t_(std::move(t)), y_(std::move(y)) {
    const std::size_t n = t_.size();
    if (n < 2 || y_.size() != n) throw DomainError("spline needs >= 2 matching knots");
    for (std::size_t i = 1; i < n; ++i)
      if (!(t_[i] > t_[i - 1])) throw DomainError("spline knots must be strictly increasing");
    m_.assign(n, 0.0);
    if (n == 2) return;

    // Tridiagonal system for interior second derivatives (Thomas algorithm).
    const std::size_t m = n - 2;
    std::vector<double> diag(m), upper(m), rhs(m);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double h0 = t_[i] - t_[i - 1];
      const double h1 = t_[i + 1] - t_[i];
      diag[i - 1] = 2.0 * (h0 + h1);
      upper[i - 1] = h1;
      rhs[i - 1] = 6.0 * ((y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0);
    }
    for (std::size_t i = 1; i < m; ++i) {
      const double lower = t_[i + 1] - t_[i];  // h of row i, equals upper[i-1]
      const double w = lower / diag[i - 1];
      diag[i] -= w * upper[i - 1];
      rhs[i] -= w * rhs[i - 1];
    }
    std::vector<double> sol(m);
    sol[m - 1] = rhs[m - 1] / diag[m - 1];
    for (std::size_t i = m - 1; i-- > 0;) sol[i] = (rhs[i] - upper[i] * sol[i + 1]) / diag[i];
    for (std::size_t i = 0; i < m; ++i) m_[i + 1] = sol[i];
  }

  double operator()(double x) const { return eval(x, 0); }
  double derivative(double x) const { return eval(x, 1); }
  double second_derivative(double x) const { return eval(x, 2); }

  // Same as above but evaluates a specific piece, for one-sided checks at knots.
  double eval_piece(std::size_t piece, double x, int order) const {
    const double h = t_[piece + 1] - t_[piece];
    const double a = (t_[piece + 1] - x) / h;
    const double b = (x - t_[piece]) / h;
    const double m0 = m_[piece], m1 = m_[piece + 1];
    const double y0 = y_[piece], y1 = y_[piece + 1];
    switch (order) {
      case 0:
        return a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
      case 1:
        return (y1 - y0) / h - (3.0 * a * a - 1.0) * h / 6.0 * m0 + (3.0 * b * b - 1.0) * h / 6.0 * m1;
      default:
        return a * m0 + b * m1;
    }
  }

  std::size_t piece_of(double x) const {
    const auto it = std::upper_bound(t_.begin(), t_.end(), x);
    std::size_t idx = it == t_.begin() ? 0 : static_cast<std::size_t>(it - t_.begin()) - 1;
    return std::min(idx, t_.size() - 2);
  }

  const std::vector<double>& knots() const { return t_; }

 private:
  double eval(double x, int order) const { return eval_piece(piece_of(x), x, order); }

  std::vector<double> t_, y_, m_;
};

// Spline through 3D points parameterised by cumulative chord length.
class ChordSpline3 {
 public:
  explicit ChordSpline3(const std::vector<Point3>& pts) {
    if (pts.size() < 2) throw DomainError("need >= 2 points");
    std::vector<double> t(pts.size(), 0.0), x, y, z;
    for (std::size_t n = 1; n < pts.size(); ++n) t[n] = t[n - 1] + distance(pts[n - 1], pts[n]);
    for (const auto& p : pts) {
      x.push_back(p.x);
      y.push_back(p.y);
      z.push_back(p.z);
    }
    sx_ = CubicSpline(t, x);
    sy_ = CubicSpline(t, y);
    sz_ = CubicSpline(t, std::move(z));
  }

  Point3 operator()(double s) const { return {sx_(s), sy_(s), sz_(s)}; }
  double length() const { return sx_.knots().back(); }
  const std::vector<double>& knots() const { return sx_.knots(); }
  const CubicSpline& axis(int a) const { return a == 0 ? sx_ : (a == 1 ? sy_ : sz_); }

 private:
  CubicSpline sx_, sy_, sz_;
};

}  // namespace uam

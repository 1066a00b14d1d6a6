#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "nlwm/radial_grid.hpp"

namespace nlwm {

enum class WeightKind { morawetz, virial };

/// A radial multiplier psi (or phi) with its radial derivatives, Laplacian and
/// bilaplacian. Every callable takes r >= 0 and must be finite at r = 0 for an
/// admissible weight (Laplacian(0) = n psi''(0) for smooth weights).
struct RadialWeight {
  std::string name;
  int n_dim = 3;
  WeightKind kind = WeightKind::morawetz;
  std::function<double(double)> eval;
  std::function<double(double)> d1;
  std::function<double(double)> d2;
  std::function<double(double)> laplacian;
  std::function<double(double)> bilaplacian;
  double d1_at_infinity = 0.0;
};

namespace detail {

inline std::string short_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

// Delta (1 + r^2)^a = 2 a n (1+r^2)^{a-1} + 4 a (a-1) r^2 (1+r^2)^{a-2}.
inline double laplacian_of_bracket_power(double r, double a, int n) {
  const double s = 1.0 + r * r;
  return 2.0 * a * n * std::pow(s, a - 1.0) + 4.0 * a * (a - 1.0) * r * r * std::pow(s, a - 2.0);
}

}  // namespace detail

/// psi = <x> = sqrt(1 + r^2), closed form throughout.
inline RadialWeight weight_bracket(int n_dim) {
  if (n_dim < 3) throw std::invalid_argument("weight_bracket: n_dim < 3");
  RadialWeight w;
  w.name = "bracket";
  w.n_dim = n_dim;
  w.kind = WeightKind::morawetz;
  w.eval = [](double r) { return std::sqrt(1.0 + r * r); };
  w.d1 = [](double r) { return r / std::sqrt(1.0 + r * r); };
  w.d2 = [](double r) { return std::pow(1.0 + r * r, -1.5); };
  w.laplacian = [n_dim](double r) {
    const double s = 1.0 + r * r;
    return std::pow(s, -1.5) + (n_dim - 1) / std::sqrt(s);
  };
  w.bilaplacian = [n_dim](double r) {
    return detail::laplacian_of_bracket_power(r, -1.5, n_dim) +
           (n_dim - 1) * detail::laplacian_of_bracket_power(r, -0.5, n_dim);
  };
  w.d1_at_infinity = 1.0;
  return w;
}

/// sqrt(eps^2 + r^2) = eps <r/eps>: the classical |x| multiplier, smoothed at the origin.
inline RadialWeight weight_smoothed_abs(int n_dim, double eps = 1e-3) {
  if (!(eps > 0.0)) throw std::invalid_argument("weight_smoothed_abs: eps must be positive");
  const RadialWeight b = weight_bracket(n_dim);
  RadialWeight w;
  w.name = "smoothed_abs";
  w.n_dim = n_dim;
  w.kind = WeightKind::morawetz;
  w.eval = [b, eps](double r) { return eps * b.eval(r / eps); };
  w.d1 = [b, eps](double r) { return b.d1(r / eps); };
  w.d2 = [b, eps](double r) { return b.d2(r / eps) / eps; };
  w.laplacian = [b, eps](double r) { return b.laplacian(r / eps) / eps; };
  w.bilaplacian = [b, eps](double r) { return b.bilaplacian(r / eps) / (eps * eps * eps); };
  w.d1_at_infinity = 1.0;
  return w;
}

/// Unsmoothed psi = |x|. Its Laplacian (n-1)/r is unbounded at the origin, so it
/// fails the Morawetz hypothesis audit.
inline RadialWeight weight_abs(int n_dim) {
  RadialWeight w;
  w.name = "abs";
  w.n_dim = n_dim;
  w.kind = WeightKind::morawetz;
  w.eval = [](double r) { return r; };
  w.d1 = [](double) { return 1.0; };
  w.d2 = [](double) { return 0.0; };
  w.laplacian = [n_dim](double r) { return (n_dim - 1) / r; };
  w.bilaplacian = [n_dim](double r) { return (n_dim - 1.0) * (n_dim - 3.0) / (r * r * r); };
  w.d1_at_infinity = 1.0;
  return w;
}

/// psi = c. Every derivative vanishes.
inline RadialWeight weight_constant(int n_dim, double c = 1.0) {
  RadialWeight w;
  w.name = "constant";
  w.n_dim = n_dim;
  w.kind = WeightKind::morawetz;
  w.eval = [c](double) { return c; };
  w.d1 = w.d2 = w.laplacian = w.bilaplacian = [](double) { return 0.0; };
  w.d1_at_infinity = 0.0;
  return w;
}

/// C^infinity step on [0, 1]: 1 at 0, 0 at 1, flat to all orders at both ends.
/// sigma(x) = 1 / (1 + exp(q(x))) with q(x) = 1/(1-x) - 1/x.
struct SmoothStep {
  /// Value and first three derivatives.
  static std::array<double, 4> eval(double x) {
    if (x <= 0.0) return {1.0, 0.0, 0.0, 0.0};
    if (x >= 1.0) return {0.0, 0.0, 0.0, 0.0};
    const double a = 1.0 / x;
    const double b = 1.0 / (1.0 - x);
    const double z = b - a;
    // p = 1/(1+e^z), pc = 1 - p, both computed without cancellation.
    double p, pc;
    if (z > 0.0) {
      const double e = std::exp(-z);
      p = e / (1.0 + e);
      pc = 1.0 / (1.0 + e);
    } else {
      const double e = std::exp(z);
      p = 1.0 / (1.0 + e);
      pc = e / (1.0 + e);
    }
    const double pz = -p * pc;
    const double pzz = p * pc * (1.0 - 2.0 * p);
    const double pzzz = pz * (1.0 - 6.0 * p + 6.0 * p * p);
    const double q1 = b * b + a * a;
    const double q2 = 2.0 * b * b * b - 2.0 * a * a * a;
    const double q3 = 6.0 * std::pow(b, 4) + 6.0 * std::pow(a, 4);
    const double s1 = pz * q1;
    const double s2 = pzz * q1 * q1 + pz * q2;
    const double s3 = pzzz * q1 * q1 * q1 + 3.0 * pzz * q1 * q2 + pz * q3;
    auto finite = [](double v) { return std::isfinite(v) ? v : 0.0; };
    return {p, finite(s1), finite(s2), finite(s3)};
  }
};

namespace detail {

// Cumulative integrals I0(x) = int_0^x sigma, I1(x) = int_0^x y sigma(y) dy on a
// fine table, interpolated by cubic Hermite with the exact integrand as slope.
class StepMoments {
 public:
  static const StepMoments& instance() {
    static const StepMoments table;
    return table;
  }

  double i0(double x) const { return interp(x, i0_, 0); }
  double i1(double x) const { return interp(x, i1_, 1); }

 private:
  static constexpr std::size_t kCells = 4096;

  StepMoments() : i0_(kCells + 1, 0.0), i1_(kCells + 1, 0.0) {
    using boost::math::quadrature::gauss;
    const double h = 1.0 / kCells;
    for (std::size_t c = 0; c < kCells; ++c) {
      const double a = c * h, b = a + h;
      i0_[c + 1] = i0_[c] + gauss<double, 15>::integrate(
                                [](double y) { return SmoothStep::eval(y)[0]; }, a, b);
      i1_[c + 1] = i1_[c] + gauss<double, 15>::integrate(
                                [](double y) { return y * SmoothStep::eval(y)[0]; }, a, b);
    }
  }

  double interp(double x, const std::vector<double>& tab, int moment) const {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return tab.back();
    const double h = 1.0 / kCells;
    const std::size_t c = std::min<std::size_t>(static_cast<std::size_t>(x / h), kCells - 1);
    const double x0 = c * h, x1 = x0 + h;
    const double s = (x - x0) / h;
    auto slope = [moment](double y) {
      const double v = SmoothStep::eval(y)[0];
      return moment == 0 ? v : y * v;
    };
    const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
    const double h10 = s * (1 - s) * (1 - s);
    const double h01 = s * s * (3 - 2 * s);
    const double h11 = s * s * (s - 1);
    return h00 * tab[c] + h10 * h * slope(x0) + h01 * tab[c + 1] + h11 * h * slope(x1);
  }

  std::vector<double> i0_;
  std::vector<double> i1_;
};

}  // namespace detail

/// Cutoff h_k (1 on |r| < 1, 0 on |r| > (k+1)/k, even) with its primitives
/// H_k = int_0^r h_k and psi_k = int_0^r (r - s) h_k(s) ds.
class CutoffFamily {
 public:
  explicit CutoffFamily(int k) : k_(k) {
    if (k <= 0) throw std::invalid_argument("cutoff_family: k must be positive");
    width_ = 1.0 / k;
    const auto& m = detail::StepMoments::instance();
    mass_ = 1.0 + width_ * m.i0(1.0);
    first_moment_ = 0.5 + width_ * (m.i0(1.0) + width_ * m.i1(1.0));
  }

  int k() const { return k_; }
  double outer() const { return 1.0 + width_; }
  double mass() const { return mass_; }

  /// h_k and its first three derivatives at r (any sign; h is even).
  std::array<double, 4> h_derivs(double r) const {
    const double a = std::abs(r);
    if (a <= 1.0) return {1.0, 0.0, 0.0, 0.0};
    if (a >= outer()) return {0.0, 0.0, 0.0, 0.0};
    auto s = SmoothStep::eval((a - 1.0) / width_);
    const double sign = r < 0 ? -1.0 : 1.0;
    const double w = width_;
    return {s[0], sign * s[1] / w, s[2] / (w * w), sign * s[3] / (w * w * w)};
  }

  double h(double r) const { return h_derivs(r)[0]; }

  double H(double r) const {
    const double a = std::abs(r);
    const double sign = r < 0 ? -1.0 : 1.0;
    if (a <= 1.0) return r;
    if (a >= outer()) return sign * mass_;
    const double x = (a - 1.0) / width_;
    return sign * (1.0 + width_ * detail::StepMoments::instance().i0(x));
  }

  /// int_0^|r| s h(s) ds.
  double first_moment(double r) const {
    const double a = std::abs(r);
    if (a <= 1.0) return 0.5 * a * a;
    if (a >= outer()) return first_moment_;
    const auto& m = detail::StepMoments::instance();
    const double x = (a - 1.0) / width_;
    return 0.5 + width_ * (m.i0(x) + width_ * m.i1(x));
  }

  double psi(double r) const {
    const double a = std::abs(r);
    if (a <= 1.0) return 0.5 * r * r;
    return a * H(a) - first_moment(a);
  }

  /// Delta psi_k = h + (n-1) H / r and Delta^2 psi_k, radial form, r >= 0.
  double laplacian(double r, int n) const {
    if (r <= 1.0) return static_cast<double>(n);
    return h(r) + (n - 1) * H(r) / r;
  }

  double bilaplacian(double r, int n) const {
    if (r <= 1.0) return 0.0;
    const auto hd = h_derivs(r);
    const double Hr = H(r);
    const double r2 = r * r, r3 = r2 * r;
    const double L1 = hd[1] + (n - 1) * (hd[0] / r - Hr / r2);
    const double L2 = hd[2] + (n - 1) * (hd[1] / r - 2.0 * hd[0] / r2 + 2.0 * Hr / r3);
    return L2 + (n - 1) * L1 / r;
  }

  /// Delta h_k, used by the virial cutoff.
  double laplacian_h(double r, int n) const {
    if (r <= 1.0) return 0.0;
    const auto hd = h_derivs(r);
    return hd[2] + (n - 1) * hd[1] / r;
  }

 private:
  int k_;
  double width_;
  double mass_;
  double first_moment_;
};

inline CutoffFamily cutoff_family(int k) { return CutoffFamily(k); }

/// psi_{k,R}(x) = R psi_k(x / R).
inline RadialWeight rescale_morawetz(const CutoffFamily& fam, double R, int n_dim) {
  if (!(R > 0.0)) throw std::invalid_argument("rescale_morawetz: R must be positive");
  RadialWeight w;
  w.name = "psi_k" + std::to_string(fam.k()) + "_R" + detail::short_real(R);
  w.n_dim = n_dim;
  w.kind = WeightKind::morawetz;
  w.eval = [fam, R](double r) { return R * fam.psi(r / R); };
  w.d1 = [fam, R](double r) { return fam.H(r / R); };
  w.d2 = [fam, R](double r) { return fam.h(r / R) / R; };
  w.laplacian = [fam, R, n_dim](double r) { return fam.laplacian(r / R, n_dim) / R; };
  w.bilaplacian = [fam, R, n_dim](double r) {
    return fam.bilaplacian(r / R, n_dim) / (R * R * R);
  };
  w.d1_at_infinity = fam.mass();
  return w;
}

/// phi_{k,R}(x) = (1/R) h_k(x / R): plateau 1/R on B_R, zero beyond (k+1)R/k.
inline RadialWeight rescale_virial(const CutoffFamily& fam, double R, int n_dim) {
  if (!(R > 0.0)) throw std::invalid_argument("rescale_virial: R must be positive");
  RadialWeight w;
  w.name = "phi_k" + std::to_string(fam.k()) + "_R" + detail::short_real(R);
  w.n_dim = n_dim;
  w.kind = WeightKind::virial;
  w.eval = [fam, R](double r) { return fam.h(r / R) / R; };
  w.d1 = [fam, R](double r) { return fam.h_derivs(r / R)[1] / (R * R); };
  w.d2 = [fam, R](double r) { return fam.h_derivs(r / R)[2] / (R * R * R); };
  w.laplacian = [fam, R, n_dim](double r) { return fam.laplacian_h(r / R, n_dim) / (R * R * R); };
  w.bilaplacian = [](double) { return std::numeric_limits<double>::quiet_NaN(); };
  w.d1_at_infinity = 0.0;
  return w;
}

/// Weight values sampled on grid nodes; what the hot accumulator loops read.
struct WeightSamples {
  Field eval, d1, d2, laplacian, bilaplacian;
  double d1_at_infinity = 0.0;
};

inline WeightSamples sample_weight(const RadialWeight& w, const RadialGrid& grid) {
  WeightSamples s;
  s.eval = grid.sample(w.eval);
  s.d1 = grid.sample(w.d1);
  s.d2 = grid.sample(w.d2);
  s.laplacian = grid.sample(w.laplacian);
  if (w.kind == WeightKind::morawetz) s.bilaplacian = grid.sample(w.bilaplacian);
  s.d1_at_infinity = w.d1_at_infinity;
  return s;
}

/// Outcome of checking a weight against the boundedness hypotheses of the
/// Morawetz identity (<r> Delta psi, Delta^2 psi, psi'' bounded) or of the
/// virial identity (Delta phi, <r> phi bounded).
struct AuditReport {
  bool pass = false;
  std::string reason;
  double sup_bracket_laplacian = 0.0;  // morawetz: sup |<r> Delta psi|
  double sup_bilaplacian = 0.0;        // morawetz: sup |Delta^2 psi|
  double sup_d2 = 0.0;                 // morawetz: sup |psi''|
  double sup_laplacian = 0.0;          // virial: sup |Delta phi|
  double sup_bracket_eval = 0.0;       // virial: sup |<r> phi|
  double d1_limit_gap = 0.0;           // |psi'(r_max) - psi'(inf)|
};

class HypothesisError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

// Samples r = 0 and a log-spaced ladder over [1e-6, 1e8]; every quantity must be
// finite and must not grow between the decades [1e5, 1e6] and [1e7, 1e8].
inline bool bounded_on(const std::function<double(double)>& q, double& sup, std::string& why,
                       const std::string& label) {
  sup = 0.0;
  constexpr int kSamples = 1400;
  std::vector<double> rs{0.0};
  const double lo = std::log(1e-6), hi = std::log(1e8);
  for (int i = 0; i <= kSamples; ++i) rs.push_back(std::exp(lo + (hi - lo) * i / kSamples));
  double sup_mid = 0.0, sup_far = 0.0;
  for (double r : rs) {
    const double v = q(r);
    if (!std::isfinite(v)) {
      why = label + " is not finite at r = " + std::to_string(r);
      return false;
    }
    sup = std::max(sup, std::abs(v));
    if (r >= 1e5 && r <= 1e6) sup_mid = std::max(sup_mid, std::abs(v));
    if (r >= 1e7) sup_far = std::max(sup_far, std::abs(v));
  }
  if (sup_far > 1.5 * sup_mid + 1e-12) {
    why = label + " grows without bound (" + std::to_string(sup_mid) + " -> " +
          std::to_string(sup_far) + ")";
    return false;
  }
  return true;
}

}  // namespace detail

inline AuditReport audit_morawetz(const RadialWeight& w, double r_max) {
  AuditReport a;
  std::string why;
  const bool ok =
      detail::bounded_on([&](double r) { return std::sqrt(1 + r * r) * w.laplacian(r); },
                         a.sup_bracket_laplacian, why, "<r> laplacian") &&
      detail::bounded_on(w.bilaplacian, a.sup_bilaplacian, why, "bilaplacian") &&
      detail::bounded_on(w.d2, a.sup_d2, why, "d2");
  a.d1_limit_gap = std::abs(w.d1(r_max) - w.d1_at_infinity);
  a.pass = ok && w.kind == WeightKind::morawetz;
  a.reason = ok ? (a.pass ? "" : "weight is not of morawetz kind") : why;
  return a;
}

inline AuditReport audit_virial(const RadialWeight& w) {
  AuditReport a;
  std::string why;
  const bool ok = detail::bounded_on(w.laplacian, a.sup_laplacian, why, "laplacian") &&
                  detail::bounded_on([&](double r) { return std::sqrt(1 + r * r) * w.eval(r); },
                                     a.sup_bracket_eval, why, "<r> eval");
  a.pass = ok;
  a.reason = why;
  return a;
}

inline void require_morawetz(const RadialWeight& w, double r_max) {
  const auto a = audit_morawetz(w, r_max);
  if (!a.pass) throw HypothesisError("weight '" + w.name + "' fails Morawetz audit: " + a.reason);
}

inline void require_virial(const RadialWeight& w) {
  const auto a = audit_virial(w);
  if (!a.pass) throw HypothesisError("weight '" + w.name + "' fails virial audit: " + a.reason);
}

}  // namespace nlwm

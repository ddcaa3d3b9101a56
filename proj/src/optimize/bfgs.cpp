#include "fluctsel/optimize/bfgs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fluctsel/core/error.hpp"

namespace fluctsel {

namespace {

struct Point {
  double a = 0.0;
  double f = 0.0;
  double d = 0.0;  // directional derivative
  Eigen::VectorXd g;
};

/// Minimizer of the cubic through (a, fa, da) and (b, fb, db); falls back
/// to bisection when the cubic is degenerate or lands outside the bracket.
double cubic_min(const Point& lo, const Point& hi) {
  const double a = lo.a, b = hi.a;
  const double d1 = lo.d + hi.d - 3.0 * (lo.f - hi.f) / (a - b);
  const double disc = d1 * d1 - lo.d * hi.d;
  double x = 0.5 * (a + b);
  if (disc >= 0.0 && std::isfinite(hi.f)) {
    const double d2 = std::copysign(std::sqrt(disc), b - a);
    const double denom = hi.d - lo.d + 2.0 * d2;
    if (denom != 0.0) x = b - (b - a) * (hi.d + d2 - d1) / denom;
  }
  const double lo_b = std::min(a, b), hi_b = std::max(a, b);
  const double margin = 0.1 * (hi_b - lo_b);
  if (!std::isfinite(x) || x < lo_b + margin || x > hi_b - margin) x = 0.5 * (a + b);
  return x;
}

}  // namespace

BfgsResult bfgs_minimize(const Objective& fun, const Eigen::VectorXd& x0, const BfgsOptions& opt) {
  const Eigen::Index n = x0.size();
  BfgsResult r;
  r.x = x0;
  r.grad.resize(n);
  r.f = fun(r.x, &r.grad);
  r.evaluations = 1;
  if (!std::isfinite(r.f) || !r.grad.allFinite())
    fail(Errc::NonFiniteValue, "bfgs: objective not finite at the starting point");
  Eigen::MatrixXd hinv = Eigen::MatrixXd::Identity(n, n);
  bool scaled = false;

  auto eval = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& dir, double a) {
    Point p;
    p.a = a;
    p.g.resize(n);
    p.f = fun(x + a * dir, &p.g);
    ++r.evaluations;
    if (!std::isfinite(p.f) || !p.g.allFinite()) {
      p.f = std::numeric_limits<double>::infinity();
      p.d = std::numeric_limits<double>::quiet_NaN();
    } else {
      p.d = p.g.dot(dir);
    }
    return p;
  };

  for (r.iterations = 0; r.iterations < opt.max_iter; ++r.iterations) {
    if (r.grad.cwiseAbs().maxCoeff() < opt.gtol) {
      r.converged = true;
      r.reason = "gradient";
      return r;
    }
    Eigen::VectorXd dir = -hinv * r.grad;
    double d0 = r.grad.dot(dir);
    if (!(d0 < 0.0)) {
      hinv.setIdentity();
      scaled = false;
      dir = -r.grad;
      d0 = r.grad.dot(dir);
    }
    const Point p0{0.0, r.f, d0, r.grad};
    // Armijo, or the approximate-Wolfe test when f differences are roundoff
    const double eps_f = 1e-11 * std::max(1.0, std::abs(r.f));
    auto sufficient = [&](const Point& p) {
      if (!std::isfinite(p.f)) return false;
      if (p.f <= p0.f + opt.c1 * p.a * d0) return true;
      return p.f <= p0.f + eps_f && p.d <= -0.8 * d0;
    };
    double a1 = 1.0;
    if (!scaled) a1 = std::min(1.0, 1.0 / r.grad.cwiseAbs().maxCoeff());

    // strong-Wolfe search
    Point prev = p0, cur, best;
    bool found = false;
    auto zoom = [&](Point lo, Point hi) {
      for (int k = 0; k < 40; ++k) {
        const double a = cubic_min(lo, hi);
        Point p = eval(r.x, dir, a);
        if (!sufficient(p) || p.f >= lo.f + eps_f) {
          hi = p;
        } else {
          if (std::abs(p.d) <= -opt.c2 * d0) {
            best = p;
            return true;
          }
          if (p.d * (hi.a - lo.a) >= 0.0) hi = lo;
          lo = p;
        }
        if (std::abs(hi.a - lo.a) < 1e-16 * std::max(1.0, lo.a)) break;
      }
      // accept any sufficient-decrease point found
      if (lo.a > 0.0 && sufficient(lo)) {
        best = lo;
        return true;
      }
      return false;
    };
    double a = a1;
    for (int k = 0; k < 60; ++k) {
      cur = eval(r.x, dir, a);
      if (!sufficient(cur) || (k > 0 && cur.f >= prev.f + eps_f)) {
        found = zoom(prev, cur);
        break;
      }
      if (std::abs(cur.d) <= -opt.c2 * d0) {
        best = cur;
        found = true;
        break;
      }
      if (cur.d >= 0.0) {
        found = zoom(cur, prev);
        break;
      }
      prev = cur;
      a *= 2.0;
    }
    if (!found) {
      if (scaled) {
        // retry from steepest descent before giving up
        hinv.setIdentity();
        scaled = false;
        continue;
      }
      fail(Errc::LineSearchFailure, "bfgs: line search found no acceptable step");
    }

    const Eigen::VectorXd s = best.a * dir;
    const Eigen::VectorXd y = best.g - r.grad;
    const double f_old = r.f;
    r.x += s;
    r.f = best.f;
    r.grad = best.g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (!scaled) {
        hinv = (sy / y.squaredNorm()) * Eigen::MatrixXd::Identity(n, n);
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n) - rho * s * y.transpose();
      hinv = v * hinv * v.transpose() + rho * s * s.transpose();
    }
    if (std::abs(f_old - r.f) <= opt.ftol * std::max(1.0, std::abs(r.f)) &&
        r.grad.cwiseAbs().maxCoeff() < opt.ftol_gmax) {
      ++r.iterations;
      r.converged = true;
      r.reason = r.grad.cwiseAbs().maxCoeff() < opt.gtol ? "gradient" : "relative change";
      return r;
    }
  }
  if (r.grad.cwiseAbs().maxCoeff() < opt.gtol) {
    r.converged = true;
    r.reason = "gradient";
    return r;
  }
  fail(Errc::MaxIterations, "bfgs: iteration limit reached");
}

}  // namespace fluctsel

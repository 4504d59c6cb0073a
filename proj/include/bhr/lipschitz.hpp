#pragma once

// Special Lipschitz domains { x_N > phi(x') } in a local orthonormal frame,
// the signed distance (closed form where available, grid search with local
// refinement otherwise), and the fixed-point regularized distance with its
// vertical-slope diagnostics.

#include "bhr/grid.hpp"

#include <optional>

namespace bhr {

// local = rot * (world - origin); world = origin + rot^T * local
struct Frame {
  Mat rot;
  Vec origin;

  static Frame identity(int n) { return Frame{Mat::Identity(n, n), Vec::Zero(n)}; }
  Vec to_local(const Vec& x) const { return rot * (x - origin); }
  Vec to_world(const Vec& y) const { return origin + rot.transpose() * y; }
  // world direction of the local vertical axis e_N
  Vec vertical_world() const { return rot.row(rot.rows() - 1).transpose(); }
};

class SpecialLipschitzDomain {
 public:
  // phi maps R^{N-1} (local horizontal coords) to R; empty argument for N = 1
  SpecialLipschitzDomain(int n, Frame frame, std::function<double(const Vec&)> phi, double lip)
      : n_(n), frame_(std::move(frame)), phi_(std::move(phi)), lip_(lip) {}

  int dim() const { return n_; }
  double lipschitz_constant() const { return lip_; }
  const Frame& frame() const { return frame_; }

  double boundary_height(const Vec& xprime) const { return phi_(xprime); }

  bool inside(const Vec& x_world) const {
    Vec y = frame_.to_local(x_world);
    return y[n_ - 1] > phi_(y.head(n_ - 1));
  }

  // signed distance: positive outside, negative inside
  double signed_distance(const Vec& x_world) const {
    Vec y = frame_.to_local(x_world);
    if (exact_d_) return (*exact_d_)(y);
    return numeric_signed_distance(y);
  }
  bool has_exact_distance() const { return exact_d_.has_value(); }
  void set_exact_distance(std::function<double(const Vec&)> d) { exact_d_ = std::move(d); }

  std::optional<std::function<double(const Vec&)>> exact_rho;  // local coords, when known

  // certified Lipschitz bound check on sampled pairs (throws on violation)
  void verify_lipschitz(const Box& horizontal_window, int samples = 200, uint64_t seed = 2) const {
    if (n_ == 1) return;
    Rng rng(seed);
    for (int s = 0; s < samples; ++s) {
      Vec a(n_ - 1), b(n_ - 1);
      for (int i = 0; i < n_ - 1; ++i) {
        a[i] = uniform(rng, horizontal_window.lo[i], horizontal_window.hi[i]);
        b[i] = uniform(rng, horizontal_window.lo[i], horizontal_window.hi[i]);
      }
      double dist = (a - b).norm();
      if (dist < 1e-12) continue;
      if (std::abs(phi_(a) - phi_(b)) > lip_ * dist * (1.0 + 1e-9))
        throw std::runtime_error("SpecialLipschitzDomain: Lipschitz constant violated on samples");
    }
  }

  // grid minimization of |x - (y', phi(y'))| with local refinement; the
  // search window widens when the minimizer lands on its edge
  double numeric_signed_distance(const Vec& y_local) const {
    double xn = y_local[n_ - 1];
    if (n_ == 1) {
      Vec empty(0);
      double c = phi_(empty);
      return xn > c ? -(xn - c) : c - xn;
    }
    Vec xp = y_local.head(n_ - 1);
    double vertical = xn - phi_(xp);
    double radius = std::abs(vertical) * (1.0 + lip_) + 1e-9;
    double best = std::abs(vertical);
    for (int widen = 0; widen < 6; ++widen) {
      Vec center = xp;
      double r = radius;
      int edge_hits = 0;
      for (int round = 0; round < 12; ++round) {
        const int pts = 33;
        double best_local = std::numeric_limits<double>::infinity();
        Vec best_y = center;
        bool on_edge = false;
        // N <= 2 here: one horizontal coordinate
        for (int i = 0; i < pts; ++i) {
          Vec yp(1);
          yp[0] = center[0] - r + 2.0 * r * i / (pts - 1);
          double dz = phi_(yp) - xn;
          double dd = std::sqrt((yp - xp).squaredNorm() + dz * dz);
          if (dd < best_local) {
            best_local = dd;
            best_y = yp;
            on_edge = (i == 0 || i == pts - 1);
          }
        }
        center = best_y;
        best = std::min(best, best_local);
        if (on_edge) {
          ++edge_hits;
          break;
        }
        r *= 0.15;
        if (r < 1e-13 * (1.0 + xp.norm())) break;
      }
      if (edge_hits == 0) break;
      radius *= 2.0;
    }
    return vertical > 0.0 ? -best : best;
  }

 private:
  int n_;
  Frame frame_;
  std::function<double(const Vec&)> phi_;
  double lip_;
  std::optional<std::function<double(const Vec&)>> exact_d_;
};

// { x_N > c } with an optional frame; distance and rho are exact
inline SpecialLipschitzDomain make_half_space(int n, double c = 0.0,
                                              Frame frame = Frame{Mat(), Vec()}) {
  if (frame.rot.size() == 0) frame = Frame::identity(n);
  SpecialLipschitzDomain dom(n, std::move(frame), [c](const Vec&) { return c; }, 0.0);
  dom.set_exact_distance([c, n](const Vec& y) { return -(y[n - 1] - c); });
  // even mollifier profile: the vertical term integrates to zero, so the
  // fixed point is the signed distance itself
  dom.exact_rho = [c, n](const Vec& y) { return -(y[n - 1] - c); };
  return dom;
}

// wedge { x_2 > L |x_1| } (local frame), closed-form distance
inline SpecialLipschitzDomain make_wedge(double lip, Frame frame = Frame{Mat(), Vec()}) {
  if (frame.rot.size() == 0) frame = Frame::identity(2);
  SpecialLipschitzDomain dom(
      2, std::move(frame), [lip](const Vec& xp) { return lip * std::abs(xp[0]); }, lip);
  dom.set_exact_distance([lip](const Vec& y) {
    double s = y[0], t = y[1];
    double denom = std::sqrt(1.0 + lip * lip);
    // distance to the two rays t = +/- lip * s (s >= 0 / s <= 0) and the apex
    auto ray_dist = [&](double sign) {
      // ray direction (sign, lip)/denom
      double proj = (sign * s + lip * t) / denom;
      if (proj <= 0.0) return std::hypot(s, t);
      double perp = std::abs(-lip * sign * s + t) / denom;
      return perp;
    };
    double dist = std::min(ray_dist(1.0), ray_dist(-1.0));
    bool in = t > lip * std::abs(s);
    return in ? -dist : dist;
  });
  return dom;
}

// open quadrant { (x - apex) . dir1 > 0 and (x - apex) . dir2 > 0 } as the
// wedge of constant 1 in the 45-degree frame; closed-form distance
inline SpecialLipschitzDomain make_quadrant(const Vec& apex, const Vec& dir1, const Vec& dir2) {
  Frame fr;
  fr.origin = apex;
  fr.rot = Mat(2, 2);
  Vec e1 = (dir2 - dir1) / std::sqrt(2.0);
  Vec en = (dir1 + dir2) / std::sqrt(2.0);
  fr.rot.row(0) = e1.transpose();
  fr.rot.row(1) = en.transpose();
  SpecialLipschitzDomain dom(2, fr, [](const Vec& xp) { return std::abs(xp[0]); }, 1.0);
  dom.set_exact_distance([](const Vec& y) {
    // local (xi, eta): region is eta > |xi|; equivalent quadrant coords:
    double p = (y[1] - y[0]) / std::sqrt(2.0);
    double q = (y[1] + y[0]) / std::sqrt(2.0);
    if (p > 0.0 && q > 0.0) return -std::min(p, q);
    if (p <= 0.0 && q >= 0.0) return -p;
    if (q <= 0.0 && p >= 0.0) return -q;
    return std::hypot(p, q);
  });
  return dom;
}

// phi given as a piecewise-linear table over [t0, t1]; L certified from the
// table slopes
inline SpecialLipschitzDomain make_from_table(const std::vector<double>& ts,
                                              const std::vector<double>& phis) {
  if (ts.size() != phis.size() || ts.size() < 2)
    throw std::invalid_argument("make_from_table: need >= 2 samples");
  double lip = 0.0;
  for (size_t i = 0; i + 1 < ts.size(); ++i) {
    if (ts[i + 1] <= ts[i]) throw std::invalid_argument("make_from_table: abscissae must increase");
    lip = std::max(lip, std::abs(phis[i + 1] - phis[i]) / (ts[i + 1] - ts[i]));
  }
  auto tcopy = ts;
  auto pcopy = phis;
  auto phi = [tcopy, pcopy](const Vec& xp) {
    double t = xp[0];
    if (t <= tcopy.front()) return pcopy.front();
    if (t >= tcopy.back()) return pcopy.back();
    size_t hi = static_cast<size_t>(std::upper_bound(tcopy.begin(), tcopy.end(), t) - tcopy.begin());
    double lam = (t - tcopy[hi - 1]) / (tcopy[hi] - tcopy[hi - 1]);
    return (1.0 - lam) * pcopy[hi - 1] + lam * pcopy[hi];
  };
  return SpecialLipschitzDomain(2, Frame::identity(2), phi, lip);
}

// ---- regularized distance -------------------------------------------------

struct RhoDiagnostics {
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

class RegularizedDistance {
 public:
  explicit RegularizedDistance(const SpecialLipschitzDomain& dom, double tol = 1e-10)
      : dom_(&dom), tol_(tol) {
    build_ball_quadrature(dom.dim());
  }

  double tolerance() const { return tol_; }

  // G(x, t) = integral over the unit ball of d(x - (t/2) z) phi(z) dz; the
  // quadrature weights sum to one, so |G(x,t) - G(x,s)| <= |t-s|/2 holds at
  // the discrete level and the fixed point contracts
  double g(const Vec& x_world, double t) const {
    double s = 0.0;
    for (const auto& [z, w] : quad_) s += w * dom_->signed_distance(x_world - (t / 2.0) * z);
    return s;
  }

  double rho(const Vec& x_world, RhoDiagnostics* diag = nullptr) const {
    if (dom_->exact_rho) {
      double v = (*dom_->exact_rho)(dom_->frame().to_local(x_world));
      if (diag) *diag = {0.0, 0, true};
      return v;
    }
    double t = dom_->signed_distance(x_world);
    double res = std::numeric_limits<double>::infinity();
    int it = 0;
    for (; it < 30; ++it) {
      double t_next = g(x_world, t);
      res = std::abs(t_next - t);
      t = t_next;
      if (res < tol_) break;
    }
    if (diag) *diag = {res, it + 1, res < tol_};
    return t;
  }

  double operator()(const Vec& x_world) const { return rho(x_world); }

  // central finite-difference slope along the local vertical axis
  double vertical_slope(const Vec& x_world, double h = 1e-5) const {
    Vec en = dom_->frame().vertical_world();
    return (rho(x_world + h * en) - rho(x_world - h * en)) / (2.0 * h);
  }

  Vec gradient(const Vec& x_world, double h = 1e-5) const {
    int n = dom_->dim();
    Vec g(n);
    for (int i = 0; i < n; ++i) {
      Vec e = Vec::Zero(n);
      e[i] = h;
      g[i] = (rho(x_world + e) - rho(x_world - e)) / (2.0 * h);
    }
    return g;
  }

  const SpecialLipschitzDomain& domain() const { return *dom_; }

 private:
  void build_ball_quadrature(int n) {
    const Quadrature1D& gl = gauss_legendre(12);
    if (n == 1) {
      const Quadrature1D& q16 = gauss_legendre(16);
      for (size_t i = 0; i < q16.nodes.size(); ++i) {
        Vec z(1);
        z[0] = q16.nodes[i];
        quad_.emplace_back(z, q16.weights[i] * bump_raw(z[0] * z[0]));
      }
    } else if (n == 2) {
      int nang = 12;
      for (size_t i = 0; i < gl.nodes.size(); ++i) {
        double r = 0.5 * (gl.nodes[i] + 1.0);  // map to [0,1]
        double wr = 0.5 * gl.weights[i] * r;
        for (int j = 0; j < nang; ++j) {
          double th = 2.0 * M_PI * (j + 0.5) / nang;
          Vec z(2);
          z[0] = r * std::cos(th);
          z[1] = r * std::sin(th);
          quad_.emplace_back(z, wr * (2.0 * M_PI / nang) * bump_raw(r * r));
        }
      }
    } else {
      throw std::invalid_argument("RegularizedDistance: dim must be 1 or 2");
    }
    double wsum = 0.0;
    for (auto& [z, w] : quad_) wsum += w;
    for (auto& [z, w] : quad_) w /= wsum;
  }

  const SpecialLipschitzDomain* dom_;
  double tol_;
  std::vector<std::pair<Vec, double>> quad_;
};

}  // namespace bhr

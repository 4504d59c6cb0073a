#pragma once

// Numerical 2-quasiconvex envelope: discrete test fields on the unit cube
// with zero value and zero gradient at the boundary (two frozen layers),
// multi-start descent on the cell-averaged energy, the 1D convexification
// oracle, quasiconvexity margins, and envelope recession.

#include "bhr/integrand.hpp"

namespace bhr {

// ---- 1D lower convex hull ------------------------------------------------

class ConvexHull1D {
 public:
  ConvexHull1D(std::vector<double> ts, std::vector<double> vals) {
    if (ts.size() != vals.size() || ts.size() < 3)
      throw std::invalid_argument("ConvexHull1D: need >= 3 samples");
    std::vector<size_t> order(ts.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return ts[a] < ts[b]; });
    for (size_t i = 0; i + 1 < order.size(); ++i)
      if (ts[order[i + 1]] - ts[order[i]] < 1e-14)
        throw std::invalid_argument("ConvexHull1D: duplicate abscissae");
    // Andrew monotone chain, lower hull of (t, v)
    for (size_t oi : order) {
      double t = ts[oi], v = vals[oi];
      while (ht_.size() >= 2) {
        size_t n = ht_.size();
        double cross = (ht_[n - 1] - ht_[n - 2]) * (v - hv_[n - 2]) -
                       (hv_[n - 1] - hv_[n - 2]) * (t - ht_[n - 2]);
        if (cross <= 0.0) {
          ht_.pop_back();
          hv_.pop_back();
        } else {
          break;
        }
      }
      ht_.push_back(t);
      hv_.push_back(v);
    }
  }

  double operator()(double t) const {
    if (t <= ht_.front()) return hv_.front() + slope_front() * (t - ht_.front());
    if (t >= ht_.back()) return hv_.back() + slope_back() * (t - ht_.back());
    size_t hi = static_cast<size_t>(
        std::upper_bound(ht_.begin(), ht_.end(), t) - ht_.begin());
    size_t lo = hi - 1;
    double lam = (t - ht_[lo]) / (ht_[hi] - ht_[lo]);
    return (1.0 - lam) * hv_[lo] + lam * hv_[hi];
  }

  // hull segment containing t (vertex abscissae bracketing it)
  std::pair<double, double> segment_at(double t) const {
    if (t <= ht_.front()) return {ht_.front(), ht_.front()};
    if (t >= ht_.back()) return {ht_.back(), ht_.back()};
    size_t hi = static_cast<size_t>(
        std::upper_bound(ht_.begin(), ht_.end(), t) - ht_.begin());
    return {ht_[hi - 1], ht_[hi]};
  }

  const std::vector<double>& vertices_t() const { return ht_; }
  const std::vector<double>& vertices_v() const { return hv_; }

 private:
  double slope_front() const {
    return ht_.size() > 1 ? (hv_[1] - hv_[0]) / (ht_[1] - ht_[0]) : 0.0;
  }
  double slope_back() const {
    size_t n = ht_.size();
    return n > 1 ? (hv_[n - 1] - hv_[n - 2]) / (ht_[n - 1] - ht_[n - 2]) : 0.0;
  }
  std::vector<double> ht_, hv_;
};

inline ConvexHull1D convexify_1d(const std::vector<std::pair<double, double>>& samples) {
  std::vector<double> t, v;
  t.reserve(samples.size());
  v.reserve(samples.size());
  for (auto& s : samples) {
    t.push_back(s.first);
    v.push_back(s.second);
  }
  return ConvexHull1D(std::move(t), std::move(v));
}

// ---- discrete test fields -------------------------------------------------

class PerturbationGrid {
 public:
  PerturbationGrid(int space_dim, int d, int n_w)
      : nsp_(space_dim), d_(d), nw_(n_w), h_(1.0 / (n_w - 1)) {
    if (n_w < 5) throw std::invalid_argument("PerturbationGrid: n_w >= 5 required");
    total_ = 1;
    for (int a = 0; a < nsp_; ++a) total_ *= nw_;
    stride_.assign(static_cast<size_t>(nsp_), 1);
    for (int a = nsp_ - 2; a >= 0; --a)
      stride_[static_cast<size_t>(a)] = stride_[static_cast<size_t>(a + 1)] * nw_;
    w_.assign(static_cast<size_t>(total_ * d_), 0.0);
  }

  int space_dim() const { return nsp_; }
  int d() const { return d_; }
  int nodes_per_axis() const { return nw_; }
  double h() const { return h_; }
  int node_count() const { return total_; }

  double& value(int flat, int k) { return w_[static_cast<size_t>(flat * d_ + k)]; }
  double value(int flat, int k) const { return w_[static_cast<size_t>(flat * d_ + k)]; }
  std::vector<double>& raw() { return w_; }
  const std::vector<double>& raw() const { return w_; }

  bool frozen(const std::vector<int>& idx) const {
    for (int a = 0; a < nsp_; ++a) {
      int i = idx[static_cast<size_t>(a)];
      if (i <= 1 || i >= nw_ - 2) return true;
    }
    return false;
  }
  bool frozen_flat(int flat) const { return frozen(multi_index(flat)); }

  void enforce_boundary() {
    for (int f = 0; f < total_; ++f)
      if (frozen_flat(f))
        for (int k = 0; k < d_; ++k) value(f, k) = 0.0;
  }

  std::vector<int> multi_index(int flat) const {
    std::vector<int> idx(static_cast<size_t>(nsp_));
    for (int a = nsp_ - 1; a >= 0; --a) {
      idx[static_cast<size_t>(a)] = flat % nw_;
      flat /= nw_;
    }
    return idx;
  }
  int flat_index(const std::vector<int>& idx) const {
    int f = 0;
    for (int a = 0; a < nsp_; ++a) f += idx[static_cast<size_t>(a)] * stride_[static_cast<size_t>(a)];
    return f;
  }
  Vec position(const std::vector<int>& idx) const {
    Vec y(nsp_);
    for (int a = 0; a < nsp_; ++a) y[a] = -0.5 + idx[static_cast<size_t>(a)] * h_;
    return y;
  }

  // interior quadrature/stencil nodes: every axis index in [1, n_w-2]
  template <typename F>
  void for_each_eval_node(F&& body) const {
    std::vector<int> idx(static_cast<size_t>(nsp_), 1);
    while (true) {
      body(idx, flat_index(idx));
      int a = nsp_ - 1;
      while (a >= 0) {
        if (++idx[static_cast<size_t>(a)] <= nw_ - 2) break;
        idx[static_cast<size_t>(a)] = 1;
        --a;
      }
      if (a < 0) break;
    }
  }
  int eval_node_count() const {
    int c = 1;
    for (int a = 0; a < nsp_; ++a) c *= nw_ - 2;
    return c;
  }

  // centered second differences at an interior node
  SymTensor second_difference(const std::vector<int>& idx) const {
    SymTensor t(d_, nsp_);
    int f0 = flat_index(idx);
    double inv_h2 = 1.0 / (h_ * h_);
    for (int i = 0; i < nsp_; ++i) {
      int si = stride_[static_cast<size_t>(i)];
      for (int k = 0; k < d_; ++k) {
        double v = (value(f0 + si, k) - 2.0 * value(f0, k) + value(f0 - si, k)) * inv_h2;
        t.set(k, i, i, v);
      }
      for (int j = i + 1; j < nsp_; ++j) {
        int sj = stride_[static_cast<size_t>(j)];
        for (int k = 0; k < d_; ++k) {
          double v = (value(f0 + si + sj, k) - value(f0 + si - sj, k) - value(f0 - si + sj, k) +
                      value(f0 - si - sj, k)) *
                     (0.25 * inv_h2);
          t.set(k, i, j, v);
        }
      }
    }
    return t;
  }

  SymTensor mean_hessian() const {
    SymTensor acc = SymTensor::zero(d_, nsp_);
    int count = 0;
    for_each_eval_node([&](const std::vector<int>& idx, int) {
      acc += second_difference(idx);
      ++count;
    });
    acc *= 1.0 / count;
    return acc;
  }

 private:
  int nsp_, d_, nw_;
  double h_;
  int total_ = 0;
  std::vector<int> stride_;
  std::vector<double> w_;
};

// mean over interior nodes of f(x, H + D^2 w); equals f(x, H) at w = 0
inline double perturbed_energy(const Integrand& f, const Vec& x, const SymTensor& h,
                               const PerturbationGrid& w) {
  double s = 0.0;
  int count = 0;
  w.for_each_eval_node([&](const std::vector<int>& idx, int) {
    s += f(x, h + w.second_difference(idx));
    ++count;
  });
  return s / count;
}

// ---- laminate construction -------------------------------------------------

// Second-difference target pattern along one axis mixing two curvature values
// with the zero-mean fraction, then integrated twice so the frozen layers are
// met exactly (1D). Used both as optimizer warm starts and as oscillating
// test fields.
inline PerturbationGrid laminate_field_1d(int d, int n_w, const Vec& amp_dir, double t_minus,
                                          double t_plus, int periods) {
  PerturbationGrid w(1, d, n_w);
  int n_eval = n_w - 2;
  if (t_plus <= t_minus) std::swap(t_plus, t_minus);
  double span = t_plus - t_minus;
  double theta = span > 0.0 ? t_plus / span : 0.5;  // fraction at t_minus
  // alternate the period orientation so the first moment nearly cancels
  std::vector<double> s(static_cast<size_t>(n_eval));
  int m = std::max(1, periods);
  for (int j = 0; j < n_eval; ++j) {
    int period = j * m / n_eval;
    int p0 = period * n_eval / m, p1 = (period + 1) * n_eval / m;
    int len = std::max(1, p1 - p0);
    double pos = (j - p0 + 0.5) / len;
    bool minus_first = (period % 2 == 0);
    bool in_minus = minus_first ? pos < theta : pos >= 1.0 - theta;
    s[static_cast<size_t>(j)] = in_minus ? t_minus : t_plus;
  }
  auto moments = [&]() {
    double r0 = 0.0, r1 = 0.0;
    for (int j = 0; j < n_eval; ++j) {
      r0 += s[static_cast<size_t>(j)];
      r1 += (j + 1) * s[static_cast<size_t>(j)];
    }
    return std::pair<double, double>(r0, r1);
  };
  // greedy pair swaps drive the first moment toward the value the two-entry
  // correction handles with the least off-well mass
  for (int round = 0; round < 24; ++round) {
    auto [r0, r1] = moments();
    double target = (1.0 + n_eval) * 0.5 * r0;  // symmetric correction point
    double best_gain = -1.0;
    int bi = -1, bj = -1;
    for (int i = 0; i < n_eval; ++i)
      for (int j = i + 1; j < n_eval; ++j) {
        double diff = s[static_cast<size_t>(i)] - s[static_cast<size_t>(j)];
        if (std::abs(diff) < 1e-14) continue;
        double r1_new = r1 + diff * (j - i);
        double gain = std::abs(r1 - target) - std::abs(r1_new - target);
        if (gain > best_gain) {
          best_gain = gain;
          bi = i;
          bj = j;
        }
      }
    if (best_gain <= 1e-12) break;
    std::swap(s[static_cast<size_t>(bi)], s[static_cast<size_t>(bj)]);
  }
  // exact two-entry correction zeroes both discrete moments so the double
  // integration lands on the frozen layers
  {
    auto [r0, r1] = moments();
    double a = 1.0, b = n_eval;
    double det = b - a;
    double beta = (-r1 + a * r0) / det;
    double alpha = -r0 - beta;
    s[0] += alpha;
    s[static_cast<size_t>(n_eval - 1)] += beta;
  }
  // y_{j+1} = 2 y_j - y_{j-1} + s_j with y_0 = y_1 = 0
  std::vector<double> y(static_cast<size_t>(n_w), 0.0);
  for (int j = 1; j <= n_eval; ++j)
    y[static_cast<size_t>(j + 1)] =
        2.0 * y[static_cast<size_t>(j)] - y[static_cast<size_t>(j - 1)] + s[static_cast<size_t>(j - 1)];
  double h2 = w.h() * w.h();
  for (int i = 0; i < n_w; ++i)
    for (int k = 0; k < d; ++k) w.value(i, k) = h2 * y[static_cast<size_t>(i)] * amp_dir[k];
  w.enforce_boundary();  // exact by construction; guards round-off
  return w;
}

// oscillation along direction b in N >= 2 dimensions, tapered to meet the
// frozen layers (approximate boundary fit)
inline PerturbationGrid laminate_field(int space_dim, int d, int n_w, const LambdaGenerator& dir,
                                       double t_minus, double t_plus, int periods) {
  if (space_dim == 1) {
    Vec amp = dir.a * (dir.b[0] * dir.b[0]);
    double an = amp.norm();
    if (an > 0) amp /= an;
    return laminate_field_1d(d, n_w, amp, t_minus, t_plus, periods);
  }
  PerturbationGrid w(space_dim, d, n_w);
  if (t_plus <= t_minus) std::swap(t_plus, t_minus);
  double span = t_plus - t_minus;
  double theta = span > 0.0 ? t_plus / span : 0.5;
  double period = 1.0 / periods;
  // profile W with W'' equal to the two-value pattern in the scalar variable
  auto pattern = [&](double u) {
    double frac = u / period - std::floor(u / period);
    return frac < theta ? t_minus : t_plus;
  };
  // two explicit integrations on a fine 1D mesh
  int fine = 40 * periods;
  std::vector<double> wp(static_cast<size_t>(fine + 1), 0.0), wv(static_cast<size_t>(fine + 1), 0.0);
  double du = 2.0 / fine;  // u in [-1, 1] covers b . y over the cube
  for (int i = 0; i < fine; ++i) {
    double u = -1.0 + (i + 0.5) * du;
    wp[static_cast<size_t>(i + 1)] = wp[static_cast<size_t>(i)] + pattern(u) * du;
  }
  double mean_wp = 0.0;
  for (double v : wp) mean_wp += v;
  mean_wp /= wp.size();
  for (double& v : wp) v -= mean_wp;
  for (int i = 0; i < fine; ++i)
    wv[static_cast<size_t>(i + 1)] = wv[static_cast<size_t>(i)] + wp[static_cast<size_t>(i)] * du;
  auto profile = [&](double u) {
    double s = (u + 1.0) / du;
    int i = std::min(fine - 1, std::max(0, static_cast<int>(s)));
    double fr = s - i;
    return (1.0 - fr) * wv[static_cast<size_t>(i)] + fr * wv[static_cast<size_t>(i + 1)];
  };
  int nw = w.nodes_per_axis();
  for (int f = 0; f < w.node_count(); ++f) {
    auto idx = w.multi_index(f);
    Vec y = w.position(idx);
    double taper = 1.0;
    for (int a = 0; a < space_dim; ++a) {
      int m = std::min(idx[static_cast<size_t>(a)], nw - 1 - idx[static_cast<size_t>(a)]);
      taper *= std::min(1.0, std::max(0.0, (m - 1.0) / 3.0));
    }
    double v = profile(dir.b.dot(y) / std::max(1e-12, dir.b.norm())) * taper;
    for (int k = 0; k < d; ++k) w.value(f, k) = v * dir.a[k];
  }
  w.enforce_boundary();
  return w;
}

// ---- descent optimizer ------------------------------------------------

struct EnvelopeResult {
  double value = 0.0;
  PerturbationGrid argmin{1, 1, 8};
  int starts_used = 0;
  std::vector<std::pair<int, double>> trace;  // (n_w level, value)
  bool warning = false;                       // descent trouble; best-so-far returned
};

namespace detail {

inline SymTensor grad_h_forward(const Integrand& f, const Vec& x, const SymTensor& h,
                                double base_val, double step = 1e-5) {
  SymTensor g(h.d(), h.n());
  for (int k = 0; k < h.d(); ++k)
    for (int i = 0; i < h.n(); ++i)
      for (int j = i; j < h.n(); ++j) {
        SymTensor hp = h;
        hp.add(k, i, j, step);
        double df = (f(x, hp) - base_val) / step;
        g.set(k, i, j, i == j ? df : 0.5 * df);
      }
  return g;
}

struct DescentOutcome {
  double value;
  bool trouble = false;
};

inline DescentOutcome descend(const Integrand& f, const Vec& x, const SymTensor& h,
                              PerturbationGrid& w, int max_iter = 400) {
  int d = w.d(), nsp = w.space_dim();
  double inv_h2 = 1.0 / (w.h() * w.h());
  int n_eval = w.eval_node_count();
  std::vector<double> grad(w.raw().size());
  double energy = perturbed_energy(f, x, h, w);
  double step = 1.0;  // relative to gradient magnitude
  bool trouble = false;
  int stall = 0;
  std::vector<int> stride(static_cast<size_t>(nsp), 1);
  for (int a = nsp - 2; a >= 0; --a) stride[static_cast<size_t>(a)] = stride[static_cast<size_t>(a + 1)] * w.nodes_per_axis();
  for (int iter = 0; iter < max_iter; ++iter) {
    std::fill(grad.begin(), grad.end(), 0.0);
    w.for_each_eval_node([&](const std::vector<int>& idx, int f0) {
      SymTensor arg = h + w.second_difference(idx);
      SymTensor g = f.grad_h ? f.grad_h(x, arg) : grad_h_forward(f, x, arg, f(x, arg));
      for (int i = 0; i < nsp; ++i) {
        int si = stride[static_cast<size_t>(i)];
        for (int k = 0; k < d; ++k) {
          double c = g.at(k, i, i) * inv_h2 / n_eval;
          grad[static_cast<size_t>((f0 + si) * d + k)] += c;
          grad[static_cast<size_t>((f0 - si) * d + k)] += c;
          grad[static_cast<size_t>(f0 * d + k)] -= 2.0 * c;
        }
        for (int j = i + 1; j < nsp; ++j) {
          int sj = stride[static_cast<size_t>(j)];
          for (int k = 0; k < d; ++k) {
            double c = g.at(k, i, j) * 0.5 * inv_h2 / n_eval;
            grad[static_cast<size_t>((f0 + si + sj) * d + k)] += c;
            grad[static_cast<size_t>((f0 - si - sj) * d + k)] += c;
            grad[static_cast<size_t>((f0 + si - sj) * d + k)] -= c;
            grad[static_cast<size_t>((f0 - si + sj) * d + k)] -= c;
          }
        }
      }
    });
    // frozen layers carry no degrees of freedom
    double g2 = 0.0;
    for (int fl = 0; fl < w.node_count(); ++fl) {
      if (w.frozen_flat(fl)) {
        for (int k = 0; k < d; ++k) grad[static_cast<size_t>(fl * d + k)] = 0.0;
      } else {
        for (int k = 0; k < d; ++k) {
          double gg = grad[static_cast<size_t>(fl * d + k)];
          g2 += gg * gg;
        }
      }
    }
    if (g2 < 1e-24) break;
    double t = step / std::sqrt(g2);
    bool improved = false;
    std::vector<double> saved = w.raw();
    for (int bt = 0; bt < 40; ++bt) {
      for (size_t i = 0; i < saved.size(); ++i) w.raw()[i] = saved[i] - t * grad[i];
      double e_new = perturbed_energy(f, x, h, w);
      if (e_new < energy - 1e-4 * t * g2) {
        // successful Armijo step; gently expand the trust step
        if (bt == 0) step *= 1.5;
        double drop = energy - e_new;
        energy = e_new;
        improved = true;
        stall = (drop < 1e-12 * (1.0 + std::abs(energy))) ? stall + 1 : 0;
        break;
      }
      t *= 0.5;
      step *= 0.5;
    }
    if (!improved) {
      w.raw() = saved;
      if (step < 1e-14) break;
      trouble = true;
      step *= 0.5;  // restart with halved step
      ++stall;
    }
    if (stall >= 3) break;
  }
  return {energy, trouble};
}

inline std::vector<PerturbationGrid> build_starts(const Integrand& f, const Vec& x,
                                                  const SymTensor& h, int space_dim, int d,
                                                  int n_w, int starts, uint64_t seed) {
  std::vector<PerturbationGrid> out;
  out.emplace_back(space_dim, d, n_w);  // zero start
  // laminate starts from the directional hulls along the cone basis
  LambdaBasis basis = build_lambda_basis(space_dim, d, 17, 4);
  for (const LambdaGenerator& gen : basis.generators) {
    if (static_cast<int>(out.size()) >= starts) break;
    SymTensor xi = gen.realize();
    double span = 4.0 * (1.0 + h.norm());
    int pts = 2049;
    std::vector<double> ts(static_cast<size_t>(pts)), vs(static_cast<size_t>(pts));
    for (int i = 0; i < pts; ++i) {
      double t = -span + 2.0 * span * i / (pts - 1);
      ts[static_cast<size_t>(i)] = t;
      vs[static_cast<size_t>(i)] = f(x, h + t * xi);
    }
    ConvexHull1D hull(ts, vs);
    double at0 = f(x, h);
    if (at0 - hull(0.0) < 1e-10 * (1.0 + std::abs(at0))) continue;  // no directional gain
    auto [tm, tp] = hull.segment_at(0.0);
    if (tp - tm < 1e-9) continue;
    for (int periods : {2, 4, 1}) {
      if (static_cast<int>(out.size()) >= starts) break;
      out.push_back(laminate_field(space_dim, d, n_w, gen, tm, tp, periods));
    }
  }
  Rng rng(seed);
  double h2 = 1.0 / ((n_w - 1.0) * (n_w - 1.0));
  int variant = 0;
  while (static_cast<int>(out.size()) < starts) {
    PerturbationGrid w(space_dim, d, n_w);
    double amp = h2 * (1.0 + h.norm()) * std::pow(2.0, variant % 3 - 1);
    for (int fl = 0; fl < w.node_count(); ++fl)
      for (int k = 0; k < d; ++k) w.value(fl, k) = uniform(rng, -amp, amp);
    w.enforce_boundary();
    out.push_back(std::move(w));
    ++variant;
  }
  return out;
}

}  // namespace detail

struct EnvelopeOptions {
  int starts = 8;
  uint64_t seed = 0;
  bool refine = true;          // run the {8,12,16,...} level trace
  int max_iter = 400;
};

inline EnvelopeResult quasiconvex_envelope(const Integrand& f, const Vec& x, const SymTensor& h,
                                           int n_w, const EnvelopeOptions& opt = {}) {
  if (n_w < 8) throw std::invalid_argument("quasiconvex_envelope: n_w >= 8 required");
  int space_dim = h.n(), d = h.d();
  std::vector<int> levels;
  if (opt.refine) {
    for (int l : {8, 12, 16})
      if (l < n_w) levels.push_back(l);
  }
  levels.push_back(n_w);

  EnvelopeResult res;
  res.value = f(x, h);
  res.argmin = PerturbationGrid(space_dim, d, n_w);
  std::optional<PerturbationGrid> prev_argmin;
  for (int level : levels) {
    auto starts = detail::build_starts(f, x, h, space_dim, d, level, opt.starts, opt.seed);
    if (prev_argmin) {
      // warm start: linear interpolation of the coarser minimizer
      PerturbationGrid warm(space_dim, d, level);
      const PerturbationGrid& c = *prev_argmin;
      for (int fl = 0; fl < warm.node_count(); ++fl) {
        auto idx = warm.multi_index(fl);
        Vec y = warm.position(idx);
        // multilinear interpolation on the coarse grid
        std::vector<int> base(static_cast<size_t>(space_dim));
        std::vector<double> frac(static_cast<size_t>(space_dim));
        for (int a = 0; a < space_dim; ++a) {
          double u = (y[a] + 0.5) / c.h();
          int b = std::min(c.nodes_per_axis() - 2, std::max(0, static_cast<int>(std::floor(u))));
          base[static_cast<size_t>(a)] = b;
          frac[static_cast<size_t>(a)] = u - b;
        }
        for (int k = 0; k < d; ++k) {
          double acc = 0.0;
          for (int corner = 0; corner < (1 << space_dim); ++corner) {
            double wgt = 1.0;
            std::vector<int> ci(static_cast<size_t>(space_dim));
            for (int a = 0; a < space_dim; ++a) {
              int bit = (corner >> a) & 1;
              ci[static_cast<size_t>(a)] = base[static_cast<size_t>(a)] + bit;
              wgt *= bit ? frac[static_cast<size_t>(a)] : 1.0 - frac[static_cast<size_t>(a)];
            }
            acc += wgt * c.value(c.flat_index(ci), k);
          }
          warm.value(fl, k) = acc;
        }
      }
      warm.enforce_boundary();
      starts.push_back(std::move(warm));
    }
    double level_best = std::numeric_limits<double>::infinity();
    PerturbationGrid level_argmin(space_dim, d, level);
    std::vector<double> values(starts.size());
    std::vector<bool> troubles(starts.size());
    parallel_for(static_cast<int>(starts.size()), [&](int s) {
      auto outcome = detail::descend(f, x, h, starts[static_cast<size_t>(s)], opt.max_iter);
      values[static_cast<size_t>(s)] = outcome.value;
      troubles[static_cast<size_t>(s)] = outcome.trouble;
    });
    int all_trouble = 0;
    for (size_t s = 0; s < starts.size(); ++s) {
      if (troubles[s]) ++all_trouble;
      if (values[s] < level_best) {
        level_best = values[s];
        level_argmin = starts[s];
      }
    }
    if (all_trouble == static_cast<int>(starts.size())) res.warning = true;
    res.starts_used += static_cast<int>(starts.size());
    res.trace.emplace_back(level, level_best);
    if (level_best < res.value) {
      res.value = level_best;
      res.argmin = level_argmin;
    }
    prev_argmin = std::move(level_argmin);
  }
  return res;
}

// ---- quasiconvexity margins -------------------------------------------

struct QuasiconvexityReport {
  double min_margin = std::numeric_limits<double>::infinity();
  int worst_h = -1, worst_w = -1;
  bool quasiconvex_on_samples(double tol = 1e-8) const { return min_margin >= -tol; }
};

inline QuasiconvexityReport check_2quasiconvexity(const Integrand& f, const Vec& x,
                                                  const std::vector<SymTensor>& h_samples,
                                                  const std::vector<PerturbationGrid>& w_samples) {
  QuasiconvexityReport rep;
  for (size_t hi = 0; hi < h_samples.size(); ++hi)
    for (size_t wi = 0; wi < w_samples.size(); ++wi) {
      double margin =
          perturbed_energy(f, x, h_samples[hi], w_samples[wi]) - f(x, h_samples[hi]);
      if (margin < rep.min_margin) {
        rep.min_margin = margin;
        rep.worst_h = static_cast<int>(hi);
        rep.worst_w = static_cast<int>(wi);
      }
    }
  return rep;
}

// |Q2f(x,.) - Q2f(y,.)| against the inherited modulus (2C/c) w(|x-y|)(1+|H|)
struct ModulusCheck {
  double worst_ratio = 0.0;     // difference / bound
  double worst_difference = 0.0;
  bool ok = true;
};

inline ModulusCheck envelope_modulus_check(const Integrand& f, const Vec& x, const Vec& y,
                                           const std::vector<SymTensor>& h_samples, int n_w = 12,
                                           double envelope_tol = 1e-6,
                                           const EnvelopeOptions& opt = {}) {
  if (!f.coercivity_c) throw std::invalid_argument("envelope_modulus_check: coercivity_c required");
  ModulusCheck chk;
  double cc = *f.coercivity_c;
  for (const SymTensor& h : h_samples) {
    double qx, qy;
    if (f.convex_in_h) {
      qx = f(x, h);
      qy = f(y, h);
    } else {
      EnvelopeOptions o = opt;
      o.refine = false;
      qx = quasiconvex_envelope(f, x, h, n_w, o).value;
      qy = quasiconvex_envelope(f, y, h, n_w, o).value;
    }
    double diff = std::abs(qx - qy);
    double bound =
        (2.0 * f.growth_c / cc) * f.modulus((x - y).norm()) * (1.0 + h.norm()) + 2.0 * envelope_tol;
    chk.worst_difference = std::max(chk.worst_difference, diff);
    if (bound > 0.0) chk.worst_ratio = std::max(chk.worst_ratio, diff / bound);
    if (diff > bound) chk.ok = false;
  }
  return chk;
}

struct EnvelopeRecession {
  double value = 0.0;
  std::vector<double> ratios;
  bool lambda_crosschecked = false;
  double lambda_gap = 0.0;  // |upper - lower| of the envelope's recession at H
};

inline EnvelopeRecession envelope_recession(const Integrand& f, const Vec& x, const SymTensor& h,
                                            const std::vector<double>& t_schedule, int n_w,
                                            bool crosscheck_lambda = false,
                                            const EnvelopeOptions& opt_in = {}) {
  if (h.norm() == 0.0) throw std::invalid_argument("envelope_recession: H must be nonzero");
  EnvelopeOptions opt = opt_in;
  opt.refine = false;
  EnvelopeRecession r;
  auto q2 = [&](const Vec& xx, const SymTensor& hh) {
    if (f.convex_in_h) return f(xx, hh);
    return quasiconvex_envelope(f, xx, hh, n_w, opt).value;
  };
  for (double t : t_schedule) {
    SymTensor th = h;
    th *= t;
    r.ratios.push_back(q2(x, th) / t);
  }
  size_t tail = std::max<size_t>(1, t_schedule.size() / 4);
  for (size_t i = r.ratios.size() - tail; i < r.ratios.size(); ++i)
    r.value = std::max(r.value, r.ratios[i]);
  if (crosscheck_lambda && is_lambda_direction(h, 1e-10)) {
    Integrand env;
    env.eval = q2;
    env.growth_c = f.growth_c;
    auto samples = default_neighborhood_sampler(x, h, 3, 12);
    auto lu = lower_upper_recession(env, x, h, samples);
    r.lambda_crosschecked = true;
    r.lambda_gap = lu.lambda_gap;
  }
  return r;
}

// ---- biconjugate lower bound ----------------------------------------------

// Double Legendre transform on sample grids: a certified lower bound of the
// convex envelope, hence of the 2-quasiconvex envelope.
class GridBiconjugate {
 public:
  GridBiconjugate(const Integrand& f, const Vec& x, const std::vector<SymTensor>& h_grid,
                  int dual_count = 256, uint64_t seed = 5) {
    if (h_grid.empty()) throw std::invalid_argument("GridBiconjugate: empty grid");
    Rng rng(seed);
    int d = h_grid[0].d(), n = h_grid[0].n();
    duals_.reserve(static_cast<size_t>(dual_count));
    conj_.reserve(static_cast<size_t>(dual_count));
    for (int k = 0; k < dual_count; ++k) {
      SymTensor xi = random_unit_sym_tensor(rng, d, n);
      xi *= f.growth_c * uniform(rng, 0.0, 1.0);
      double fstar = -std::numeric_limits<double>::infinity();
      for (const SymTensor& h : h_grid) fstar = std::max(fstar, xi.dot(h) - f(x, h));
      duals_.push_back(std::move(xi));
      conj_.push_back(fstar);
    }
  }
  double operator()(const SymTensor& h) const {
    double v = -std::numeric_limits<double>::infinity();
    for (size_t k = 0; k < duals_.size(); ++k) v = std::max(v, duals_[k].dot(h) - conj_[k]);
    return v;
  }

 private:
  std::vector<SymTensor> duals_;
  std::vector<double> conj_;
};

// ---- cached backend for energy evaluation --------------------------------

struct EnvelopeSettings {
  int n_w = 16;
  int starts = 8;
  uint64_t seed = 0;
  bool force_optimizer = false;   // ignore the convexity flag
  int table_size = 51;            // 1D interpolation table resolution
  double range_pad = 0.2;
  std::vector<double> t_schedule = geometric_schedule(14);
  int recession_n_w = 10;
};

class EnvelopeBackend {
 public:
  EnvelopeBackend(const Integrand& f, EnvelopeSettings s = {}) : f_(f), s_(std::move(s)) {}

  const Integrand& integrand() const { return f_; }
  const EnvelopeSettings& settings() const { return s_; }
  bool closed_form() const { return f_.convex_in_h && !s_.force_optimizer; }

  double q2(const Vec& x, const SymTensor& h) const {
    if (closed_form()) return f_(x, h);
    if (h.d() == 1 && h.n() == 1 && !f_.x_dependent) return table_1d(h.at(0, 0, 0));
    EnvelopeOptions opt;
    opt.starts = s_.starts;
    opt.seed = s_.seed;
    opt.refine = false;
    return quasiconvex_envelope(f_, x, h, s_.n_w, opt).value;
  }

  // recession of the envelope in direction h (1-homogeneous in h)
  double q2_recession(const Vec& x, const SymTensor& h) const {
    double hn = h.norm();
    if (hn == 0.0) return 0.0;
    SymTensor dir = h;
    dir *= 1.0 / hn;
    if (closed_form()) {
      if (f_.analytic_recession) return hn * f_.analytic_recession(x, dir);
      return hn * recession(f_, x, dir, geometric_schedule(20)).value;
    }
    EnvelopeOptions opt;
    opt.starts = s_.starts;
    opt.seed = s_.seed;
    return hn * envelope_recession(f_, x, dir, s_.t_schedule, s_.recession_n_w, false, opt).value;
  }

  bool used_table() const { return table_built_; }

 private:
  double table_1d(double t) const {
    if (!table_built_) build_table(std::max(3.0, std::abs(t)));
    double r = range_;
    if (std::abs(t) > r) {  // outside the table: direct evaluation
      EnvelopeOptions opt;
      opt.starts = s_.starts;
      opt.seed = s_.seed;
      opt.refine = false;
      return quasiconvex_envelope(f_, Vec::Zero(1), SymTensor::scalar(t), s_.n_w, opt).value;
    }
    double u = (t + r) / (2.0 * r) * (s_.table_size - 1);
    int i = std::min(s_.table_size - 2, std::max(0, static_cast<int>(u)));
    double fr = u - i;
    return (1.0 - fr) * table_[static_cast<size_t>(i)] + fr * table_[static_cast<size_t>(i + 1)];
  }

  void build_table(double needed_range) const {
    range_ = needed_range * (1.0 + s_.range_pad);
    table_.resize(static_cast<size_t>(s_.table_size));
    EnvelopeOptions opt;
    opt.starts = s_.starts;
    opt.seed = s_.seed;
    opt.refine = false;
    Vec x0 = Vec::Zero(1);
    std::vector<double> vals(static_cast<size_t>(s_.table_size));
    for (int i = 0; i < s_.table_size; ++i) {
      double t = -range_ + 2.0 * range_ * i / (s_.table_size - 1);
      vals[static_cast<size_t>(i)] =
          quasiconvex_envelope(f_, x0, SymTensor::scalar(t), s_.n_w, opt).value;
    }
    table_ = std::move(vals);
    table_built_ = true;
  }

  const Integrand& f_;
  EnvelopeSettings s_;
  mutable bool table_built_ = false;
  mutable double range_ = 0.0;
  mutable std::vector<double> table_;
};

}  // namespace bhr

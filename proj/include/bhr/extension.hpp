#pragma once

// The reflection-style extension across a special Lipschitz boundary:
// E[u](x) = integral over [1,2] of u(x + lambda delta(x) e_N) psi(lambda),
// with delta a calibrated multiple of the regularized distance and psi the
// finite-moment kernel. Bounded domains (intervals, boxes) are covered by
// special-Lipschitz pieces glued with a smooth partition of unity, feeding
// the smooth area-strict approximation pipeline.

#include "bhr/convergence.hpp"
#include "bhr/field.hpp"
#include "bhr/lipschitz.hpp"

#include <memory>

namespace bhr {

// psi(l) = a + b l on [1,2] with unit mass and vanishing first moment
struct MomentKernel {
  double a = 28.0, b = -18.0;
  double operator()(double lambda) const { return a + b * lambda; }
  // closed form: integral over [1,2] of lambda^k psi(lambda)
  double moment(int k) const {
    auto pk = [](int p) { return (std::pow(2.0, p + 1) - 1.0) / (p + 1); };
    return a * pk(k) + b * pk(k + 1);
  }
};

inline MomentKernel moment_kernel() {
  MomentKernel psi;
  if (std::abs(psi.moment(0) - 1.0) > 1e-12 || std::abs(psi.moment(1)) > 1e-12)
    throw std::runtime_error("moment_kernel: moment identities violated");
  return psi;
}

// value and gradient of a function living on the domain side
struct DomainFn {
  std::function<Vec(const Vec&)> value;
  std::function<Mat(const Vec&)> gradient;  // d x N
  int d = 1;
};

inline DomainFn domain_fn_from_field(const BHField& u, bool zero_outside_box = false) {
  DomainFn fn;
  fn.d = u.d();
  if (zero_outside_box) {
    fn.value = [&u](const Vec& x) -> Vec {
      if (!u.domain().box().contains(x)) return Vec::Zero(u.d());
      return u.value(x);
    };
    fn.gradient = [&u](const Vec& x) -> Mat {
      if (!u.domain().box().contains(x)) return Mat::Zero(u.d(), u.n());
      return u.gradient(x);
    };
  } else {
    fn.value = [&u](const Vec& x) { return u.value(x); };
    fn.gradient = [&u](const Vec& x) { return u.gradient(x); };
  }
  return fn;
}

struct CalibrationEvidence {
  double kappa = 0.0;
  double slope_sup = 0.0;      // sampled sup of the vertical rho-slope (negative)
  bool doubled = false;
  int points_validated = 0;
};

class SteinExtension {
 public:
  // calibration_box: world region (outside the domain) where the operator
  // will be evaluated; kappa is set from the sampled slope bound so that
  // d(delta)/d(x_N) <= -2, then lookups are validated and kappa doubled once
  // if any escapes the domain
  SteinExtension(const SpecialLipschitzDomain& dom, const Box& calibration_box,
                 int calibration_samples = 121, uint64_t seed = 11)
      : dom_(&dom), rho_(dom), psi_(moment_kernel()) {
    Rng rng(seed);
    int n = dom.dim();
    std::vector<Vec> exterior;
    int tries = 0;
    while (static_cast<int>(exterior.size()) < calibration_samples && tries < 100 * calibration_samples) {
      ++tries;
      Vec x(n);
      for (int i = 0; i < n; ++i) x[i] = uniform(rng, calibration_box.lo[i], calibration_box.hi[i]);
      if (!dom.inside(x) && dom.signed_distance(x) > 1e-9) exterior.push_back(std::move(x));
    }
    if (exterior.empty())
      throw std::invalid_argument("SteinExtension: calibration box contains no exterior points");
    evidence_.slope_sup = -std::numeric_limits<double>::infinity();
    for (const Vec& x : exterior)
      evidence_.slope_sup = std::max(evidence_.slope_sup, rho_.vertical_slope(x));
    double lip = dom.lipschitz_constant();
    double lieberman = -(2.0 / 3.0) / (1.0 + lip * lip);
    if (evidence_.slope_sup > lieberman + 1e-3)
      throw std::runtime_error("SteinExtension: sampled slope violates the Lieberman bound");
    kappa_ = 2.0 / std::abs(evidence_.slope_sup);
    for (int round = 0; round < 2; ++round) {
      bool ok = true;
      for (const Vec& x : exterior) {
        for (double lam : {1.0, 1.25, 1.5, 1.75, 2.0}) {
          if (!dom.inside(lookup(x, lam))) {
            ok = false;
            break;
          }
        }
        if (!ok) break;
      }
      if (ok) break;
      if (round == 1) throw std::runtime_error("SteinExtension: lookups escape the domain");
      kappa_ *= 2.0;
      evidence_.doubled = true;
    }
    evidence_.kappa = kappa_;
    evidence_.points_validated = static_cast<int>(exterior.size());
  }

  const SpecialLipschitzDomain& domain() const { return *dom_; }
  const CalibrationEvidence& evidence() const { return evidence_; }
  const MomentKernel& kernel() const { return psi_; }
  double kappa() const { return kappa_; }

  double delta(const Vec& x_world) const { return kappa_ * rho_(x_world); }
  Vec delta_gradient(const Vec& x_world) const { return kappa_ * rho_.gradient(x_world); }

  Vec lookup(const Vec& x_world, double lambda) const {
    return x_world + lambda * delta(x_world) * dom_->frame().vertical_world();
  }

  // E[u](x) for x outside the closed domain
  Vec value(const DomainFn& u, const Vec& x_world) const {
    require_outside(x_world);
    const Quadrature1D& q = gauss_legendre(32);
    Vec acc = Vec::Zero(u.d);
    double dlt = delta(x_world);
    Vec en = dom_->frame().vertical_world();
    for (size_t i = 0; i < q.nodes.size(); ++i) {
      double lam = 1.5 + 0.5 * q.nodes[i];
      Vec y = x_world + lam * dlt * en;
      if (!dom_->inside(y))
        throw std::runtime_error("SteinExtension: lookup point escaped the domain");
      acc += 0.5 * q.weights[i] * psi_(lam) * u.value(y);
    }
    return acc;
  }

  // gradient via the chain formula: the direct term plus the delta-gradient
  // term weighted by lambda psi(lambda)
  Mat gradient(const DomainFn& u, const Vec& x_world) const {
    require_outside(x_world);
    const Quadrature1D& q = gauss_legendre(32);
    int n = dom_->dim();
    Mat acc = Mat::Zero(u.d, n);
    Vec vertical_term = Vec::Zero(u.d);  // integral of lambda psi d_u/d_eN
    double dlt = delta(x_world);
    Vec en = dom_->frame().vertical_world();
    for (size_t i = 0; i < q.nodes.size(); ++i) {
      double lam = 1.5 + 0.5 * q.nodes[i];
      Vec y = x_world + lam * dlt * en;
      Mat g = u.gradient(y);
      acc += 0.5 * q.weights[i] * psi_(lam) * g;
      vertical_term += 0.5 * q.weights[i] * lam * psi_(lam) * (g * en);
    }
    Vec dgrad = delta_gradient(x_world);
    acc += vertical_term * dgrad.transpose();
    return acc;
  }

 private:
  void require_outside(const Vec& x_world) const {
    if (dom_->inside(x_world))
      throw std::invalid_argument("SteinExtension: point lies inside the domain");
  }

  const SpecialLipschitzDomain* dom_;
  RegularizedDistance rho_;
  MomentKernel psi_;
  double kappa_ = 0.0;
  CalibrationEvidence evidence_;
};

// ---- trace diagnostics -------------------------------------------------

struct TraceGapRow {
  double r = 0.0;
  double value_gap = 0.0;
  double gradient_gap = 0.0;
};

namespace detail {
// average of fn over { B(x0, r), side of the graph } by nested quadrature
template <typename F>
auto halfball_average(const SpecialLipschitzDomain& dom, const Vec& x0_world, double r,
                      bool inside_side, F&& fn) -> decltype(fn(x0_world)) {
  const Quadrature1D& qo = gauss_legendre(24);
  const Quadrature1D& qi = gauss_legendre(12);
  int n = dom.dim();
  const Frame& fr = dom.frame();
  Vec y0 = fr.to_local(x0_world);
  auto eval_local = [&](const Vec& y) { return fn(fr.to_world(y)); };
  decltype(fn(x0_world)) acc = eval_local(y0);
  acc = acc * 0.0;
  double vol = 0.0;
  if (n == 1) {
    Vec empty(0);
    double c = dom.boundary_height(empty);
    double lo = inside_side ? c : y0[0] - r;
    double hi = inside_side ? y0[0] + r : c;
    for (size_t i = 0; i < qo.nodes.size(); ++i) {
      Vec y(1);
      y[0] = 0.5 * (lo + hi) + 0.5 * (hi - lo) * qo.nodes[i];
      double w = 0.5 * (hi - lo) * qo.weights[i];
      acc = acc + w * eval_local(y);
      vol += w;
    }
  } else {
    for (size_t i = 0; i < qo.nodes.size(); ++i) {
      double s = y0[0] + r * qo.nodes[i];
      double chord = std::sqrt(std::max(0.0, r * r - (s - y0[0]) * (s - y0[0])));
      Vec sp(1);
      sp[0] = s;
      double level = dom.boundary_height(sp);
      double lo = inside_side ? level : y0[1] - chord;
      double hi = inside_side ? y0[1] + chord : level;
      if (hi <= lo) continue;
      for (size_t j = 0; j < qi.nodes.size(); ++j) {
        Vec y(2);
        y[0] = s;
        y[1] = 0.5 * (lo + hi) + 0.5 * (hi - lo) * qi.nodes[j];
        double w = r * qo.weights[i] * 0.5 * (hi - lo) * qi.weights[j];
        acc = acc + w * eval_local(y);
        vol += w;
      }
    }
  }
  if (vol <= 0.0) throw std::runtime_error("halfball_average: empty region");
  return acc * (1.0 / vol);
}
}  // namespace detail

// boundary-average gaps for u vs E[u] and their gradients, per radius
inline std::vector<TraceGapRow> trace_gap(const DomainFn& u, const SteinExtension& ext,
                                          const std::vector<Vec>& boundary_points_world,
                                          const std::vector<double>& r_schedule) {
  std::vector<TraceGapRow> rows;
  const SpecialLipschitzDomain& dom = ext.domain();
  for (double r : r_schedule) {
    TraceGapRow row;
    row.r = r;
    for (const Vec& x0 : boundary_points_world) {
      Vec vin = detail::halfball_average(dom, x0, r, true, [&](const Vec& x) { return u.value(x); });
      Vec vout = detail::halfball_average(dom, x0, r, false, [&](const Vec& x) {
        return dom.inside(x) ? u.value(x) : ext.value(u, x);
      });
      row.value_gap = std::max(row.value_gap, (vin - vout).norm());
      Mat gin =
          detail::halfball_average(dom, x0, r, true, [&](const Vec& x) { return u.gradient(x); });
      Mat gout = detail::halfball_average(dom, x0, r, false, [&](const Vec& x) {
        return dom.inside(x) ? u.gradient(x) : ext.gradient(u, x);
      });
      row.gradient_gap = std::max(row.gradient_gap, (gin - gout).norm());
    }
    rows.push_back(row);
  }
  return rows;
}

// CSV dump of extension evaluations: x, E[u], grad E[u]
inline void write_extension_csv(const SteinExtension& ext, const DomainFn& u,
                                const std::vector<Vec>& points, std::ostream& os) {
  int n = ext.domain().dim();
  for (int i = 0; i < n; ++i) os << "x" << i + 1 << ",";
  for (int k = 0; k < u.d; ++k) os << "Eu" << k + 1 << ",";
  for (int k = 0; k < u.d; ++k)
    for (int i = 0; i < n; ++i)
      os << "dEu" << k + 1 << "_dx" << i + 1 << (k + 1 == u.d && i + 1 == n ? "" : ",");
  os << "\n";
  for (const Vec& x : points) {
    Vec v = ext.domain().inside(x) ? u.value(x) : ext.value(u, x);
    Mat g = ext.domain().inside(x) ? u.gradient(x) : ext.gradient(u, x);
    for (int i = 0; i < n; ++i) os << fmt_num(x[i]) << ",";
    for (int k = 0; k < u.d; ++k) os << fmt_num(v[k]) << ",";
    for (int k = 0; k < u.d; ++k)
      for (int i = 0; i < n; ++i) os << fmt_num(g(k, i)) << (k + 1 == u.d && i + 1 == n ? "" : ",");
    os << "\n";
  }
}

// phi table + certified constant, for domain description files
inline void write_domain_table(const std::vector<double>& ts, const std::vector<double>& phis,
                               double lip, std::ostream& os) {
  os << "special_lipschitz v1\nL " << fmt_num(lip) << "\nsamples " << ts.size() << "\n";
  for (size_t i = 0; i < ts.size(); ++i) os << fmt_num(ts[i]) << " " << fmt_num(phis[i]) << "\n";
}

inline SpecialLipschitzDomain read_domain_table(std::istream& is) {
  std::string tok;
  is >> tok;
  if (tok != "special_lipschitz") throw std::runtime_error("read_domain_table: bad header");
  is >> tok;  // version
  double lip = 0.0;
  size_t count = 0;
  is >> tok >> lip >> tok >> count;
  std::vector<double> ts(count), phis(count);
  for (size_t i = 0; i < count; ++i) is >> ts[i] >> phis[i];
  SpecialLipschitzDomain dom = make_from_table(ts, phis);
  if (dom.lipschitz_constant() > lip * (1.0 + 1e-12))
    throw std::runtime_error("read_domain_table: declared constant below the table slopes");
  return dom;
}

// ---- partition of unity over intervals and boxes -----------------------

// per-axis smooth split 1 = lo + mid + hi with transition inside [m/3, 2m/3]
struct AxisCutoffs {
  double lo_edge, hi_edge, m;
  double chi_lo(double t) const {
    double u = (t - lo_edge) / (hi_edge - lo_edge);
    return 1.0 - smoothstep_cinf((u - m / 3.0) / (m / 3.0));
  }
  double chi_hi(double t) const {
    double u = (t - lo_edge) / (hi_edge - lo_edge);
    return 1.0 - smoothstep_cinf((1.0 - u - m / 3.0) / (m / 3.0));
  }
  double chi_mid(double t) const { return 1.0 - chi_lo(t) - chi_hi(t); }
};

struct PartitionPiece {
  std::function<double(const Vec&)> psi;
  bool interior = false;
  std::shared_ptr<SpecialLipschitzDomain> dom;
  std::shared_ptr<SteinExtension> ext;
};

class BoundedExtension {
 public:
  BoundedExtension(const BHField& u, double margin_fraction = 0.3)
      : u_(&u), ufn_(domain_fn_from_field(u, true)) {
    const GridDomain& g = u.domain();
    int n = g.dim();
    if (n > 2) throw std::invalid_argument("BoundedExtension: intervals and 2D boxes only");
    Vec lo = g.lo(), hi = g.hi();
    double min_side = (hi - lo).minCoeff();
    margin_ = margin_fraction * min_side;
    enlarged_ = Box{lo - Vec::Constant(n, margin_), hi + Vec::Constant(n, margin_)};

    std::vector<AxisCutoffs> cuts;
    for (int i = 0; i < n; ++i) cuts.push_back(AxisCutoffs{lo[i], hi[i], 0.3});

    Box calib = enlarged_;
    if (n == 1) {
      auto add = [&](int kind) {  // 0 lo, 1 mid, 2 hi
        PartitionPiece p;
        p.psi = [cuts, kind](const Vec& x) {
          return kind == 0   ? cuts[0].chi_lo(x[0])
                 : kind == 2 ? cuts[0].chi_hi(x[0])
                             : cuts[0].chi_mid(x[0]);
        };
        if (kind == 1) {
          p.interior = true;
        } else if (kind == 0) {
          p.dom = std::make_shared<SpecialLipschitzDomain>(make_half_space(1, lo[0]));
        } else {
          Frame fr;
          fr.rot = -Mat::Identity(1, 1);
          fr.origin = Vec::Zero(1);
          p.dom = std::make_shared<SpecialLipschitzDomain>(make_half_space(1, -hi[0], fr));
        }
        if (p.dom) p.ext = std::make_shared<SteinExtension>(*p.dom, calib);
        pieces_.push_back(std::move(p));
      };
      add(0);
      add(1);
      add(2);
    } else {
      // axis frames for the four edge half-planes
      auto edge_domain = [&](int axis, bool low) {
        Frame fr;
        fr.origin = Vec::Zero(2);
        fr.rot = Mat::Zero(2, 2);
        int other = 1 - axis;
        fr.rot(0, other) = 1.0;
        fr.rot(1, axis) = low ? 1.0 : -1.0;
        double c = low ? lo[axis] : -hi[axis];
        return std::make_shared<SpecialLipschitzDomain>(make_half_space(2, c, fr));
      };
      for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
          PartitionPiece p;
          p.psi = [cuts, a, b](const Vec& x) {
            double wa = a == 0 ? cuts[0].chi_lo(x[0]) : a == 2 ? cuts[0].chi_hi(x[0]) : cuts[0].chi_mid(x[0]);
            double wb = b == 0 ? cuts[1].chi_lo(x[1]) : b == 2 ? cuts[1].chi_hi(x[1]) : cuts[1].chi_mid(x[1]);
            return wa * wb;
          };
          if (a == 1 && b == 1) {
            p.interior = true;
          } else if (a == 1 || b == 1) {
            int axis = (a == 1) ? 1 : 0;
            bool low = (axis == 1 ? b : a) == 0;
            p.dom = edge_domain(axis, low);
          } else {
            Vec apex(2), d1(2), d2(2);
            apex[0] = a == 0 ? lo[0] : hi[0];
            apex[1] = b == 0 ? lo[1] : hi[1];
            d1 = unit_vec(2, 0) * (a == 0 ? 1.0 : -1.0);
            d2 = unit_vec(2, 1) * (b == 0 ? 1.0 : -1.0);
            p.dom = std::make_shared<SpecialLipschitzDomain>(make_quadrant(apex, d1, d2));
          }
          if (p.dom) p.ext = std::make_shared<SteinExtension>(*p.dom, calib);
          pieces_.push_back(std::move(p));
        }
      }
    }
    for (const PartitionPiece& p : pieces_)
      piece_fns_.push_back(p.interior ? DomainFn{} : weighted_fn(p));
  }

  const Box& enlarged_box() const { return enlarged_; }
  double margin() const { return margin_; }
  const BHField& field() const { return *u_; }

  Vec value(const Vec& x) const {
    if (u_->domain().box().contains(x)) return u_->value(x);
    Vec acc = Vec::Zero(u_->d());
    for (size_t i = 0; i < pieces_.size(); ++i) {
      const PartitionPiece& p = pieces_[i];
      // inside a piece's domain the zero-extension of psi_i u vanishes here
      if (p.interior || p.dom->inside(x)) continue;
      acc += p.ext->value(piece_fns_[i], x);
    }
    return acc;
  }

  Mat gradient(const Vec& x) const {
    if (u_->domain().box().contains(x)) return u_->gradient(x);
    Mat acc = Mat::Zero(u_->d(), u_->n());
    for (size_t i = 0; i < pieces_.size(); ++i) {
      const PartitionPiece& p = pieces_[i];
      if (p.interior || p.dom->inside(x)) continue;
      acc += p.ext->gradient(piece_fns_[i], x);
    }
    return acc;
  }

  // psi_i u with the product-rule gradient, zero-extended beyond the box
  DomainFn weighted_fn(const PartitionPiece& p) const {
    DomainFn fn;
    fn.d = u_->d();
    const BHField* u = u_;
    auto psi = p.psi;
    fn.value = [u, psi](const Vec& y) -> Vec {
      if (!u->domain().box().contains(y)) return Vec::Zero(u->d());
      return psi(y) * u->value(y);
    };
    fn.gradient = [u, psi](const Vec& y) -> Mat {
      if (!u->domain().box().contains(y)) return Mat::Zero(u->d(), u->n());
      double w = psi(y);
      Vec grad_psi = psi_gradient(psi, y);
      Mat g = w * u->gradient(y);
      g += u->value(y) * grad_psi.transpose();
      return g;
    };
    return fn;
  }

  // D(grad E[u]) as a measure on the enlarged box: the field's own Hessian
  // inside, finite differences of the extension gradient on the margin,
  // plus the field's singular facets
  RadonMeasure hessian_extension_measure(int cells_per_axis) const {
    int n = u_->n(), d = u_->d();
    GridDomain grid = GridDomain::uniform(enlarged_.lo, enlarged_.hi, cells_per_axis);
    RadonMeasure mu(grid, d * n * n);
    Box inner = u_->domain().box();
    double fd = 0.125 * grid.spacing().minCoeff();
    int count = grid.node_count();
    std::vector<Vec> vals(static_cast<size_t>(count));
    parallel_for(count, [&](int c) {
      Vec x = grid.node(c);
      if (inner.contains(x)) {
        vals[static_cast<size_t>(c)] = u_->hessian(x).data();
      } else {
        Vec h(d * n * n);
        for (int i = 0; i < n; ++i) {
          Vec e = Vec::Zero(n);
          e[i] = fd;
          Mat gp = gradient(x + e), gm = gradient(x - e);
          Mat dg = (gp - gm) / (2.0 * fd);
          for (int k = 0; k < d; ++k)
            for (int j = 0; j < n; ++j) h[(k * n + i) * n + j] = dg(k, j);
        }
        // symmetrize the mixed entries
        SymTensor t = SymTensor::symmetrized(d, n, h);
        vals[static_cast<size_t>(c)] = t.data();
      }
    });
    for (int c = 0; c < count; ++c) mu.ac(c) = vals[static_cast<size_t>(c)];
    RadonMeasure inner_measure = hessian_measure(*u_);
    for (const auto& piece : inner_measure.singular()) {
      if (std::holds_alternative<Atom>(piece)) {
        const Atom& a = std::get<Atom>(piece);
        mu.add_atom(a.location, a.weight);
      } else {
        mu.add_facet(std::get<Facet>(piece));
      }
    }
    return mu;
  }

 private:
  static Vec psi_gradient(const std::function<double(const Vec&)>& psi, const Vec& y) {
    double h = 1e-6;
    Vec g(y.size());
    for (int i = 0; i < y.size(); ++i) {
      Vec e = Vec::Zero(y.size());
      e[i] = h;
      g[i] = (psi(y + e) - psi(y - e)) / (2.0 * h);
    }
    return g;
  }

  const BHField* u_;
  DomainFn ufn_;
  Box enlarged_;
  double margin_ = 0.0;
  std::vector<PartitionPiece> pieces_;
  std::vector<DomainFn> piece_fns_;
};

// ---- smooth area-strict approximation ----------------------------------

struct SmoothApproxTerm {
  int n = 0;                 // mollification index, eps = 1/n
  RadonMeasure hessian;      // mollified extension Hessian (grid function)
  double area = 0.0;         // area functional over the original domain
  double w11_gap = 0.0;      // L1 gaps of value and gradient against u
};

struct SmoothApproxResult {
  std::vector<SmoothApproxTerm> terms;
  RadonMeasure limit_hessian;
  double limit_area = 0.0;
  AreaStrictResult area_check;
};

inline SmoothApproxResult smooth_approximation(const BHField& u, const std::vector<int>& n_schedule,
                                               int ext_cells = 0, int gap_cells = 0,
                                               double verdict_tol = 1e-2) {
  BoundedExtension ext(u);
  const GridDomain& g = u.domain();
  int nd = g.dim();
  if (ext_cells <= 0) ext_cells = 3 * *std::max_element(g.cells().begin(), g.cells().end()) / 2;
  if (gap_cells <= 0) gap_cells = nd == 1 ? 128 : 24;
  int n_min = *std::min_element(n_schedule.begin(), n_schedule.end());
  if (1.0 / n_min > 0.9 * ext.margin())
    throw std::invalid_argument("smooth_approximation: smallest n too coarse for the margin");

  RadonMeasure mu_ext = ext.hessian_extension_measure(ext_cells);
  SmoothApproxResult out;
  out.limit_hessian = hessian_measure(u);
  out.limit_area = out.limit_hessian.area_functional();

  GridDomain gap_grid = GridDomain::uniform(g.lo(), g.hi(), gap_cells);
  for (int n : n_schedule) {
    SmoothApproxTerm term;
    term.n = n;
    double eps = 1.0 / n;
    term.hessian = mollify(mu_ext, eps);
    term.area = term.hessian.area_functional(g.box());
    // W11 distance via ball-quadrature mollification of the extension
    Mollifier mol(nd, eps);
    std::vector<std::pair<Vec, double>> ball;
    if (nd == 1) {
      const Quadrature1D& q = gauss_legendre(16);
      for (size_t i = 0; i < q.nodes.size(); ++i) {
        Vec z(1);
        z[0] = eps * q.nodes[i];
        ball.emplace_back(z, q.weights[i] * mol(z) * eps);
      }
    } else {
      const Quadrature1D& q = gauss_legendre(10);
      int nang = 10;
      for (size_t i = 0; i < q.nodes.size(); ++i) {
        double r = 0.5 * (q.nodes[i] + 1.0) * eps;
        for (int j = 0; j < nang; ++j) {
          double th = 2.0 * M_PI * (j + 0.5) / nang;
          Vec z(2);
          z[0] = r * std::cos(th);
          z[1] = r * std::sin(th);
          ball.emplace_back(z, 0.5 * eps * q.weights[i] * r * (2.0 * M_PI / nang) * mol(z));
        }
      }
    }
    double wsum = 0.0;
    for (auto& [z, w] : ball) wsum += w;
    for (auto& [z, w] : ball) w /= wsum;
    double gap = 0.0;
    int count = gap_grid.node_count();
    std::vector<double> node_gap(static_cast<size_t>(count));
    parallel_for(count, [&](int c) {
      Vec x = gap_grid.node(c);
      Vec v = Vec::Zero(u.d());
      Mat gr = Mat::Zero(u.d(), nd);
      for (auto& [z, w] : ball) {
        v += w * ext.value(x - z);
        gr += w * ext.gradient(x - z);
      }
      node_gap[static_cast<size_t>(c)] =
          (v - u.value(x)).norm() + (gr - u.gradient(x)).norm();
    });
    for (int c = 0; c < count; ++c) gap += node_gap[static_cast<size_t>(c)] * gap_grid.cell_volume();
    term.w11_gap = gap;
    out.terms.push_back(std::move(term));
  }
  std::vector<RadonMeasure> seq;
  for (auto& t : out.terms) seq.push_back(t.hessian);
  auto tests = default_test_functions(g, u.d() * nd * nd, 5);
  out.area_check = check_area_strict(seq, out.limit_hessian, tests, verdict_tol, g.box());
  return out;
}

// ---- translation + mollification on a special Lipschitz domain ----------

struct TranslateMollifyResult {
  SmoothFieldFn field;
  double w21_norm = 0.0;   // over the window
  double hess_l1 = 0.0;    // integral of |hessian| over the window
  double bh_norm = 0.0;    // of u over the window (bound reference)
  double w11_gap = 0.0;    // distance to u over the window
};

// phi_eps * T_delta u; requires eps < delta / (1 + L)
inline TranslateMollifyResult translate_mollify(const BHField& u,
                                                const SpecialLipschitzDomain& dom, double delta,
                                                double eps, const Box& window, int window_cells = 64) {
  if (eps >= delta / (1.0 + dom.lipschitz_constant()))
    throw std::invalid_argument("translate_mollify: eps must be < delta/(1+L)");
  int nd = u.n();
  Vec shift = delta * dom.frame().vertical_world();
  Mollifier mol(nd, eps);
  // ball quadrature, normalized
  std::vector<std::pair<Vec, double>> ball;
  if (nd == 1) {
    const Quadrature1D& q = gauss_legendre(16);
    for (size_t i = 0; i < q.nodes.size(); ++i) {
      Vec z(1);
      z[0] = eps * q.nodes[i];
      ball.emplace_back(z, q.weights[i] * mol(z) * eps);
    }
  } else {
    const Quadrature1D& q = gauss_legendre(12);
    int nang = 12;
    for (size_t i = 0; i < q.nodes.size(); ++i) {
      double r = 0.5 * (q.nodes[i] + 1.0) * eps;
      for (int j = 0; j < nang; ++j) {
        double th = 2.0 * M_PI * (j + 0.5) / nang;
        Vec z(2);
        z[0] = r * std::cos(th);
        z[1] = r * std::sin(th);
        ball.emplace_back(z, 0.5 * eps * q.weights[i] * r * (2.0 * M_PI / nang) * mol(z));
      }
    }
  }
  double wsum = 0.0;
  for (auto& [z, w] : ball) wsum += w;
  for (auto& [z, w] : ball) w /= wsum;

  auto hmu = std::make_shared<RadonMeasure>(hessian_measure(u));
  auto ball_sh = std::make_shared<std::vector<std::pair<Vec, double>>>(std::move(ball));
  const BHField* up = &u;

  TranslateMollifyResult out;
  out.field.value = [up, ball_sh, shift](const Vec& x) {
    Vec acc = Vec::Zero(up->d());
    for (auto& [z, w] : *ball_sh) acc += w * up->value(x + shift - z);
    return acc;
  };
  out.field.gradient = [up, ball_sh, shift](const Vec& x) {
    Mat acc = Mat::Zero(up->d(), up->n());
    for (auto& [z, w] : *ball_sh) acc += w * up->gradient(x + shift - z);
    return acc;
  };
  int d = u.d();
  out.field.hessian = [hmu, shift, eps, d, nd](const Vec& x) {
    Mollifier m(nd, eps);
    Vec flat = ac_convolution(*hmu, x + shift, m) + singular_convolution(*hmu, x + shift, m);
    return SymTensor::symmetrized(d, nd, flat);
  };

  GridDomain wgrid = GridDomain::uniform(window.lo, window.hi, window_cells);
  double w21 = 0.0, gap = 0.0, hl1 = 0.0;
  for (int c = 0; c < wgrid.node_count(); ++c) {
    Vec x = wgrid.node(c);
    Vec v = out.field.value(x);
    Mat gr = out.field.gradient(x);
    SymTensor hs = out.field.hessian(x);
    w21 += (v.norm() + gr.norm() + hs.norm()) * wgrid.cell_volume();
    hl1 += hs.norm() * wgrid.cell_volume();
    gap += ((v - u.value(x)).norm() + (gr - u.gradient(x)).norm()) * wgrid.cell_volume();
  }
  out.w21_norm = w21;
  out.hess_l1 = hl1;
  out.w11_gap = gap;
  FieldNorms nm = norms(u);
  out.bh_norm = nm.bh();
  return out;
}

}  // namespace bhr

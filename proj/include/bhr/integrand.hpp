#pragma once

// Integrands f(x, H) with certified growth/continuity/coercivity metadata,
// recession functions and their sampled surrogates, and the transform onto
// the unit ball used by the area-strict continuity theorem.

#include "bhr/grid.hpp"
#include "bhr/tensor.hpp"

#include <memory>

namespace bhr {

struct Integrand {
  std::string name;
  std::function<double(const Vec&, const SymTensor&)> eval;
  double growth_c = 1.0;                                   // H1 constant
  std::function<double(double)> modulus = [](double) { return 0.0; };  // H2
  std::optional<double> coercivity_c;                      // H3, in (0,1)
  std::optional<double> recession_alpha;                   // rate exponent > 1
  bool convex_in_h = false;      // enables the closed-form envelope path
  bool x_dependent = false;
  // analytic recession when available (exact for the catalog)
  std::function<double(const Vec&, const SymTensor&)> analytic_recession;
  // analytic H-gradient (full-sum convention: df = sum over all k,i,j)
  std::function<SymTensor(const Vec&, const SymTensor&)> grad_h;

  double operator()(const Vec& x, const SymTensor& h) const { return eval(x, h); }
};

struct RecessionFn {
  enum class Source { analytic, estimated };
  std::function<double(const Vec&, const SymTensor&)> eval;
  Source source = Source::estimated;
  double t_max = 0.0;       // for estimated recessions
  double alpha = 0.0;

  double operator()(const Vec& x, const SymTensor& h) const { return eval(x, h); }
};

// ---- hypothesis validation ------------------------------------------------

struct SamplePlan {
  std::vector<Vec> x_points;
  std::vector<SymTensor> h_directions;  // unit tensors
  std::vector<double> radii;            // includes 0 and large radii
};

inline SamplePlan default_sample_plan(const GridDomain& domain, int d, int n, uint64_t seed = 0,
                                      int x_count = 9, int dir_count = 16) {
  SamplePlan plan;
  Rng rng(seed);
  for (int i = 0; i < x_count; ++i) {
    Vec x(domain.dim());
    for (int k = 0; k < domain.dim(); ++k)
      x[k] = domain.lo()[k] + (domain.hi()[k] - domain.lo()[k]) * uniform(rng, 0.0, 1.0);
    plan.x_points.push_back(std::move(x));
  }
  for (int i = 0; i < dir_count; ++i) plan.h_directions.push_back(random_unit_sym_tensor(rng, d, n));
  plan.radii = {0.0, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 100.0, 1000.0};
  return plan;
}

struct HypothesisReport {
  bool h1_ok = false, h2_ok = false, h3_ok = true;
  double h1_worst_margin = std::numeric_limits<double>::infinity();  // C(1+|H|) - f
  double h1_min_value = std::numeric_limits<double>::infinity();     // nonnegativity
  double h2_worst_margin = std::numeric_limits<double>::infinity();
  double h3_worst_margin = std::numeric_limits<double>::infinity();  // f - c|H|
  double inf_ratio = std::numeric_limits<double>::infinity();        // inf f/|H| over samples
  bool finite = true;
};

inline HypothesisReport validate(const Integrand& f, const SamplePlan& plan) {
  HypothesisReport rep;
  rep.h1_ok = rep.h2_ok = true;
  for (const Vec& x : plan.x_points) {
    for (const SymTensor& dir : plan.h_directions) {
      for (double r : plan.radii) {
        SymTensor h = dir;
        h *= r;
        double v = f(x, h);
        if (!std::isfinite(v)) {
          rep.finite = false;
          rep.h1_ok = rep.h2_ok = rep.h3_ok = false;
          return rep;
        }
        rep.h1_min_value = std::min(rep.h1_min_value, v);
        double margin = f.growth_c * (1.0 + h.norm()) - v;
        rep.h1_worst_margin = std::min(rep.h1_worst_margin, margin);
        if (v < 0.0 || margin < -1e-12 * (1.0 + std::abs(v))) rep.h1_ok = false;
        if (h.norm() > 0.0) rep.inf_ratio = std::min(rep.inf_ratio, v / h.norm());
        if (f.coercivity_c) {
          double m3 = v - *f.coercivity_c * h.norm();
          rep.h3_worst_margin = std::min(rep.h3_worst_margin, m3);
          if (m3 < -1e-12 * (1.0 + std::abs(v))) rep.h3_ok = false;
        }
      }
    }
  }
  for (size_t i = 0; i < plan.x_points.size(); ++i) {
    for (size_t j = i + 1; j < plan.x_points.size(); ++j) {
      double dist = (plan.x_points[i] - plan.x_points[j]).norm();
      double wbound = f.modulus(dist);
      for (const SymTensor& dir : plan.h_directions) {
        for (double r : plan.radii) {
          SymTensor h = dir;
          h *= r;
          double diff = std::abs(f(plan.x_points[i], h) - f(plan.x_points[j], h));
          double margin = wbound * (1.0 + h.norm()) - diff;
          rep.h2_worst_margin = std::min(rep.h2_worst_margin, margin);
          if (margin < -1e-10 * (1.0 + h.norm())) rep.h2_ok = false;
        }
      }
    }
  }
  return rep;
}

// ---- recession --------------------------------------------------------

inline std::vector<double> geometric_schedule(int kmax = 20) {
  std::vector<double> t;
  for (int k = 0; k <= kmax; ++k) t.push_back(std::pow(2.0, k));
  return t;
}

struct RecessionResult {
  double value = 0.0;              // limsup surrogate: max of f(x,tH)/t over the tail
  std::vector<double> ratios;      // per schedule entry
  bool rate_checked = false;
  bool rate_ok = true;
  double worst_rate_gap = 0.0;     // max of |f(x,t Hhat)/t - value/|H|| * t^alpha
};

inline RecessionResult recession(const Integrand& f, const Vec& x, const SymTensor& h,
                                 const std::vector<double>& t_schedule) {
  if (t_schedule.size() < 4) throw std::invalid_argument("recession: schedule too short");
  if (t_schedule.back() < 1e3) throw std::invalid_argument("recession: schedule max must be >= 1e3");
  RecessionResult r;
  for (double t : t_schedule) {
    SymTensor th = h;
    th *= t;
    r.ratios.push_back(f(x, th) / t);
  }
  size_t tail = std::max<size_t>(1, t_schedule.size() / 4);
  for (size_t i = r.ratios.size() - tail; i < r.ratios.size(); ++i)
    r.value = std::max(r.value, r.ratios[i]);
  double hn = h.norm();
  if (f.recession_alpha && hn > 0.0) {
    r.rate_checked = true;
    SymTensor hhat = h;
    hhat *= 1.0 / hn;
    for (double t : t_schedule) {
      SymTensor th = hhat;
      th *= t;
      double gap = std::abs(f(x, th) / t - r.value / hn);
      r.worst_rate_gap = std::max(r.worst_rate_gap, gap * std::pow(t, *f.recession_alpha));
    }
    r.rate_ok = r.worst_rate_gap <= f.growth_c * (1.0 + 1e-9);
  }
  return r;
}

inline RecessionFn recession_fn(const Integrand& f, const std::vector<double>& t_schedule) {
  if (f.analytic_recession)
    return RecessionFn{f.analytic_recession, RecessionFn::Source::analytic, 0.0,
                       f.recession_alpha.value_or(0.0)};
  auto sched = t_schedule;
  return RecessionFn{[&f, sched](const Vec& x, const SymTensor& h) {
                       return recession(f, x, h, sched).value;
                     },
                     RecessionFn::Source::estimated, sched.back(),
                     f.recession_alpha.value_or(0.0)};
}

// ---- lower/upper approximate recessions (f_#, f^#) ---------------------

struct NeighborhoodSample {
  Vec x;
  SymTensor h;
  double t;
};

inline std::vector<NeighborhoodSample> default_neighborhood_sampler(const Vec& x,
                                                                    const SymTensor& h,
                                                                    uint64_t seed = 0,
                                                                    int count = 64) {
  std::vector<NeighborhoodSample> out;
  Rng rng(seed);
  std::vector<double> ts = {1e3, 1e4, 1e5, 1e6};
  for (double t : ts) out.push_back({x, h, t});  // the exact point is always included
  for (int i = 0; i < count; ++i) {
    double t = ts[static_cast<size_t>(i) % ts.size()];
    double shrink = 1.0 / std::sqrt(t);
    Vec xp = x;
    for (int k = 0; k < x.size(); ++k) xp[k] += shrink * 0.1 * normal(rng);
    SymTensor hp = h;
    SymTensor noise = random_sym_tensor(rng, h.d(), h.n());
    noise *= shrink * 0.1;
    hp += noise;
    out.push_back({xp, hp, t});
  }
  return out;
}

struct LowerUpperRecession {
  double lower = 0.0, upper = 0.0;
  bool lambda_gap_checked = false;
  double lambda_gap = 0.0;  // |upper - lower| when H is a cone direction
};

inline LowerUpperRecession lower_upper_recession(const Integrand& f, const Vec& x,
                                                 const SymTensor& h,
                                                 const std::vector<NeighborhoodSample>& samples,
                                                 double lambda_tol = 1e-10) {
  if (samples.empty()) throw std::invalid_argument("lower_upper_recession: sampler empty");
  LowerUpperRecession r;
  r.lower = std::numeric_limits<double>::infinity();
  r.upper = -std::numeric_limits<double>::infinity();
  for (const auto& s : samples) {
    SymTensor th = s.h;
    th *= s.t;
    double v = f(s.x, th) / s.t;
    r.lower = std::min(r.lower, v);
    r.upper = std::max(r.upper, v);
  }
  (void)x;
  if (is_lambda_direction(h, lambda_tol)) {
    r.lambda_gap_checked = true;
    r.lambda_gap = r.upper - r.lower;
  }
  return r;
}

// ---- transform onto the open unit ball ---------------------------------

struct EClassTransform {
  // T(xi) = (1 - |xi|) f(x, xi / (1 - |xi|)) for |xi| < 1
  std::function<double(const SymTensor&)> eval;
  bool clamped = false;  // an evaluation overflowed near the boundary
};

struct EClassDirectionReport {
  bool cauchy = false;
  double boundary_limit = 0.0;
  double recession_value = 0.0;
  double gap = 0.0;
};

inline EClassTransform eclass_transform(const Integrand& f, const Vec& x) {
  auto clamped = std::make_shared<bool>(false);
  EClassTransform t;
  t.eval = [&f, x, clamped](const SymTensor& xi) {
    double r = xi.norm();
    if (r >= 1.0) throw std::invalid_argument("eclass_transform: |xi| must be < 1");
    SymTensor h = xi;
    h *= 1.0 / (1.0 - r);
    double v = f(x, h);
    if (!std::isfinite(v)) {
      *clamped = true;
      return std::numeric_limits<double>::max() * (1.0 - r);
    }
    return (1.0 - r) * v;
  };
  return t;
}

// radial limits of the transform along a direction, compared with the
// recession value there
inline EClassDirectionReport eclass_boundary_report(const Integrand& f, const Vec& x,
                                                    const SymTensor& direction, double tol = 1e-6,
                                                    int kmax = 24) {
  SymTensor dir = direction;
  dir *= 1.0 / direction.norm();
  EClassTransform t = eclass_transform(f, x);
  EClassDirectionReport rep;
  std::vector<double> vals;
  for (int k = 4; k <= kmax; ++k) {
    double r = 1.0 - std::pow(2.0, -k);
    SymTensor xi = dir;
    xi *= r;
    vals.push_back(t.eval(xi));
  }
  rep.boundary_limit = vals.back();
  rep.cauchy = true;
  for (size_t i = vals.size() - 4; i + 1 < vals.size(); ++i)
    if (std::abs(vals[i + 1] - vals[i]) > tol * (1.0 + std::abs(vals.back()))) rep.cauchy = false;
  rep.recession_value = recession(f, x, dir, geometric_schedule(24)).value;
  rep.gap = std::abs(rep.boundary_limit - rep.recession_value);
  return rep;
}

// ---- catalog ------------------------------------------------------------

inline Integrand make_area_integrand() {
  Integrand f;
  f.name = "area";
  f.eval = [](const Vec&, const SymTensor& h) { return std::sqrt(1.0 + h.data().squaredNorm()); };
  f.growth_c = 1.0;
  f.coercivity_c = 0.9;
  f.recession_alpha = 2.0;
  f.convex_in_h = true;
  f.analytic_recession = [](const Vec&, const SymTensor& h) { return h.norm(); };
  f.grad_h = [](const Vec&, const SymTensor& h) {
    SymTensor g = h;
    g *= 1.0 / std::sqrt(1.0 + h.data().squaredNorm());
    return g;
  };
  return f;
}

inline Integrand make_tv_integrand() {
  Integrand f;
  f.name = "tv";
  f.eval = [](const Vec&, const SymTensor& h) { return h.norm(); };
  f.growth_c = 1.0;
  f.coercivity_c = 0.99;
  f.recession_alpha = 2.0;
  f.convex_in_h = true;
  f.analytic_recession = [](const Vec&, const SymTensor& h) { return h.norm(); };
  f.grad_h = [](const Vec&, const SymTensor& h) {
    double n = h.norm();
    SymTensor g = h;
    g *= n > 1e-14 ? 1.0 / n : 0.0;
    return g;
  };
  return f;
}

// min(|H - A|, |H + A|) for a unit cone tensor A
inline Integrand make_double_well_integrand(const SymTensor& well) {
  Integrand f;
  f.name = "double-well";
  SymTensor a = well;
  f.eval = [a](const Vec&, const SymTensor& h) {
    return std::min((h - a).norm(), (h + a).norm());
  };
  f.growth_c = 1.0 + a.norm();
  f.analytic_recession = [](const Vec&, const SymTensor& h) { return h.norm(); };
  f.grad_h = [a](const Vec&, const SymTensor& h) {
    SymTensor dm = h - a, dp = h + a;
    SymTensor g = dm.norm() <= dp.norm() ? dm : dp;
    double n = g.norm();
    g *= n > 1e-14 ? 1.0 / n : 0.0;
    return g;
  };
  return f;
}

// (1 + x_1^2) |H|; the modulus constant assumes the domain sits in the unit box
inline Integrand make_x_weighted_integrand() {
  Integrand f;
  f.name = "x-weighted";
  f.eval = [](const Vec& x, const SymTensor& h) { return (1.0 + x[0] * x[0]) * h.norm(); };
  f.growth_c = 2.0;
  f.modulus = [](double s) { return 2.0 * s; };
  f.coercivity_c = 0.99;
  f.recession_alpha = 2.0;
  f.convex_in_h = true;
  f.x_dependent = true;
  f.analytic_recession = [](const Vec& x, const SymTensor& h) {
    return (1.0 + x[0] * x[0]) * h.norm();
  };
  f.grad_h = [](const Vec& x, const SymTensor& h) {
    double n = h.norm();
    SymTensor g = h;
    g *= n > 1e-14 ? (1.0 + x[0] * x[0]) / n : 0.0;
    return g;
  };
  return f;
}

inline Integrand make_catalog_integrand(const std::string& name, int d = 1, int n = 1,
                                        double well_scale = 1.0) {
  if (name == "area") return make_area_integrand();
  if (name == "tv") return make_tv_integrand();
  if (name == "x-weighted") return make_x_weighted_integrand();
  if (name == "double-well") {
    SymTensor a = SymTensor::zero(d, n);
    a.set(0, 0, 0, 1.0);
    a *= well_scale / a.norm();
    return make_double_well_integrand(a);
  }
  throw std::invalid_argument("unknown integrand: " + name);
}

}  // namespace bhr

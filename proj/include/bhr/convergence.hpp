#pragma once

// Convergence diagnostics for sequences of measures: weak-* pairing gaps
// against compactly supported test functions, the area-strict criterion, and
// the Reshetnyak lower-semicontinuity check for 1-homogeneous convex
// integrands of the polar.

#include "bhr/measure.hpp"

namespace bhr {

// compactly supported R^m-valued test function
using TestFn = std::function<Vec(const Vec&)>;

inline double pairing(const TestFn& psi, const RadonMeasure& mu) {
  double s = mu.domain().integrate(
      [&](int c, const Vec& x) { return psi(x).dot(mu.ac(c)); });
  for (const auto& p : mu.singular()) {
    if (std::holds_alternative<Atom>(p)) {
      const Atom& a = std::get<Atom>(p);
      s += psi(a.location).dot(a.weight);
    } else {
      const Facet& f = std::get<Facet>(p);
      const Quadrature1D& q = gauss_legendre(16);
      double sl = f.sub_length();
      for (int i = 0; i < f.nsub(); ++i) {
        double mid = (i + 0.5) * sl, half = 0.5 * sl;
        for (size_t k = 0; k < q.nodes.size(); ++k) {
          double t = mid + half * q.nodes[k];
          s += q.weights[k] * half * psi(f.point(t)).dot(f.density[static_cast<size_t>(i)]);
        }
      }
    }
  }
  return s;
}

// smooth bumps at deterministic centers/scales, one vector component each
inline std::vector<TestFn> default_test_functions(const GridDomain& domain, int m, int count) {
  std::vector<TestFn> out;
  Rng rng(12345);
  int nd = domain.dim();
  for (int k = 0; k < count; ++k) {
    Vec center(nd), scale(nd);
    for (int i = 0; i < nd; ++i) {
      double w = domain.hi()[i] - domain.lo()[i];
      center[i] = domain.lo()[i] + w * uniform(rng, 0.25, 0.75);
      scale[i] = w * uniform(rng, 0.15, 0.3);
    }
    int comp = k % m;
    double amp = uniform(rng, 0.5, 2.0);
    out.push_back([center, scale, comp, amp, m](const Vec& x) {
      double t2 = 0.0;
      for (int i = 0; i < x.size(); ++i) {
        double u = (x[i] - center[i]) / scale[i];
        t2 += u * u;
      }
      Vec v = Vec::Zero(m);
      v[comp] = amp * bump_raw(t2);
      return v;
    });
  }
  return out;
}

struct WeakStarRow {
  double max_gap = 0.0;              // over the test set
  std::vector<double> per_test;
};

struct WeakStarTable {
  std::vector<WeakStarRow> rows;     // one per sequence term
  bool converged = false;            // final row below tolerance
  double final_gap = 0.0;
};

inline WeakStarTable weakstar_gap(const std::vector<RadonMeasure>& sequence,
                                  const RadonMeasure& limit, const std::vector<TestFn>& tests,
                                  double tol = 1e-6) {
  WeakStarTable table;
  std::vector<double> limit_pairings(tests.size());
  for (size_t t = 0; t < tests.size(); ++t) limit_pairings[t] = pairing(tests[t], limit);
  for (const RadonMeasure& mu_n : sequence) {
    WeakStarRow row;
    row.per_test.resize(tests.size());
    for (size_t t = 0; t < tests.size(); ++t) {
      row.per_test[t] = std::abs(pairing(tests[t], mu_n) - limit_pairings[t]);
      row.max_gap = std::max(row.max_gap, row.per_test[t]);
    }
    table.rows.push_back(std::move(row));
  }
  if (!table.rows.empty()) {
    table.final_gap = table.rows.back().max_gap;
    table.converged = table.final_gap < tol;
  }
  return table;
}

struct AreaStrictResult {
  bool area_strict = false;
  double final_weakstar_gap = 0.0;
  double final_area_gap = 0.0;
  std::vector<double> areas;
  double limit_area = 0.0;
};

// weak-* gap below tol on the test set AND area functional gap below tol, on
// the tail of the sequence
inline AreaStrictResult check_area_strict(const std::vector<RadonMeasure>& sequence,
                                          const RadonMeasure& limit,
                                          const std::vector<TestFn>& tests, double tol,
                                          const Box& region) {
  AreaStrictResult r;
  r.limit_area = limit.area_functional(region);
  for (const RadonMeasure& mu_n : sequence) r.areas.push_back(mu_n.area_functional(region));
  WeakStarTable ws = weakstar_gap(sequence, limit, tests, tol);
  r.final_weakstar_gap = ws.final_gap;
  r.final_area_gap = r.areas.empty() ? 0.0 : std::abs(r.areas.back() - r.limit_area);
  r.area_strict = ws.converged && r.final_area_gap < tol;
  return r;
}

inline AreaStrictResult check_area_strict(const std::vector<RadonMeasure>& sequence,
                                          const RadonMeasure& limit,
                                          const std::vector<TestFn>& tests, double tol) {
  return check_area_strict(sequence, limit, tests, tol, limit.domain().box());
}

// integral of G(d mu / d|mu|) d|mu| for positively 1-homogeneous G, which is
// the integral of G against the density by homogeneity
inline double reshetnyak_energy(const RadonMeasure& mu, const std::function<double(const Vec&)>& g,
                                const Box& region) {
  double s = mu.domain().integrate([&](int c, const Vec&) { return g(mu.ac(c)); }, region);
  for (const auto& p : mu.singular()) {
    if (std::holds_alternative<Atom>(p)) {
      const Atom& a = std::get<Atom>(p);
      if (region.contains(a.location)) s += g(a.weight);
    } else {
      const Facet& f = std::get<Facet>(p);
      auto [t0, t1] = f.clip_params(region);
      if (t1 <= t0) continue;
      double sl = f.sub_length();
      for (int i = 0; i < f.nsub(); ++i) {
        double a = std::max(t0, i * sl), b = std::min(t1, (i + 1) * sl);
        if (b > a) s += g(f.density[static_cast<size_t>(i)]) * (b - a);
      }
    }
  }
  return s;
}

struct ReshetnyakReport {
  bool homogeneity_ok = true;
  bool weakstar_ok = false;
  bool lsc_ok = false;
  double liminf_surrogate = 0.0;  // min over the last K terms
  double limit_value = 0.0;
  std::vector<double> energies;
};

// liminf_n int G(polar) d|mu_n| >= int G(polar) d|mu| - tol, with the liminf
// replaced by the minimum over the last K terms; weak-* convergence is
// verified first, and G is spot-checked for positive 1-homogeneity.
inline ReshetnyakReport reshetnyak_lsc_check(const std::vector<RadonMeasure>& sequence,
                                             const RadonMeasure& limit,
                                             const std::function<double(const Vec&)>& g,
                                             const std::vector<TestFn>& tests, double tol,
                                             int tail_k = 5) {
  ReshetnyakReport rep;
  Rng rng(777);
  int m = limit.value_dim();
  for (int s = 0; s < 16; ++s) {
    Vec xi = random_unit(rng, m) * uniform(rng, 0.1, 10.0);
    if (std::abs(g(2.0 * xi) - 2.0 * g(xi)) > 1e-9 * (1.0 + std::abs(g(xi)))) {
      rep.homogeneity_ok = false;
      return rep;
    }
  }
  WeakStarTable ws = weakstar_gap(sequence, limit, tests, tol);
  rep.weakstar_ok = ws.converged;
  Box region = limit.domain().box();
  rep.limit_value = reshetnyak_energy(limit, g, region);
  for (const RadonMeasure& mu_n : sequence)
    rep.energies.push_back(reshetnyak_energy(mu_n, g, mu_n.domain().box()));
  size_t k0 = rep.energies.size() > static_cast<size_t>(tail_k)
                  ? rep.energies.size() - static_cast<size_t>(tail_k)
                  : 0;
  rep.liminf_surrogate = std::numeric_limits<double>::infinity();
  for (size_t i = k0; i < rep.energies.size(); ++i)
    rep.liminf_surrogate = std::min(rep.liminf_surrogate, rep.energies[i]);
  rep.lsc_ok = rep.weakstar_ok && rep.liminf_surrogate >= rep.limit_value - tol;
  return rep;
}

}  // namespace bhr

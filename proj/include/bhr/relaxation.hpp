#pragma once

// Energies F[u] and the relaxed G[u] (envelope on the absolutely continuous
// part, envelope recession against the polar on the singular part), the
// upper-bound harness driven by the smooth area-strict approximation, the
// structured lower-bound probes, and coercive regularization.

#include "bhr/envelope.hpp"
#include "bhr/extension.hpp"

namespace bhr {

struct EnergySpec {
  Integrand f;
  EnvelopeSettings envelope;
  std::vector<double> recession_schedule = geometric_schedule(14);
  int liminf_tail = 5;
};

inline HypothesisReport validate_spec(const EnergySpec& spec, const GridDomain& domain, int d,
                                      int n) {
  return validate(spec.f, default_sample_plan(domain, d, n));
}

// integral of f(x, hessian) for fields without gradient jumps
inline double energy_F(const BHField& u, const EnergySpec& spec) {
  for (const FieldFacet& f : u.facets())
    if (f.jump_a.norm() > 1e-12)
      throw std::invalid_argument("energy_F: field has gradient jumps; use energy_relaxed_G");
  return detail::integrate_field(u, [&](const Vec& x) { return spec.f(x, u.hessian(x)); });
}

inline double energy_F(const SmoothFieldFn& u, const GridDomain& grid, const EnergySpec& spec) {
  return grid.integrate([&](int, const Vec& x) { return spec.f(x, u.hessian(x)); });
}

// substituted energy of a mollified Hessian measure over a region
inline double energy_of_hessian_density(const RadonMeasure& hess, const Box& region,
                                        const std::function<double(const Vec&, const SymTensor&)>& g,
                                        int d, int n) {
  return hess.domain().integrate(
      [&](int c, const Vec& x) { return g(x, SymTensor::symmetrized(d, n, hess.ac(c))); }, region);
}

// G[u] = integral of Q2f(x, grad^2 u) + integral of (Q2f)^inf(x, polar) d|D_s|
inline double energy_relaxed_G(const BHField& u, const EnergySpec& spec) {
  EnvelopeBackend backend(spec.f, spec.envelope);
  double ac_part = detail::integrate_field(
      u, [&](const Vec& x) { return backend.q2(x, u.hessian(x)); });
  double sing_part = 0.0;
  RadonMeasure mu = hessian_measure(u);
  int d = u.d(), n = u.n();
  for (const auto& piece : mu.singular()) {
    if (std::holds_alternative<Atom>(piece)) {
      const Atom& a = std::get<Atom>(piece);
      SymTensor dir = SymTensor::symmetrized(d, n, a.weight);
      sing_part += backend.q2_recession(a.location, dir);
    } else {
      const Facet& fc = std::get<Facet>(piece);
      double sl = fc.sub_length();
      const Quadrature1D& q = gauss_legendre(8);
      for (int i = 0; i < fc.nsub(); ++i) {
        SymTensor dens = SymTensor::symmetrized(d, n, fc.density[static_cast<size_t>(i)]);
        double mid = (i + 0.5) * sl, half = 0.5 * sl;
        for (size_t k = 0; k < q.nodes.size(); ++k) {
          Vec x = fc.point(mid + half * q.nodes[k]);
          sing_part += q.weights[k] * half * backend.q2_recession(x, dens);
        }
      }
    }
  }
  return ac_part + sing_part;
}

// ---- upper bound: area-strict approximation ------------------------------

struct RelaxationReport {
  double g_value = 0.0;
  std::vector<int> n_schedule;
  std::vector<double> substituted;  // envelope-substituted energies along u_n
  std::vector<double> raw_f;        // plain F[u_n]
  double upper_gap = 0.0;           // |substituted tail - G|
  double weakstar_final = 0.0;
  double area_final_gap = 0.0;
  bool upper_ok = false;

  struct Probe {
    std::string name;
    std::vector<double> energies;
    std::vector<double> w21_norms;
    std::vector<double> l1_gaps;
    bool admissible = true;
    std::string exclusion_reason;
    double liminf_surrogate = 0.0;
  };
  std::vector<Probe> probes;
  double lower_margin = 0.0;  // min over admissible probes of liminf - G
  bool lower_ok = false;
};

inline RelaxationReport verify_upper_bound(const BHField& u, const EnergySpec& spec,
                                           const std::vector<int>& n_schedule, double tol = 0.02,
                                           int ext_cells = 0, int gap_cells = 0) {
  RelaxationReport rep;
  rep.n_schedule = n_schedule;
  rep.g_value = energy_relaxed_G(u, spec);
  SmoothApproxResult approx = smooth_approximation(u, n_schedule, ext_cells, gap_cells);
  EnvelopeBackend backend(spec.f, spec.envelope);
  int d = u.d(), n = u.n();
  for (const SmoothApproxTerm& term : approx.terms) {
    rep.substituted.push_back(energy_of_hessian_density(
        term.hessian, u.domain().box(),
        [&](const Vec& x, const SymTensor& h) { return backend.q2(x, h); }, d, n));
    rep.raw_f.push_back(energy_of_hessian_density(
        term.hessian, u.domain().box(),
        [&](const Vec& x, const SymTensor& h) { return spec.f(x, h); }, d, n));
  }
  rep.weakstar_final = approx.area_check.final_weakstar_gap;
  rep.area_final_gap = approx.area_check.final_area_gap;
  rep.upper_gap = std::abs(rep.substituted.back() - rep.g_value);
  rep.upper_ok = rep.upper_gap <= tol * std::max(1.0, std::abs(rep.g_value));
  return rep;
}

// ---- lower bound probes ----------------------------------------------------

struct ProbeSequence {
  std::string name;
  std::vector<double> energies;
  std::vector<double> w21_norms;
  std::vector<double> l1_gaps;
};

using ProbeGenerator =
    std::function<ProbeSequence(const BHField&, const EnergySpec&, const std::vector<int>&)>;

// mollification sequence u_n = E[u] * phi_{1/n}
inline ProbeGenerator mollification_probe(int ext_cells = 0, int gap_cells = 0) {
  return [ext_cells, gap_cells](const BHField& u, const EnergySpec& spec,
                                const std::vector<int>& ns) {
    ProbeSequence seq;
    seq.name = "mollification";
    SmoothApproxResult approx = smooth_approximation(u, ns, ext_cells, gap_cells);
    FieldNorms base = norms(u);
    int d = u.d(), n = u.n();
    for (const SmoothApproxTerm& term : approx.terms) {
      seq.energies.push_back(energy_of_hessian_density(
          term.hessian, u.domain().box(),
          [&](const Vec& x, const SymTensor& h) { return spec.f(x, h); }, d, n));
      seq.w21_norms.push_back(base.w11() + term.w11_gap +
                              term.hessian.total_variation(u.domain().box()));
      seq.l1_gaps.push_back(term.w11_gap);
    }
    return seq;
  };
}

// 1D kink fields: curvature oscillates between the directional wells of f
// away from the kink, with a steep climb realizing the gradient jump
inline ProbeGenerator laminate_probe() {
  return [](const BHField& u, const EnergySpec& spec, const std::vector<int>& ns) {
    if (u.n() != 1 || u.d() != 1)
      throw std::invalid_argument("laminate_probe: 1D scalar fields only");
    ProbeSequence seq;
    seq.name = "laminate";
    double a = u.domain().lo()[0], b = u.domain().hi()[0];
    if (u.facets().size() != 1) throw std::invalid_argument("laminate_probe: need one kink");
    double c = u.facets()[0].offset;
    double jump = u.facets()[0].jump_a[0];
    // directional wells from the 1D hull of f at zero curvature
    Vec xmid = make_vec({0.5 * (a + b)});
    int pts = 513;
    std::vector<double> ts(static_cast<size_t>(pts)), vs(static_cast<size_t>(pts));
    for (int i = 0; i < pts; ++i) {
      double t = -4.0 + 8.0 * i / (pts - 1);
      ts[static_cast<size_t>(i)] = t;
      vs[static_cast<size_t>(i)] = spec.f(xmid, SymTensor::scalar(t));
    }
    ConvexHull1D hull(ts, vs);
    auto [tm, tp] = hull.segment_at(0.0);
    bool oscillate = tp - tm > 1e-9;
    for (int n : ns) {
      double w = std::min(0.25 * std::min(c - a, b - c), 1.0 / (4.0 * n));
      double climb = jump / (2.0 * w);
      // assemble breakpoints and curvatures: left waves, climb, right waves
      std::vector<double> breaks;
      std::vector<double> curvs;  // one per interval
      auto add_waves = [&](double x0, double x1) {
        if (!oscillate) {
          curvs.push_back(0.0);
          if (x1 < b - 1e-14) breaks.push_back(x1);
          return;
        }
        int k = std::max(1, static_cast<int>(std::round((x1 - x0) * n)));
        double period = (x1 - x0) / k;
        double theta = tp / (tp - tm);
        for (int j = 0; j < k; ++j) {
          double p0 = x0 + j * period;
          breaks.push_back(p0 + theta * period);
          curvs.push_back(tm);
          if (j + 1 < k || x1 < b - 1e-14) breaks.push_back(p0 + period);
          curvs.push_back(tp);
        }
      };
      add_waves(a, c - w);
      curvs.push_back(climb);
      breaks.push_back(c + w);
      add_waves(c + w, b);
      // integrate twice from the exact left boundary data
      std::vector<Polynomial> polys;
      double uval = u.value(make_vec({a}))[0];
      double uprime = u.gradient(make_vec({a}))(0, 0);
      double x0 = a;
      for (size_t i = 0; i < curvs.size(); ++i) {
        double x1 = i < breaks.size() ? breaks[i] : b;
        Polynomial p(1);
        // u0 + u1 (x - x0) + (k/2)(x - x0)^2 expanded in x
        double k2 = 0.5 * curvs[i];
        p.coef(0) = uval - uprime * x0 + k2 * x0 * x0;
        p.coef(1) = uprime - 2.0 * k2 * x0;
        p.coef(2) = k2;
        polys.push_back(std::move(p));
        double hx = x1 - x0;
        uval += uprime * hx + k2 * hx * hx;
        uprime += curvs[i] * hx;
        x0 = x1;
      }
      BHField un = piecewise_poly_1d(u.domain(), breaks, polys);
      seq.energies.push_back(energy_F(un, spec));
      FieldNorms nm = norms(un);
      seq.w21_norms.push_back(nm.w11() + nm.bh_semi);
      double gap = detail::integrate_field(
          un, [&](const Vec& x) { return std::abs(un.value(x)[0] - u.value(x)[0]); });
      seq.l1_gaps.push_back(gap);
    }
    return seq;
  };
}

// mollification with an added high-frequency curvature oscillation
inline ProbeGenerator perturbed_mollification_probe(double amplitude = 0.5, int ext_cells = 0,
                                                    int gap_cells = 0) {
  return [amplitude, ext_cells, gap_cells](const BHField& u, const EnergySpec& spec,
                                           const std::vector<int>& ns) {
    ProbeSequence seq;
    seq.name = "perturbed-mollification";
    SmoothApproxResult approx = smooth_approximation(u, ns, ext_cells, gap_cells);
    FieldNorms base = norms(u);
    int d = u.d(), n = u.n();
    const GridDomain& g = u.domain();
    for (size_t ti = 0; ti < approx.terms.size(); ++ti) {
      const SmoothApproxTerm& term = approx.terms[ti];
      double q = 4.0 * term.n;  // oscillation frequency
      auto chi = [&](const Vec& x) {
        double t2 = 0.0;
        for (int i = 0; i < g.dim(); ++i) {
          double mid = 0.5 * (g.lo()[i] + g.hi()[i]);
          double halfw = 0.35 * (g.hi()[i] - g.lo()[i]);
          double s = (x[i] - mid) / halfw;
          t2 += s * s;
        }
        return bump_raw(t2);
      };
      // p(x) = A chi(x) sin(2 pi q x_1) / (2 pi q)^2 added to the first component
      double scale = 1.0 / std::pow(2.0 * M_PI * q, 2);
      auto pert_hess = [&](const Vec& x) {
        double h = 1e-5;
        auto p = [&](const Vec& y) { return amplitude * chi(y) * std::sin(2.0 * M_PI * q * y[0]) * scale; };
        SymTensor t(d, n);
        for (int i = 0; i < n; ++i)
          for (int j = i; j < n; ++j) {
            Vec ei = Vec::Zero(n), ej = Vec::Zero(n);
            ei[i] = h;
            ej[j] = h;
            double v = (p(x + ei + ej) - p(x + ei - ej) - p(x - ei + ej) + p(x - ei - ej)) /
                       (4.0 * h * h);
            t.set(0, i, j, v);
          }
        return t;
      };
      double energy = term.hessian.domain().integrate(
          [&](int c, const Vec& x) {
            SymTensor hess = SymTensor::symmetrized(d, n, term.hessian.ac(c)) + pert_hess(x);
            return spec.f(x, hess);
          },
          g.box());
      seq.energies.push_back(energy);
      seq.w21_norms.push_back(base.w11() + term.w11_gap +
                              term.hessian.total_variation(g.box()) + amplitude);
      seq.l1_gaps.push_back(term.w11_gap + amplitude * scale);
    }
    return seq;
  };
}

inline RelaxationReport probe_lower_bound(const BHField& u, const EnergySpec& spec,
                                          const std::vector<ProbeGenerator>& generators,
                                          const std::vector<int>& n_schedule, double tol = 0.02,
                                          double blowup_threshold = 1e4) {
  RelaxationReport rep;
  rep.n_schedule = n_schedule;
  rep.g_value = energy_relaxed_G(u, spec);
  rep.lower_margin = std::numeric_limits<double>::infinity();
  for (const ProbeGenerator& gen : generators) {
    ProbeSequence seq = gen(u, spec, n_schedule);
    RelaxationReport::Probe probe;
    probe.name = seq.name;
    probe.energies = seq.energies;
    probe.w21_norms = seq.w21_norms;
    probe.l1_gaps = seq.l1_gaps;
    for (double nm : seq.w21_norms)
      if (!(nm < blowup_threshold)) {
        probe.admissible = false;
        probe.exclusion_reason = "W^{2,1} norm blowup";
      }
    if (probe.admissible && seq.l1_gaps.size() >= 2 &&
        !(seq.l1_gaps.back() < seq.l1_gaps.front() + 1e-12) ) {
      probe.admissible = false;
      probe.exclusion_reason = "no L1 convergence";
    }
    if (probe.admissible) {
      size_t k0 = probe.energies.size() > static_cast<size_t>(spec.liminf_tail)
                      ? probe.energies.size() - static_cast<size_t>(spec.liminf_tail)
                      : 0;
      probe.liminf_surrogate = std::numeric_limits<double>::infinity();
      for (size_t i = k0; i < probe.energies.size(); ++i)
        probe.liminf_surrogate = std::min(probe.liminf_surrogate, probe.energies[i]);
      rep.lower_margin = std::min(rep.lower_margin, probe.liminf_surrogate - rep.g_value);
    }
    rep.probes.push_back(std::move(probe));
  }
  rep.lower_ok = rep.lower_margin >= -tol * std::max(1.0, std::abs(rep.g_value));
  return rep;
}

// ---- coercive regularization ----------------------------------------------

// f_eps = f + eps |.|
inline EnergySpec coercive_regularize(const EnergySpec& spec, double eps) {
  if (eps < 0.0) throw std::invalid_argument("coercive_regularize: eps >= 0");
  if (eps == 0.0) return spec;
  EnergySpec out = spec;
  Integrand base = spec.f;
  out.f.name = spec.f.name + "+coercive";
  out.f.eval = [base, eps](const Vec& x, const SymTensor& h) {
    return base.eval(x, h) + eps * h.norm();
  };
  out.f.growth_c = base.growth_c + eps;
  out.f.coercivity_c = std::min(0.99, base.coercivity_c.value_or(0.0) + eps);
  out.f.convex_in_h = base.convex_in_h;
  out.f.x_dependent = base.x_dependent;
  out.f.recession_alpha = base.recession_alpha;
  if (base.analytic_recession)
    out.f.analytic_recession = [base, eps](const Vec& x, const SymTensor& h) {
      return base.analytic_recession(x, h) + eps * h.norm();
    };
  if (base.grad_h)
    out.f.grad_h = [base, eps](const Vec& x, const SymTensor& h) {
      SymTensor g = base.grad_h(x, h);
      double nrm = h.norm();
      if (nrm > 1e-14) {
        SymTensor dir = h;
        dir *= eps / nrm;
        g += dir;
      }
      return g;
    };
  return out;
}

struct CoercivizationCheck {
  double worst_envelope_margin = 0.0;  // min over the grid of Q2(f_eps) - Q2f - eps|H|
  double g_difference = 0.0;           // G_eps[u] - G[u]
  double g_difference_bound = 0.0;     // eps |D(grad u)|(Omega)
  bool ok = true;
};

inline CoercivizationCheck check_coercivization(const BHField& u, const EnergySpec& spec,
                                                double eps,
                                                const std::vector<SymTensor>& h_grid,
                                                double tol = 1e-6) {
  CoercivizationCheck chk;
  EnergySpec reg = coercive_regularize(spec, eps);
  EnvelopeBackend b0(spec.f, spec.envelope);
  EnvelopeBackend b1(reg.f, reg.envelope);
  Vec x0 = u.domain().lo();
  chk.worst_envelope_margin = std::numeric_limits<double>::infinity();
  for (const SymTensor& h : h_grid) {
    double margin = b1.q2(x0, h) - b0.q2(x0, h) - eps * h.norm();
    chk.worst_envelope_margin = std::min(chk.worst_envelope_margin, margin);
  }
  chk.g_difference = energy_relaxed_G(u, reg) - energy_relaxed_G(u, spec);
  chk.g_difference_bound = eps * hessian_measure(u).total_variation();
  chk.ok = chk.worst_envelope_margin >= -2.0 * tol && chk.g_difference >= -tol &&
           chk.g_difference <= chk.g_difference_bound + tol;
  return chk;
}

// ---- report serialization --------------------------------------------------

inline void write_relaxation_report(const RelaxationReport& rep, std::ostream& os) {
  os << "relaxation_report v1\n";
  os << "g_value " << fmt_num(rep.g_value) << "\n";
  os << "upper_gap " << fmt_num(rep.upper_gap) << "\n";
  os << "weakstar_final " << fmt_num(rep.weakstar_final) << "\n";
  os << "area_final_gap " << fmt_num(rep.area_final_gap) << "\n";
  os << "upper_ok " << (rep.upper_ok ? 1 : 0) << "\n";
  os << "lower_margin " << fmt_num(rep.lower_margin) << "\n";
  os << "lower_ok " << (rep.lower_ok ? 1 : 0) << "\n";
  os << "terms " << rep.substituted.size() << "\n";
  for (size_t i = 0; i < rep.substituted.size(); ++i) {
    os << rep.n_schedule[i] << " " << fmt_num(rep.substituted[i]);
    if (i < rep.raw_f.size()) os << " " << fmt_num(rep.raw_f[i]);
    os << "\n";
  }
  os << "probes " << rep.probes.size() << "\n";
  for (const auto& p : rep.probes) {
    os << p.name << " admissible " << (p.admissible ? 1 : 0) << " liminf "
       << fmt_num(p.liminf_surrogate);
    if (!p.admissible) os << " reason \"" << p.exclusion_reason << "\"";
    os << "\n";
    for (double e : p.energies) os << " " << fmt_num(e);
    os << "\n";
  }
}

inline void write_energy_csv(const RelaxationReport& rep, std::ostream& os) {
  os << "n,substituted,raw_f\n";
  for (size_t i = 0; i < rep.substituted.size(); ++i) {
    os << rep.n_schedule[i] << "," << fmt_num(rep.substituted[i]) << ","
       << (i < rep.raw_f.size() ? fmt_num(rep.raw_f[i]) : "") << "\n";
  }
}

}  // namespace bhr

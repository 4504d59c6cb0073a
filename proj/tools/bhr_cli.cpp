// Command-line front end: envelope tables, relaxed-energy reports, smooth
// approximation diagnostics, and the property-suite verifier. Exit codes:
// 0 pass, 1 assertion failure, 2 usage error.

#include "bhr/bhr.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace bhr;

namespace {

Integrand integrand_from_config(const RunConfig& cfg) {
  std::string name = cfg.get("integrand", "name", "area");
  int d = cfg.get_int("integrand", "d", 1);
  int n = cfg.get_int("integrand", "n", 1);
  double well = cfg.get_double("integrand", "well", 1.0);
  return make_catalog_integrand(name, d, n, well);
}

GridDomain domain_from_config(const RunConfig& cfg) {
  std::vector<double> lo = cfg.get_doubles("domain", "lo");
  std::vector<double> hi = cfg.get_doubles("domain", "hi");
  if (lo.empty()) lo = {0.0};
  if (hi.empty()) hi = {1.0};
  std::vector<int> cells = cfg.get_ints("domain", "cells");
  if (cells.empty()) cells.assign(lo.size(), 256);
  Vec vlo(static_cast<Eigen::Index>(lo.size())), vhi(static_cast<Eigen::Index>(hi.size()));
  for (size_t i = 0; i < lo.size(); ++i) vlo[static_cast<Eigen::Index>(i)] = lo[i];
  for (size_t i = 0; i < hi.size(); ++i) vhi[static_cast<Eigen::Index>(i)] = hi[i];
  return GridDomain(vlo, vhi, cells);
}

BHField field_from_config(const RunConfig& cfg, const GridDomain& dom) {
  std::string kind = cfg.get("field", "kind");
  if (kind.empty()) throw CLI::ValidationError("field", "missing field spec ([field] kind = ...)");
  if (kind == "abs-kink") {
    return abs_kink_field(dom, cfg.get_double("field", "center", 0.5));
  }
  if (kind == "quadratic") {
    int d = cfg.get_int("field", "d", 1);
    std::vector<double> entries = cfg.get_doubles("field", "hessian");
    SymTensor a(d, dom.dim());
    if (entries.empty()) {
      a.set(0, 0, 0, 1.0);
    } else {
      Vec raw(static_cast<Eigen::Index>(entries.size()));
      for (size_t i = 0; i < entries.size(); ++i) raw[static_cast<Eigen::Index>(i)] = entries[i];
      a = SymTensor::symmetrized(d, dom.dim(), raw);
    }
    return quadratic_field(dom, a);
  }
  if (kind == "ridge") {
    std::vector<double> nu = cfg.get_doubles("field", "nu");
    if (nu.size() != 2) throw CLI::ValidationError("field", "ridge needs nu = n1 n2");
    Vec vnu = make_vec({nu[0], nu[1]});
    vnu /= vnu.norm();
    double c = cfg.get_double("field", "offset", 0.5);
    return ridge_field_2d(dom, vnu, c, make_vec({cfg.get_double("field", "amp", 1.0)}));
  }
  throw CLI::ValidationError("field", "unknown field kind: " + kind);
}

EnergySpec spec_from_config(const RunConfig& cfg) {
  EnergySpec spec;
  spec.f = integrand_from_config(cfg);
  spec.envelope.n_w = cfg.get_int("grids", "n_w", 16);
  spec.envelope.starts = cfg.get_int("grids", "starts", 8);
  spec.envelope.seed = static_cast<uint64_t>(cfg.get_int("run", "seed", 0));
  spec.envelope.table_size = cfg.get_int("grids", "table_size", 51);
  return spec;
}

int cmd_envelope(const RunConfig& cfg, const fs::path& outdir, double tol) {
  Integrand f = integrand_from_config(cfg);
  int d = cfg.get_int("integrand", "d", 1);
  int n = cfg.get_int("integrand", "n", 1);
  double h_min = cfg.get_double("grids", "h_min", -3.0);
  double h_max = cfg.get_double("grids", "h_max", 3.0);
  int h_count = cfg.get_int("grids", "h_count", 51);
  if (h_count < 1) {
    std::cerr << "envelope: empty H grid\n";
    return 2;
  }
  int n_w = cfg.get_int("grids", "n_w", 16);
  EnvelopeOptions opt;
  opt.starts = cfg.get_int("grids", "starts", 8);
  opt.seed = static_cast<uint64_t>(cfg.get_int("run", "seed", 0));
  opt.refine = false;
  GridDomain dom = domain_from_config(cfg);
  std::vector<Vec> xs;
  int x_count = cfg.get_int("grids", "x_count", 1);
  for (int i = 0; i < x_count; ++i) {
    Vec x = dom.lo() + (dom.hi() - dom.lo()) * ((i + 0.5) / x_count);
    xs.push_back(x);
  }

  CsvWriter csv((outdir / "envelope.csv").string());
  std::vector<std::string> cols = {"x1", "h", "f", "q2_lower", "q2_upper"};
  csv.header(cols);
  bool ok = true;
  bool scalar = (d == 1 && n == 1);
  for (const Vec& x : xs) {
    // 1D oracle or grid biconjugate as the lower bracket
    std::vector<std::pair<double, double>> samples;
    std::vector<SymTensor> grid;
    for (int i = 0; i < std::max(h_count, 3); ++i) {
      double t = h_min + (h_max - h_min) * i / std::max(1, h_count - 1);
      if (scalar) samples.emplace_back(t, f(x, SymTensor::scalar(t)));
    }
    std::optional<ConvexHull1D> hull;
    std::optional<GridBiconjugate> bicon;
    if (scalar && samples.size() >= 3) {
      hull.emplace(convexify_1d(samples));
    } else {
      Rng rng(opt.seed + 91);
      for (int i = 0; i < 200; ++i) {
        SymTensor h = random_sym_tensor(rng, d, n);
        h *= std::abs(h_max);
        grid.push_back(std::move(h));
      }
      bicon.emplace(f, x, grid);
    }
    for (int i = 0; i < h_count; ++i) {
      double t = h_min + (h_max - h_min) * i / std::max(1, h_count - 1);
      SymTensor h = SymTensor::zero(d, n);
      h.set(0, 0, 0, t);
      double fv = f(x, h);
      double upper = f.convex_in_h ? fv : quasiconvex_envelope(f, x, h, n_w, opt).value;
      double lower = hull ? (*hull)(t) : (*bicon)(h);
      csv.row({x[0], t, fv, lower, upper});
      if (lower > upper + tol) ok = false;
      if (upper > fv + tol) ok = false;
    }
  }
  return ok ? 0 : 1;
}

int cmd_relax(const RunConfig& cfg, const fs::path& outdir, double tol) {
  GridDomain dom = domain_from_config(cfg);
  BHField u = field_from_config(cfg, dom);
  EnergySpec spec = spec_from_config(cfg);
  auto hyp = validate(spec.f, default_sample_plan(dom, u.d(), u.n(), spec.envelope.seed));
  if (!hyp.h1_ok || !hyp.h2_ok) {
    std::cerr << "relax: integrand fails H1/H2 validation\n";
    return 1;
  }
  RelaxationReport rep;
  rep.g_value = energy_relaxed_G(u, spec);
  std::vector<int> ns = cfg.get_ints("schedules", "n");
  bool verified = true;
  if (!ns.empty() && cfg.get_int("run", "verify_upper", 0)) {
    rep = verify_upper_bound(u, spec, ns, tol);
    verified = rep.upper_ok;
  }
  std::ofstream os(outdir / "relax_report.txt");
  write_relaxation_report(rep, os);
  std::ofstream csv(outdir / "relax_energies.csv");
  write_energy_csv(rep, csv);
  std::cout << "G = " << fmt_num(rep.g_value) << "\n";
  return verified ? 0 : 1;
}

int cmd_approx(const RunConfig& cfg, const fs::path& outdir, double tol) {
  GridDomain dom = domain_from_config(cfg);
  BHField u = field_from_config(cfg, dom);
  std::vector<int> ns = cfg.get_ints("schedules", "n");
  if (ns.empty()) ns = {8, 16, 32, 64};
  SmoothApproxResult res = smooth_approximation(u, ns);
  std::vector<RadonMeasure> seq;
  for (auto& t : res.terms) seq.push_back(t.hessian);
  auto tests = default_test_functions(dom, u.d() * u.n() * u.n(), 5);
  WeakStarTable ws = weakstar_gap(seq, res.limit_hessian, tests, tol);
  CsvWriter csv((outdir / "approx.csv").string());
  csv.header({"n", "area", "area_gap", "weakstar_gap", "w11_gap"});
  for (size_t i = 0; i < res.terms.size(); ++i) {
    csv.row({static_cast<double>(res.terms[i].n), res.terms[i].area,
             std::abs(res.terms[i].area - res.limit_area), ws.rows[i].max_gap,
             res.terms[i].w11_gap});
  }
  bool ok = res.area_check.final_area_gap <
                tol * std::max(1.0, std::abs(res.limit_area)) &&
            ws.final_gap < tol * 10.0;
  return ok ? 0 : 1;
}

int cmd_verify(const RunConfig& cfg, const fs::path& outdir, const std::string& suite) {
  uint64_t seed = static_cast<uint64_t>(cfg.get_int("run", "seed", 0));
  MomentKernel psi;
  psi.b += cfg.get_double("faults", "psi_b_offset", 0.0);
  std::vector<std::string> names;
  if (suite.empty() || suite == "all") {
    names = all_suite_names();
  } else {
    auto known = all_suite_names();
    if (std::find(known.begin(), known.end(), suite) == known.end()) {
      std::cerr << "verify: unknown suite name: " << suite << "\n";
      return 2;
    }
    names = {suite};
  }
  std::vector<SuiteResult> results = run_suites(names, seed, psi);
  std::ofstream os(outdir / "verify_results.txt");
  os << "suite,check,value,status\n";
  bool all_ok = true;
  for (const SuiteResult& s : results) {
    for (const CheckLine& c : s.checks) {
      os << s.name << "," << c.name << "," << fmt_num(c.value) << ","
         << (c.pass ? "pass" : "FAIL") << "\n";
      if (!c.pass) all_ok = false;
    }
    std::cout << s.name << ": " << (s.passed() ? "pass" : "FAIL") << "\n";
  }
  return all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"desk-scale toolkit for second-order relaxed energies on functions of bounded Hessian"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path, out_dir = ".", suite;
  int seed = -1;
  double tol = -1.0;
  app.add_option("--config", config_path, "run configuration file");
  app.add_option("--seed", seed, "override [run] seed");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--tol", tol, "override [run] tol");
  app.add_option("--suite", suite, "verify: run a single suite");
  auto* envelope = app.add_subcommand("envelope", "tabulate quasiconvex envelope brackets");
  auto* relax = app.add_subcommand("relax", "evaluate the relaxed energy of a field");
  auto* approx = app.add_subcommand("approx", "smooth approximation diagnostics");
  auto* verify = app.add_subcommand("verify", "run property suites");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) cfg = RunConfig::parse_file(config_path);
    if (seed >= 0) cfg.set("run", "seed", std::to_string(seed));
    double tol_eff = tol > 0.0 ? tol : cfg.get_double("run", "tol", 0.02);
    if (tol_eff <= 0.0) {
      std::cerr << "tolerances must be positive\n";
      return 2;
    }
    fs::path outdir(out_dir);
    fs::create_directories(outdir);
    if (*envelope) return cmd_envelope(cfg, outdir, tol_eff);
    if (*relax) return cmd_relax(cfg, outdir, tol_eff);
    if (*approx) return cmd_approx(cfg, outdir, tol_eff);
    if (*verify) return cmd_verify(cfg, outdir, suite);
    return 2;
  } catch (const CLI::ValidationError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

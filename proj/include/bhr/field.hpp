#pragma once

// Discrete functions of bounded Hessian: polynomial pieces separated by flat
// facets across which the gradient jumps by a (x) nu, extraction of the
// Hessian measure, and the L1 / W11 / BH norms. Pieces live on sign regions
// of the facet hyperplanes so facets need not align with the grid.

#include "bhr/measure.hpp"
#include "bhr/tensor.hpp"

#include <map>

namespace bhr {

// dense polynomial of total degree <= 3 in 1 or 2 variables
class Polynomial {
 public:
  explicit Polynomial(int nvars = 1) : nvars_(nvars) {
    if (nvars < 1 || nvars > 2) throw std::invalid_argument("Polynomial: 1 or 2 variables");
    coef_.assign(exponents().size(), 0.0);
  }

  const std::vector<std::array<int, 2>>& exponents() const {
    static const std::vector<std::array<int, 2>> e1 = {{0, 0}, {1, 0}, {2, 0}, {3, 0}};
    static const std::vector<std::array<int, 2>> e2 = {{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1},
                                                       {0, 2}, {3, 0}, {2, 1}, {1, 2}, {0, 3}};
    return nvars_ == 1 ? e1 : e2;
  }

  int nvars() const { return nvars_; }
  double& coef(int ex, int ey = 0) {
    auto& exps = exponents();
    for (size_t m = 0; m < exps.size(); ++m)
      if (exps[m][0] == ex && exps[m][1] == ey) return coef_[m];
    throw std::invalid_argument("Polynomial: degree > 3");
  }
  double coef(int ex, int ey = 0) const { return const_cast<Polynomial*>(this)->coef(ex, ey); }
  std::vector<double>& raw() { return coef_; }
  const std::vector<double>& raw() const { return coef_; }

  double eval(const Vec& x) const {
    auto& exps = exponents();
    double s = 0.0;
    for (size_t m = 0; m < exps.size(); ++m)
      s += coef_[m] * powi(x[0], exps[m][0]) * (nvars_ == 2 ? powi(x[1], exps[m][1]) : 1.0);
    return s;
  }
  Vec grad(const Vec& x) const {
    auto& exps = exps_ref();
    Vec g = Vec::Zero(nvars_);
    for (size_t m = 0; m < exps.size(); ++m) {
      if (coef_[m] == 0.0) continue;
      for (int a = 0; a < nvars_; ++a) {
        int ea = exps[m][static_cast<size_t>(a)];
        if (ea == 0) continue;
        double term = coef_[m] * ea * powi(x[0], a == 0 ? ea - 1 : exps[m][0]);
        if (nvars_ == 2) term *= powi(x[1], a == 1 ? exps[m][1] - 1 : exps[m][1]);
        g[a] += term;
      }
    }
    return g;
  }
  Mat hess(const Vec& x) const {
    auto& exps = exps_ref();
    Mat hm = Mat::Zero(nvars_, nvars_);
    for (size_t m = 0; m < exps.size(); ++m) {
      if (coef_[m] == 0.0) continue;
      int e0 = exps[m][0], e1 = exps[m][1];
      if (e0 >= 2) hm(0, 0) += coef_[m] * e0 * (e0 - 1) * powi(x[0], e0 - 2) *
                               (nvars_ == 2 ? powi(x[1], e1) : 1.0);
      if (nvars_ == 2) {
        if (e1 >= 2) hm(1, 1) += coef_[m] * e1 * (e1 - 1) * powi(x[0], e0) * powi(x[1], e1 - 2);
        if (e0 >= 1 && e1 >= 1) {
          double v = coef_[m] * e0 * e1 * powi(x[0], e0 - 1) * powi(x[1], e1 - 1);
          hm(0, 1) += v;
          hm(1, 0) += v;
        }
      }
    }
    return hm;
  }

 private:
  const std::vector<std::array<int, 2>>& exps_ref() const { return exponents(); }
  static double powi(double x, int e) {
    double r = 1.0;
    for (int i = 0; i < e; ++i) r *= x;
    return r;
  }
  int nvars_;
  std::vector<double> coef_;
};

struct FieldPiece {
  std::vector<Polynomial> comps;  // one polynomial per value component
};

// hyperplane {x . normal = offset}; jump of the gradient across it is
// jump_a (x) normal (zero jump marks a C1 seam)
struct FieldFacet {
  Vec normal;
  double offset = 0.0;
  Vec jump_a;
};

class BHField {
 public:
  BHField(GridDomain domain, int d, std::vector<FieldPiece> pieces, std::vector<FieldFacet> facets,
          std::map<std::vector<int>, int> region_map)
      : domain_(std::move(domain)), d_(d), pieces_(std::move(pieces)), facets_(std::move(facets)),
        region_map_(std::move(region_map)) {
    validate();
  }

  const GridDomain& domain() const { return domain_; }
  int d() const { return d_; }
  int n() const { return domain_.dim(); }
  const std::vector<FieldFacet>& facets() const { return facets_; }
  const std::vector<FieldPiece>& pieces() const { return pieces_; }

  std::vector<int> sign_pattern(const Vec& x) const {
    std::vector<int> s(facets_.size());
    for (size_t i = 0; i < facets_.size(); ++i)
      s[i] = x.dot(facets_[i].normal) >= facets_[i].offset ? 1 : -1;
    return s;
  }
  const FieldPiece& piece_at(const Vec& x) const {
    auto it = region_map_.find(sign_pattern(x));
    if (it == region_map_.end()) throw std::runtime_error("BHField: no piece covers point");
    return pieces_[static_cast<size_t>(it->second)];
  }

  Vec value(const Vec& x) const {
    const FieldPiece& p = piece_at(x);
    Vec v(d_);
    for (int k = 0; k < d_; ++k) v[k] = p.comps[static_cast<size_t>(k)].eval(x);
    return v;
  }
  Mat gradient(const Vec& x) const {  // d x N
    const FieldPiece& p = piece_at(x);
    Mat g(d_, n());
    for (int k = 0; k < d_; ++k) g.row(k) = p.comps[static_cast<size_t>(k)].grad(x).transpose();
    return g;
  }
  SymTensor hessian(const Vec& x) const {
    const FieldPiece& p = piece_at(x);
    SymTensor t(d_, n());
    for (int k = 0; k < d_; ++k) {
      Mat hm = p.comps[static_cast<size_t>(k)].hess(x);
      for (int i = 0; i < n(); ++i)
        for (int j = i; j < n(); ++j) t.set(k, i, j, hm(i, j));
    }
    return t;
  }

  // points on the facet clipped to the domain, for trace checks and quadrature
  std::vector<Vec> facet_sample_points(size_t fi, int count) const {
    const FieldFacet& f = facets_[fi];
    std::vector<Vec> pts;
    if (n() == 1) {
      Vec p(1);
      p[0] = f.offset / f.normal[0];
      pts.push_back(p);
      return pts;
    }
    auto seg = facet_segment(fi);
    for (int i = 0; i < count; ++i) {
      double t = (i + 0.5) / count * seg.second;
      pts.push_back(seg.first.point(t));
    }
    return pts;
  }

  // 2D: clip the facet line to the domain box; returns geometry and length
  std::pair<Facet, double> facet_segment(size_t fi) const {
    const FieldFacet& f = facets_[fi];
    Vec tau(2);
    tau[0] = -f.normal[1];
    tau[1] = f.normal[0];
    // a point on the line inside an enlarged box, then clip
    Vec p = f.normal * f.offset;
    Facet raw;
    raw.p0 = p - 10.0 * (domain_.hi() - domain_.lo()).norm() * tau;
    raw.tangent = tau;
    raw.normal = f.normal;
    raw.length = 20.0 * (domain_.hi() - domain_.lo()).norm();
    raw.density = {Vec::Zero(1)};
    auto [t0, t1] = raw.clip_params(domain_.box());
    Facet seg;
    seg.p0 = raw.point(t0);
    seg.tangent = tau;
    seg.normal = f.normal;
    seg.length = t1 - t0;
    return {seg, t1 - t0};
  }

 private:
  void validate() const {
    for (auto& p : pieces_)
      if (static_cast<int>(p.comps.size()) != d_)
        throw std::invalid_argument("BHField: piece component count");
    for (size_t fi = 0; fi < facets_.size(); ++fi) {
      const FieldFacet& f = facets_[fi];
      if (std::abs(f.normal.norm() - 1.0) > 1e-12)
        throw std::invalid_argument("BHField: facet normal must be unit");
      auto pts = facet_sample_points(fi, 7);
      for (const Vec& p : pts) {
        if (!domain_.box().contains(p, 1e-12)) continue;
        Vec eps = 1e-7 * f.normal;
        Vec up = p + eps, dn = p - eps;
        auto pat_up = sign_pattern(up), pat_dn = sign_pattern(dn);
        auto iu = region_map_.find(pat_up), idn = region_map_.find(pat_dn);
        if (iu == region_map_.end() || idn == region_map_.end()) continue;
        const FieldPiece& pu = pieces_[static_cast<size_t>(iu->second)];
        const FieldPiece& pd = pieces_[static_cast<size_t>(idn->second)];
        for (int k = 0; k < d_; ++k) {
          double vu = pu.comps[static_cast<size_t>(k)].eval(p);
          double vd = pd.comps[static_cast<size_t>(k)].eval(p);
          if (std::abs(vu - vd) > 1e-10)
            throw std::invalid_argument("BHField: value trace mismatch across facet");
          Vec gu = pu.comps[static_cast<size_t>(k)].grad(p);
          Vec gd = pd.comps[static_cast<size_t>(k)].grad(p);
          Vec jump = gu - gd;
          Vec expected = f.jump_a[k] * f.normal;
          if ((jump - expected).norm() > 1e-10)
            throw std::invalid_argument("BHField: gradient jump is not a (x) nu");
        }
      }
    }
  }

  GridDomain domain_;
  int d_;
  std::vector<FieldPiece> pieces_;
  std::vector<FieldFacet> facets_;
  std::map<std::vector<int>, int> region_map_;
};

// ---- factories ----------------------------------------------------------

// u = |x - c| on an interval (c must lie inside)
inline BHField abs_kink_field(const GridDomain& domain, double c) {
  if (domain.dim() != 1) throw std::invalid_argument("abs_kink_field: 1D only");
  FieldPiece left, right;
  Polynomial pl(1), pr(1);
  pl.coef(0) = c;
  pl.coef(1) = -1.0;
  pr.coef(0) = -c;
  pr.coef(1) = 1.0;
  left.comps = {pl};
  right.comps = {pr};
  FieldFacet f;
  f.normal = make_vec({1.0});
  f.offset = c;
  f.jump_a = make_vec({2.0});
  std::map<std::vector<int>, int> regions;
  regions[{-1}] = 0;
  regions[{1}] = 1;
  return BHField(domain, 1, {left, right}, {f}, std::move(regions));
}

// u_k = (1/2) x^T A_k x + b_k . x + c_k, smooth
inline BHField quadratic_field(const GridDomain& domain, const SymTensor& a,
                               const Mat& b = Mat(), const Vec& c = Vec()) {
  int d = a.d(), nd = a.n();
  if (domain.dim() != nd) throw std::invalid_argument("quadratic_field: dimension mismatch");
  FieldPiece piece;
  for (int k = 0; k < d; ++k) {
    Polynomial p(nd);
    p.coef(2, 0) = 0.5 * a.at(k, 0, 0);
    if (nd == 2) {
      p.coef(0, 2) = 0.5 * a.at(k, 1, 1);
      p.coef(1, 1) = a.at(k, 0, 1);
    }
    if (b.size() > 0) {
      p.coef(1, 0) = b(k, 0);
      if (nd == 2) p.coef(0, 1) = b(k, 1);
    }
    if (c.size() > 0) p.coef(0, 0) = c[k];
    piece.comps.push_back(std::move(p));
  }
  return BHField(domain, d, {piece}, {}, {{{}, 0}});
}

// u = amp * max(0, x . nu - c) in 2D, gradient jump amp (x) nu on the chord
inline BHField ridge_field_2d(const GridDomain& domain, const Vec& nu, double c,
                              const Vec& amp) {
  if (domain.dim() != 2) throw std::invalid_argument("ridge_field_2d: 2D only");
  int d = static_cast<int>(amp.size());
  FieldPiece zero, slope;
  for (int k = 0; k < d; ++k) {
    Polynomial pz(2), ps(2);
    ps.coef(1, 0) = amp[k] * nu[0];
    ps.coef(0, 1) = amp[k] * nu[1];
    ps.coef(0, 0) = -amp[k] * c;
    zero.comps.push_back(std::move(pz));
    slope.comps.push_back(std::move(ps));
  }
  FieldFacet f;
  f.normal = nu / nu.norm();
  f.offset = c;
  f.jump_a = amp;
  std::map<std::vector<int>, int> regions;
  regions[{-1}] = 0;
  regions[{1}] = 1;
  return BHField(domain, d, {zero, slope}, {f}, std::move(regions));
}

// 1D piecewise polynomial from breakpoints; facet jumps derived from the
// one-sided gradients and validated by the constructor
inline BHField piecewise_poly_1d(const GridDomain& domain, const std::vector<double>& breaks,
                                 const std::vector<Polynomial>& polys) {
  if (domain.dim() != 1) throw std::invalid_argument("piecewise_poly_1d: 1D only");
  if (polys.size() != breaks.size() + 1)
    throw std::invalid_argument("piecewise_poly_1d: need one piece per interval");
  int nb = static_cast<int>(breaks.size());
  std::vector<FieldFacet> facets;
  for (int i = 0; i < nb; ++i) {
    FieldFacet f;
    f.normal = make_vec({1.0});
    f.offset = breaks[static_cast<size_t>(i)];
    Vec xb = make_vec({breaks[static_cast<size_t>(i)]});
    double jump = polys[static_cast<size_t>(i + 1)].grad(xb)[0] - polys[static_cast<size_t>(i)].grad(xb)[0];
    f.jump_a = make_vec({jump});
    facets.push_back(std::move(f));
  }
  std::vector<FieldPiece> pieces;
  std::map<std::vector<int>, int> regions;
  for (int i = 0; i <= nb; ++i) {
    FieldPiece p;
    p.comps = {polys[static_cast<size_t>(i)]};
    pieces.push_back(std::move(p));
    std::vector<int> pat(static_cast<size_t>(nb));
    for (int j = 0; j < nb; ++j) pat[static_cast<size_t>(j)] = j < i ? 1 : -1;
    regions[pat] = i;
  }
  return BHField(domain, 1, std::move(pieces), std::move(facets), std::move(regions));
}

// ---- Hessian measure and norms ------------------------------------------

// m = d*N*N flattened (k,i,j); singular density a (x) nu (x) nu per facet
inline RadonMeasure hessian_measure(const BHField& u) {
  int d = u.d(), nd = u.n();
  int m = d * nd * nd;
  RadonMeasure mu(u.domain(), m);
  for (int cidx = 0; cidx < u.domain().node_count(); ++cidx)
    mu.ac(cidx) = u.hessian(u.domain().node(cidx)).data();
  for (size_t fi = 0; fi < u.facets().size(); ++fi) {
    const FieldFacet& f = u.facets()[fi];
    if (f.jump_a.norm() == 0.0) continue;  // C1 seam
    Vec density(m);
    for (int k = 0; k < d; ++k)
      for (int i = 0; i < nd; ++i)
        for (int j = 0; j < nd; ++j)
          density[(k * nd + i) * nd + j] = f.jump_a[k] * f.normal[i] * f.normal[j];
    if (nd == 1) {
      Vec loc(1);
      loc[0] = f.offset / f.normal[0];
      mu.add_atom(loc, density);
    } else {
      auto [seg, len] = u.facet_segment(fi);
      if (len <= 0.0) continue;
      seg.density.assign(16, density);
      mu.add_facet(std::move(seg));
    }
  }
  return mu;
}

struct FieldNorms {
  double l1 = 0.0;       // integral of |u|
  double w11_semi = 0.0; // integral of |grad u|
  double bh_semi = 0.0;  // |D(grad u)|(domain)
  double w11() const { return l1 + w11_semi; }
  double bh() const { return l1 + w11_semi + bh_semi; }
};

namespace detail {
// per-cell quadrature that subdivides cells cut by a facet
inline double integrate_field(const BHField& u, const std::function<double(const Vec&)>& fn) {
  const GridDomain& g = u.domain();
  const Quadrature1D& q = gauss_legendre(4);
  double total = 0.0;
  for (int c = 0; c < g.node_count(); ++c) {
    Box cb = g.cell_box(c);
    bool cut = false;
    for (const FieldFacet& f : u.facets()) {
      double lo = 0.0, hi = 0.0;
      for (int i = 0; i < g.dim(); ++i) {
        double a = f.normal[i] * cb.lo[i], b = f.normal[i] * cb.hi[i];
        lo += std::min(a, b);
        hi += std::max(a, b);
      }
      if (lo < f.offset && f.offset < hi) {
        cut = true;
        break;
      }
    }
    if (cut && g.dim() == 1) {
      // split exactly at the facet positions; pieces are polynomial
      std::vector<double> cuts = {cb.lo[0], cb.hi[0]};
      for (const FieldFacet& f : u.facets()) {
        double pos = f.offset / f.normal[0];
        if (pos > cb.lo[0] && pos < cb.hi[0]) cuts.push_back(pos);
      }
      std::sort(cuts.begin(), cuts.end());
      for (size_t s = 0; s + 1 < cuts.size(); ++s) {
        double mid = 0.5 * (cuts[s] + cuts[s + 1]), half = 0.5 * (cuts[s + 1] - cuts[s]);
        if (half <= 0.0) continue;
        for (size_t i = 0; i < q.nodes.size(); ++i) {
          Vec x(1);
          x[0] = mid + half * q.nodes[i];
          total += q.weights[i] * half * fn(x);
        }
      }
    } else if (!cut) {
      if (g.dim() == 1) {
        double mid = 0.5 * (cb.lo[0] + cb.hi[0]), half = 0.5 * (cb.hi[0] - cb.lo[0]);
        for (size_t i = 0; i < q.nodes.size(); ++i) {
          Vec x(1);
          x[0] = mid + half * q.nodes[i];
          total += q.weights[i] * half * fn(x);
        }
      } else {
        for (size_t i = 0; i < q.nodes.size(); ++i)
          for (size_t j = 0; j < q.nodes.size(); ++j) {
            Vec x(2);
            x[0] = 0.5 * (cb.lo[0] + cb.hi[0]) + 0.5 * (cb.hi[0] - cb.lo[0]) * q.nodes[i];
            x[1] = 0.5 * (cb.lo[1] + cb.hi[1]) + 0.5 * (cb.hi[1] - cb.lo[1]) * q.nodes[j];
            total += 0.25 * q.weights[i] * q.weights[j] * (cb.hi[0] - cb.lo[0]) *
                     (cb.hi[1] - cb.lo[1]) * fn(x);
          }
      }
    } else {
      // 2D cut cells: midpoint subcells across the facet line
      int sub = 8;
      double w0 = (cb.hi[0] - cb.lo[0]) / sub, w1 = (cb.hi[1] - cb.lo[1]) / sub;
      for (int i = 0; i < sub; ++i)
        for (int j = 0; j < sub; ++j) {
          Vec x(2);
          x[0] = cb.lo[0] + (i + 0.5) * w0;
          x[1] = cb.lo[1] + (j + 0.5) * w1;
          total += w0 * w1 * fn(x);
        }
    }
  }
  return total;
}
}  // namespace detail

inline FieldNorms norms(const BHField& u) {
  FieldNorms out;
  out.l1 = detail::integrate_field(u, [&](const Vec& x) { return u.value(x).norm(); });
  out.w11_semi = detail::integrate_field(u, [&](const Vec& x) { return u.gradient(x).norm(); });
  out.bh_semi = hessian_measure(u).total_variation();
  return out;
}

// smooth fields produced by mollification pipelines and probe generators
struct SmoothFieldFn {
  std::function<Vec(const Vec&)> value;
  std::function<Mat(const Vec&)> gradient;   // d x N
  std::function<SymTensor(const Vec&)> hessian;
};

// ---- serialization --------------------------------------------------------

inline void write_field(const BHField& u, std::ostream& os) {
  const GridDomain& g = u.domain();
  os << "field v1\n";
  os << "dim " << g.dim() << "\nd " << u.d() << "\n";
  os << "lo";
  for (int i = 0; i < g.dim(); ++i) os << " " << fmt_num(g.lo()[i]);
  os << "\nhi";
  for (int i = 0; i < g.dim(); ++i) os << " " << fmt_num(g.hi()[i]);
  os << "\ncells";
  for (int c : g.cells()) os << " " << c;
  os << "\nfacets " << u.facets().size() << "\n";
  for (const FieldFacet& f : u.facets()) {
    for (int i = 0; i < f.normal.size(); ++i) os << (i ? " " : "") << fmt_num(f.normal[i]);
    os << " " << fmt_num(f.offset);
    for (int i = 0; i < f.jump_a.size(); ++i) os << " " << fmt_num(f.jump_a[i]);
    os << "\n";
  }
  os << "pieces " << u.pieces().size() << "\n";
  // region sign patterns recovered by probing a point of each piece is not
  // possible in general, so patterns are stored explicitly
  std::map<int, std::vector<int>> patterns;
  {
    // reconstruct the region map by sampling grid nodes
    for (int c = 0; c < g.node_count(); ++c) {
      Vec x = g.node(c);
      auto pat = u.sign_pattern(x);
      for (size_t pi = 0; pi < u.pieces().size(); ++pi) {
        if (&u.piece_at(x) == &u.pieces()[pi]) {
          patterns[static_cast<int>(pi)] = pat;
          break;
        }
      }
    }
  }
  for (size_t pi = 0; pi < u.pieces().size(); ++pi) {
    const FieldPiece& p = u.pieces()[pi];
    os << "piece";
    auto it = patterns.find(static_cast<int>(pi));
    for (size_t j = 0; j < u.facets().size(); ++j)
      os << " " << (it != patterns.end() ? it->second[j] : 0);
    os << "\n";
    for (const Polynomial& poly : p.comps) {
      for (size_t m = 0; m < poly.raw().size(); ++m) os << (m ? " " : "") << fmt_num(poly.raw()[m]);
      os << "\n";
    }
  }
}

inline BHField read_field(std::istream& is) {
  std::string tok;
  is >> tok;
  if (tok != "field") throw std::runtime_error("read_field: bad header");
  is >> tok;  // version
  int nd = 0, d = 0;
  is >> tok >> nd >> tok >> d;
  Vec lo(nd), hi(nd);
  is >> tok;
  for (int i = 0; i < nd; ++i) is >> lo[i];
  is >> tok;
  for (int i = 0; i < nd; ++i) is >> hi[i];
  is >> tok;
  std::vector<int> cells(static_cast<size_t>(nd));
  for (int i = 0; i < nd; ++i) is >> cells[static_cast<size_t>(i)];
  int nfacets = 0;
  is >> tok >> nfacets;
  std::vector<FieldFacet> facets;
  for (int i = 0; i < nfacets; ++i) {
    FieldFacet f;
    f.normal.resize(nd);
    f.jump_a.resize(d);
    for (int k = 0; k < nd; ++k) is >> f.normal[k];
    is >> f.offset;
    for (int k = 0; k < d; ++k) is >> f.jump_a[k];
    facets.push_back(std::move(f));
  }
  int npieces = 0;
  is >> tok >> npieces;
  std::vector<FieldPiece> pieces;
  std::map<std::vector<int>, int> regions;
  for (int p = 0; p < npieces; ++p) {
    is >> tok;  // "piece"
    std::vector<int> pat(static_cast<size_t>(nfacets));
    for (int j = 0; j < nfacets; ++j) is >> pat[static_cast<size_t>(j)];
    regions[pat] = p;
    FieldPiece piece;
    for (int k = 0; k < d; ++k) {
      Polynomial poly(nd);
      for (size_t m = 0; m < poly.raw().size(); ++m) is >> poly.raw()[m];
      piece.comps.push_back(std::move(poly));
    }
    pieces.push_back(std::move(piece));
  }
  return BHField(GridDomain(lo, hi, cells), d, std::move(pieces), std::move(facets),
                 std::move(regions));
}

// sampled values for plotting: x coords, value, gradient per node
inline void write_field_csv(const BHField& u, std::ostream& os) {
  const GridDomain& g = u.domain();
  for (int i = 0; i < g.dim(); ++i) os << "x" << i + 1 << ",";
  for (int k = 0; k < u.d(); ++k) os << "u" << k + 1 << ",";
  for (int k = 0; k < u.d(); ++k)
    for (int i = 0; i < g.dim(); ++i) os << "du" << k + 1 << "_dx" << i + 1 << (k + 1 == u.d() && i + 1 == g.dim() ? "" : ",");
  os << "\n";
  for (int c = 0; c < g.node_count(); ++c) {
    Vec x = g.node(c);
    Vec v = u.value(x);
    Mat gr = u.gradient(x);
    for (int i = 0; i < g.dim(); ++i) os << fmt_num(x[i]) << ",";
    for (int k = 0; k < u.d(); ++k) os << fmt_num(v[k]) << ",";
    for (int k = 0; k < u.d(); ++k)
      for (int i = 0; i < g.dim(); ++i)
        os << fmt_num(gr(k, i)) << (k + 1 == u.d() && i + 1 == g.dim() ? "" : ",");
    os << "\n";
  }
}

}  // namespace bhr

#pragma once

// Vector Radon measures on box domains: a grid-sampled absolutely continuous
// density plus singular pieces (atoms, flat codimension-1 facets). Supplies
// the decomposition, total variation and area functionals, mollification by
// the fixed smooth bump, and blow-up push-forwards onto the unit cube.

#include "bhr/grid.hpp"

#include <fstream>
#include <sstream>
#include <variant>

namespace bhr {

// phi(x) = Z_N exp(-1/(1-|x|^2)) on |x|<1; phi_eps(x) = eps^-N phi(x/eps).
class Mollifier {
 public:
  Mollifier(int dim, double eps) : dim_(dim), eps_(eps) {
    if (eps <= 0.0) throw std::invalid_argument("Mollifier: eps must be positive");
    z_ = 1.0 / unnormalized_mass(dim);
  }

  int dim() const { return dim_; }
  double radius() const { return eps_; }

  double profile(const Vec& x) const {  // phi, radius 1
    return z_ * bump_raw(x.squaredNorm());
  }
  double operator()(const Vec& x) const {  // phi_eps
    return z_ * bump_raw(x.squaredNorm() / (eps_ * eps_)) / std::pow(eps_, dim_);
  }

  static double unnormalized_mass(int dim) {
    double surf = 0.0;
    switch (dim) {
      case 1: surf = 2.0; break;
      case 2: surf = 2.0 * M_PI; break;
      case 3: surf = 4.0 * M_PI; break;
      default: throw std::invalid_argument("Mollifier: dim must be 1..3");
    }
    // composite Gauss on [0,1]; the bump vanishes to all orders at r=1
    double s = 0.0;
    int panels = 8;
    for (int p = 0; p < panels; ++p) {
      double a = static_cast<double>(p) / panels, b = static_cast<double>(p + 1) / panels;
      s += integrate_gl([dim](double r) { return std::pow(r, dim - 1) * bump_raw(r * r); }, a, b, 16);
    }
    return surf * s;
  }

 private:
  int dim_;
  double eps_;
  double z_;
};

struct Atom {
  Vec location;
  Vec weight;  // R^m, mass = |weight|
};

// Flat segment facet in 2D: { p0 + t tau : t in [0, length] }, unit normal nu
// perpendicular to tau. The density is piecewise constant on nsub equal
// sub-segments (values at sub-midpoints).
struct Facet {
  Vec p0;
  Vec tangent;  // unit
  double length = 0.0;
  Vec normal;  // unit
  std::vector<Vec> density;  // one R^m value per sub-segment

  int nsub() const { return static_cast<int>(density.size()); }
  double sub_length() const { return length / nsub(); }
  Vec point(double t) const { return p0 + t * tangent; }
  double mass() const {
    double s = 0.0;
    for (const Vec& v : density) s += v.norm();
    return s * sub_length();
  }
  // parameter interval of the intersection with a box
  std::pair<double, double> clip_params(const Box& region) const {
    double t0 = 0.0, t1 = length;
    for (int i = 0; i < region.dim(); ++i) {
      double dir = tangent[i], base = p0[i];
      if (std::abs(dir) < 1e-15) {
        if (base < region.lo[i] - 1e-13 || base > region.hi[i] + 1e-13) return {0.0, 0.0};
        continue;
      }
      double ta = (region.lo[i] - base) / dir, tb = (region.hi[i] - base) / dir;
      if (ta > tb) std::swap(ta, tb);
      t0 = std::max(t0, ta);
      t1 = std::min(t1, tb);
    }
    if (t1 <= t0) return {0.0, 0.0};
    return {t0, t1};
  }
  double mass_in(const Box& region) const {
    auto [t0, t1] = clip_params(region);
    if (t1 <= t0) return 0.0;
    double s = 0.0, sl = sub_length();
    for (int i = 0; i < nsub(); ++i) {
      double a = std::max(t0, i * sl), b = std::min(t1, (i + 1) * sl);
      if (b > a) s += density[static_cast<size_t>(i)].norm() * (b - a);
    }
    return s;
  }
  Vec density_at(double t) const {
    int i = std::min(nsub() - 1, std::max(0, static_cast<int>(t / sub_length())));
    return density[static_cast<size_t>(i)];
  }
};

using SingularPiece = std::variant<Atom, Facet>;

inline double piece_mass(const SingularPiece& p) {
  if (std::holds_alternative<Atom>(p)) return std::get<Atom>(p).weight.norm();
  return std::get<Facet>(p).mass();
}

class RadonMeasure {
 public:
  RadonMeasure() = default;
  RadonMeasure(GridDomain domain, int m)
      : domain_(std::move(domain)), m_(m),
        ac_(static_cast<size_t>(domain_.node_count()), Vec::Zero(m)) {}

  const GridDomain& domain() const { return domain_; }
  int value_dim() const { return m_; }

  Vec& ac(int node) { return ac_[static_cast<size_t>(node)]; }
  const Vec& ac(int node) const { return ac_[static_cast<size_t>(node)]; }
  void set_ac(const std::function<Vec(const Vec&)>& density) {
    for (int c = 0; c < domain_.node_count(); ++c) ac_[static_cast<size_t>(c)] = density(domain_.node(c));
  }

  const std::vector<SingularPiece>& singular() const { return singular_; }
  void add_atom(Vec location, Vec weight) {
    if (weight.size() != m_) throw std::invalid_argument("add_atom: weight dim");
    if (!domain_.box().contains(location)) throw std::invalid_argument("add_atom: outside domain");
    singular_.push_back(Atom{std::move(location), std::move(weight)});
  }
  void add_facet(Facet f) {
    if (domain_.dim() != 2) throw std::invalid_argument("add_facet: facets require N = 2");
    if (f.density.empty() || f.density[0].size() != m_)
      throw std::invalid_argument("add_facet: density dim");
    if (std::abs(f.normal.norm() - 1.0) > 1e-12 || std::abs(f.tangent.norm() - 1.0) > 1e-12 ||
        std::abs(f.normal.dot(f.tangent)) > 1e-12)
      throw std::invalid_argument("add_facet: frame must be orthonormal");
    singular_.push_back(std::move(f));
  }

  // |mu|(region) = integral of |ac| + singular masses, facets clipped
  double total_variation(const Box& region) const {
    check_region(region);
    double s = domain_.integrate(
        [&](int c, const Vec&) { return ac_[static_cast<size_t>(c)].norm(); }, region);
    for (const auto& p : singular_) {
      if (std::holds_alternative<Atom>(p)) {
        const Atom& a = std::get<Atom>(p);
        if (region.contains(a.location)) s += a.weight.norm();
      } else {
        s += std::get<Facet>(p).mass_in(region);
      }
    }
    return s;
  }
  double total_variation() const { return total_variation(domain_.box()); }

  // integral of sqrt(1+|ac|^2) + singular mass
  double area_functional(const Box& region) const {
    check_region(region);
    double s = domain_.integrate(
        [&](int c, const Vec&) { return std::sqrt(1.0 + ac_[static_cast<size_t>(c)].squaredNorm()); },
        region);
    for (const auto& p : singular_) {
      if (std::holds_alternative<Atom>(p)) {
        const Atom& a = std::get<Atom>(p);
        if (region.contains(a.location)) s += a.weight.norm();
      } else {
        s += std::get<Facet>(p).mass_in(region);
      }
    }
    return s;
  }
  double area_functional() const { return area_functional(domain_.box()); }

  // multilinear interpolation of the ac samples (clamped at the boundary)
  Vec ac_interpolate(const Vec& x) const {
    int nd = domain_.dim();
    std::vector<int> base(static_cast<size_t>(nd));
    std::vector<double> frac(static_cast<size_t>(nd));
    for (int i = 0; i < nd; ++i) {
      double u = (x[i] - domain_.lo()[i]) / domain_.spacing()[i] - 0.5;
      double fl = std::floor(u);
      int b = static_cast<int>(fl);
      double fr = u - fl;
      if (b < 0) { b = 0; fr = 0.0; }
      if (b > domain_.cells()[static_cast<size_t>(i)] - 2) {
        b = domain_.cells()[static_cast<size_t>(i)] - 2;
        fr = 1.0;
      }
      if (domain_.cells()[static_cast<size_t>(i)] == 1) { b = 0; fr = 0.0; }
      base[static_cast<size_t>(i)] = b;
      frac[static_cast<size_t>(i)] = fr;
    }
    Vec out = Vec::Zero(m_);
    int corners = 1 << nd;
    for (int c = 0; c < corners; ++c) {
      double w = 1.0;
      std::vector<int> idx(static_cast<size_t>(nd));
      for (int i = 0; i < nd; ++i) {
        int bit = (c >> i) & 1;
        int cells_i = domain_.cells()[static_cast<size_t>(i)];
        int j = base[static_cast<size_t>(i)] + bit;
        if (cells_i == 1) { j = 0; w *= (bit == 0) ? 1.0 : 0.0; }
        else w *= bit ? frac[static_cast<size_t>(i)] : 1.0 - frac[static_cast<size_t>(i)];
        idx[static_cast<size_t>(i)] = j;
      }
      if (w != 0.0) out += w * ac_[static_cast<size_t>(domain_.flat_index(idx))];
    }
    return out;
  }

 private:
  void check_region(const Box& region) const {
    for (int i = 0; i < domain_.dim(); ++i)
      if (region.lo[i] < domain_.lo()[i] - 1e-12 || region.hi[i] > domain_.hi()[i] + 1e-12)
        throw std::invalid_argument("region outside domain");
  }

  GridDomain domain_;
  int m_ = 0;
  std::vector<Vec> ac_;
  std::vector<SingularPiece> singular_;
};

struct DecomposeResult {
  RadonMeasure ac_part;
  RadonMeasure singular_part;
  bool consistent = true;
  std::string message;
};

// Splits mu into its parts and verifies the stored representation: the total
// variation of the ac (resp. singular) part equals the ac (resp. singular)
// part of the total variation, nodewise and piecewise. Overlapping singular
// supports with inconsistent densities are a validation error.
inline DecomposeResult decompose(const RadonMeasure& mu) {
  DecomposeResult r{RadonMeasure(mu.domain(), mu.value_dim()),
                    RadonMeasure(mu.domain(), mu.value_dim()), true, ""};
  for (int c = 0; c < mu.domain().node_count(); ++c) r.ac_part.ac(c) = mu.ac(c);
  for (const auto& p : mu.singular()) {
    if (std::holds_alternative<Atom>(p)) {
      const Atom& a = std::get<Atom>(p);
      r.singular_part.add_atom(a.location, a.weight);
    } else {
      r.singular_part.add_facet(std::get<Facet>(p));
    }
  }
  // pairwise support checks
  const auto& sing = mu.singular();
  for (size_t i = 0; i < sing.size() && r.consistent; ++i) {
    for (size_t j = i + 1; j < sing.size() && r.consistent; ++j) {
      if (std::holds_alternative<Atom>(sing[i]) && std::holds_alternative<Atom>(sing[j])) {
        const Atom& a = std::get<Atom>(sing[i]);
        const Atom& b = std::get<Atom>(sing[j]);
        if ((a.location - b.location).norm() < 1e-12) {
          double cross = (a.weight.normalized() - b.weight.normalized()).norm();
          if (cross > 1e-10) {
            r.consistent = false;
            r.message = "coincident atoms with non-parallel weights";
          }
        }
      } else if (std::holds_alternative<Facet>(sing[i]) && std::holds_alternative<Facet>(sing[j])) {
        const Facet& a = std::get<Facet>(sing[i]);
        const Facet& b = std::get<Facet>(sing[j]);
        if (std::abs(std::abs(a.tangent.dot(b.tangent)) - 1.0) < 1e-12 &&
            std::abs((b.p0 - a.p0).dot(a.normal)) < 1e-12) {
          // same line; overlapping parameter ranges must carry equal densities
          double s0 = (b.p0 - a.p0).dot(a.tangent);
          double sgn = a.tangent.dot(b.tangent) > 0 ? 1.0 : -1.0;
          double lo = std::max(0.0, std::min(s0, s0 + sgn * b.length));
          double hi = std::min(a.length, std::max(s0, s0 + sgn * b.length));
          if (hi - lo > 1e-12) {
            for (double t = lo + (hi - lo) / 10.0; t < hi; t += (hi - lo) / 5.0) {
              Vec da = a.density_at(t);
              Vec db = b.density_at(sgn > 0 ? t - s0 : s0 - t);
              if ((da - db).norm() > 1e-10) {
                r.consistent = false;
                r.message = "overlapping facet supports with inconsistent densities";
                break;
              }
            }
          }
        }
      }
    }
  }
  return r;
}

// --- kernel quadratures ------------------------------------------------

// Discrete convolution of the ac part at x; weights normalized so the
// discrete kernel integrates to one (keeps Jensen inequalities exact at the
// quadrature level and reproduces constants).
inline Vec ac_convolution(const RadonMeasure& mu, const Vec& x, const Mollifier& mol) {
  const GridDomain& g = mu.domain();
  double eps = mol.radius();
  int nd = g.dim();
  std::vector<int> lo_idx(static_cast<size_t>(nd)), hi_idx(static_cast<size_t>(nd));
  for (int i = 0; i < nd; ++i) {
    lo_idx[static_cast<size_t>(i)] = std::max(
        0, static_cast<int>(std::floor((x[i] - eps - g.lo()[i]) / g.spacing()[i] - 0.5)));
    hi_idx[static_cast<size_t>(i)] = std::min(
        g.cells()[static_cast<size_t>(i)] - 1,
        static_cast<int>(std::ceil((x[i] + eps - g.lo()[i]) / g.spacing()[i] - 0.5)));
  }
  Vec acc = Vec::Zero(mu.value_dim());
  double wsum = 0.0;
  std::vector<int> idx = lo_idx;
  while (true) {
    int flat = g.flat_index(idx);
    Vec y = g.node(flat);
    double w = mol(x - y);
    if (w > 0.0) {
      acc += w * mu.ac(flat);
      wsum += w;
    }
    int axis = nd - 1;
    while (axis >= 0) {
      if (++idx[static_cast<size_t>(axis)] <= hi_idx[static_cast<size_t>(axis)]) break;
      idx[static_cast<size_t>(axis)] = lo_idx[static_cast<size_t>(axis)];
      --axis;
    }
    if (axis < 0) break;
  }
  if (wsum <= 0.0) return Vec::Zero(mu.value_dim());
  return acc / wsum;
}

// Same discrete weights applied to an arbitrary nodewise integrand (used for
// the right side of the ac Jensen bound).
inline double ac_convolution_of(const RadonMeasure& mu, const Vec& x, const Mollifier& mol,
                                const std::function<double(const Vec&)>& g_of_density) {
  const GridDomain& g = mu.domain();
  double eps = mol.radius();
  int nd = g.dim();
  std::vector<int> lo_idx(static_cast<size_t>(nd)), hi_idx(static_cast<size_t>(nd));
  for (int i = 0; i < nd; ++i) {
    lo_idx[static_cast<size_t>(i)] = std::max(
        0, static_cast<int>(std::floor((x[i] - eps - g.lo()[i]) / g.spacing()[i] - 0.5)));
    hi_idx[static_cast<size_t>(i)] = std::min(
        g.cells()[static_cast<size_t>(i)] - 1,
        static_cast<int>(std::ceil((x[i] + eps - g.lo()[i]) / g.spacing()[i] - 0.5)));
  }
  double acc = 0.0, wsum = 0.0;
  std::vector<int> idx = lo_idx;
  while (true) {
    int flat = g.flat_index(idx);
    Vec y = g.node(flat);
    double w = mol(x - y);
    if (w > 0.0) {
      acc += w * g_of_density(mu.ac(flat));
      wsum += w;
    }
    int axis = nd - 1;
    while (axis >= 0) {
      if (++idx[static_cast<size_t>(axis)] <= hi_idx[static_cast<size_t>(axis)]) break;
      idx[static_cast<size_t>(axis)] = lo_idx[static_cast<size_t>(axis)];
      --axis;
    }
    if (axis < 0) break;
  }
  if (wsum <= 0.0) return 0.0;
  return acc / wsum;
}

namespace detail {
// quadrature over the singular support of integrand(density_vector) * phi_eps(y-x)
template <typename F>
void singular_kernel_sum(const RadonMeasure& mu, const Vec& x, const Mollifier& mol, F&& accum) {
  for (const auto& p : mu.singular()) {
    if (std::holds_alternative<Atom>(p)) {
      const Atom& a = std::get<Atom>(p);
      double w = mol(x - a.location);
      if (w > 0.0) accum(a.weight, w, 1.0);
    } else {
      const Facet& f = std::get<Facet>(p);
      const Quadrature1D& q = gauss_legendre(16);
      double sl = f.sub_length();
      for (int i = 0; i < f.nsub(); ++i) {
        double a = i * sl, mid = a + 0.5 * sl, half = 0.5 * sl;
        for (size_t k = 0; k < q.nodes.size(); ++k) {
          double t = mid + half * q.nodes[k];
          double w = mol(x - f.point(t));
          if (w > 0.0) accum(f.density[static_cast<size_t>(i)], w, q.weights[k] * half);
        }
      }
    }
  }
}
}  // namespace detail

// (mu_s * phi_eps)(x), exact kernel for atoms, Gauss-Legendre along facets
inline Vec singular_convolution(const RadonMeasure& mu, const Vec& x, const Mollifier& mol) {
  Vec acc = Vec::Zero(mu.value_dim());
  detail::singular_kernel_sum(mu, x, mol, [&](const Vec& dens, double w, double dl) {
    acc += (w * dl) * dens;
  });
  return acc;
}

// t_eps(x) = (|mu_s| * phi_eps)(x)
inline double singular_tv_convolution(const RadonMeasure& mu, const Vec& x, const Mollifier& mol) {
  double acc = 0.0;
  detail::singular_kernel_sum(mu, x, mol, [&](const Vec& dens, double w, double dl) {
    acc += w * dl * dens.norm();
  });
  return acc;
}

// right side of the singular Jensen bound:
//   integral of g(2 t_eps(x) nu(y)) / t_eps(x) * phi_eps(y - x) d|mu_s|(y)
// evaluated with the same quadrature that defines t_eps
inline double singular_jensen_rhs(const RadonMeasure& mu, const Vec& x, const Mollifier& mol,
                                  const std::function<double(const Vec&)>& g) {
  double t_eps = singular_tv_convolution(mu, x, mol);
  if (t_eps <= 0.0) throw std::invalid_argument("singular_jensen_rhs: t_eps vanishes at x");
  double acc = 0.0;
  detail::singular_kernel_sum(mu, x, mol, [&](const Vec& dens, double w, double dl) {
    double m = dens.norm();
    if (m > 0.0) acc += g(2.0 * t_eps * (dens / m)) / t_eps * w * dl * m;
  });
  return acc;
}

// mu * phi_eps sampled on the eps-shrunk grid (same spacing, whole cells
// trimmed from every side so the kernel support stays inside the domain)
inline RadonMeasure mollify(const RadonMeasure& mu, double eps) {
  const GridDomain& g = mu.domain();
  Mollifier mol(g.dim(), eps);
  std::vector<int> trim(static_cast<size_t>(g.dim()));
  std::vector<int> cells(static_cast<size_t>(g.dim()));
  Vec lo = g.lo(), hi = g.hi();
  for (int i = 0; i < g.dim(); ++i) {
    trim[static_cast<size_t>(i)] = static_cast<int>(std::ceil(eps / g.spacing()[i] - 1e-12));
    cells[static_cast<size_t>(i)] = g.cells()[static_cast<size_t>(i)] - 2 * trim[static_cast<size_t>(i)];
    if (cells[static_cast<size_t>(i)] < 1)
      throw std::invalid_argument("mollify: eps too large for the domain");
    lo[i] += trim[static_cast<size_t>(i)] * g.spacing()[i];
    hi[i] -= trim[static_cast<size_t>(i)] * g.spacing()[i];
  }
  RadonMeasure out(GridDomain(lo, hi, cells), mu.value_dim());
  int n = out.domain().node_count();
  std::vector<Vec> vals(static_cast<size_t>(n));
  parallel_for(n, [&](int c) {
    Vec x = out.domain().node(c);
    vals[static_cast<size_t>(c)] = ac_convolution(mu, x, mol) + singular_convolution(mu, x, mol);
  });
  for (int c = 0; c < n; ++c) out.ac(c) = vals[static_cast<size_t>(c)];
  return out;
}

// E -> mu(x0 + r E) / normalization on the unit cube Q = [-1/2, 1/2]^N
inline RadonMeasure pushforward_blowup(const RadonMeasure& mu, const Vec& x0, double r,
                                       double normalization, int out_cells = 0) {
  const GridDomain& g = mu.domain();
  int nd = g.dim();
  Box qbox{x0 - Vec::Constant(nd, r / 2.0), x0 + Vec::Constant(nd, r / 2.0)};
  for (int i = 0; i < nd; ++i)
    if (qbox.lo[i] < g.lo()[i] - 1e-12 || qbox.hi[i] > g.hi()[i] + 1e-12)
      throw std::invalid_argument("pushforward_blowup: cube outside domain");
  if (out_cells <= 0) out_cells = *std::max_element(g.cells().begin(), g.cells().end());
  GridDomain qgrid = GridDomain::uniform(Vec::Constant(nd, -0.5), Vec::Constant(nd, 0.5), out_cells);
  RadonMeasure out(qgrid, mu.value_dim());
  double scale = std::pow(r, nd) / normalization;
  for (int c = 0; c < qgrid.node_count(); ++c)
    out.ac(c) = scale * mu.ac_interpolate(x0 + r * qgrid.node(c));
  for (const auto& p : mu.singular()) {
    if (std::holds_alternative<Atom>(p)) {
      const Atom& a = std::get<Atom>(p);
      if (qbox.contains(a.location)) out.add_atom((a.location - x0) / r, a.weight / normalization);
    } else {
      const Facet& f = std::get<Facet>(p);
      auto [t0, t1] = f.clip_params(qbox);
      if (t1 <= t0) continue;
      Facet nf;
      nf.p0 = (f.point(t0) - x0) / r;
      nf.tangent = f.tangent;
      nf.normal = f.normal;
      nf.length = (t1 - t0) / r;
      int nsub = std::max(1, static_cast<int>(std::ceil(f.nsub() * (t1 - t0) / f.length)));
      nf.density.resize(static_cast<size_t>(nsub));
      double fac = std::pow(r, nd - 1) / normalization;
      for (int i = 0; i < nsub; ++i) {
        double s = (i + 0.5) * nf.length / nsub;           // new parameter midpoint
        nf.density[static_cast<size_t>(i)] = fac * f.density_at(t0 + r * s);
      }
      out.add_facet(std::move(nf));
    }
  }
  return out;
}

// --- serialization -------------------------------------------------------

inline void write_measure(const RadonMeasure& mu, std::ostream& os) {
  const GridDomain& g = mu.domain();
  os << "measure v1\n";
  os << "dim " << g.dim() << "\n";
  os << "value_dim " << mu.value_dim() << "\n";
  os << "lo";
  for (int i = 0; i < g.dim(); ++i) os << " " << fmt_num(g.lo()[i]);
  os << "\nhi";
  for (int i = 0; i < g.dim(); ++i) os << " " << fmt_num(g.hi()[i]);
  os << "\ncells";
  for (int c : g.cells()) os << " " << c;
  os << "\nac\n";
  for (int c = 0; c < g.node_count(); ++c) {
    for (int j = 0; j < mu.value_dim(); ++j) os << (j ? " " : "") << fmt_num(mu.ac(c)[j]);
    os << "\n";
  }
  int natoms = 0, nfacets = 0;
  for (const auto& p : mu.singular())
    (std::holds_alternative<Atom>(p) ? natoms : nfacets)++;
  os << "atoms " << natoms << "\n";
  for (const auto& p : mu.singular()) {
    if (!std::holds_alternative<Atom>(p)) continue;
    const Atom& a = std::get<Atom>(p);
    for (int i = 0; i < a.location.size(); ++i) os << (i ? " " : "") << fmt_num(a.location[i]);
    for (int i = 0; i < a.weight.size(); ++i) os << " " << fmt_num(a.weight[i]);
    os << "\n";
  }
  os << "facets " << nfacets << "\n";
  for (const auto& p : mu.singular()) {
    if (!std::holds_alternative<Facet>(p)) continue;
    const Facet& f = std::get<Facet>(p);
    os << "facet " << f.nsub() << " " << fmt_num(f.length) << "\n";
    auto put = [&](const Vec& v) {
      for (int i = 0; i < v.size(); ++i) os << (i ? " " : "") << fmt_num(v[i]);
      os << "\n";
    };
    put(f.p0);
    put(f.tangent);
    put(f.normal);
    for (const Vec& dnsty : f.density) put(dnsty);
  }
}

// CSV export of a (typically mollified) density for plotting
inline void write_measure_csv(const RadonMeasure& mu, std::ostream& os) {
  const GridDomain& g = mu.domain();
  for (int i = 0; i < g.dim(); ++i) os << "x" << i + 1 << ",";
  for (int j = 0; j < mu.value_dim(); ++j) os << "v" << j + 1 << (j + 1 == mu.value_dim() ? "" : ",");
  os << "\n";
  for (int c = 0; c < g.node_count(); ++c) {
    Vec x = g.node(c);
    for (int i = 0; i < g.dim(); ++i) os << fmt_num(x[i]) << ",";
    for (int j = 0; j < mu.value_dim(); ++j)
      os << fmt_num(mu.ac(c)[j]) << (j + 1 == mu.value_dim() ? "" : ",");
    os << "\n";
  }
}

inline RadonMeasure read_measure(std::istream& is) {
  std::string tok;
  is >> tok;
  if (tok != "measure") throw std::runtime_error("read_measure: bad header");
  is >> tok;  // version
  int nd = 0, m = 0;
  is >> tok >> nd >> tok >> m;
  Vec lo(nd), hi(nd);
  is >> tok;
  for (int i = 0; i < nd; ++i) is >> lo[i];
  is >> tok;
  for (int i = 0; i < nd; ++i) is >> hi[i];
  is >> tok;
  std::vector<int> cells(static_cast<size_t>(nd));
  for (int i = 0; i < nd; ++i) is >> cells[static_cast<size_t>(i)];
  RadonMeasure mu(GridDomain(lo, hi, cells), m);
  is >> tok;  // "ac"
  for (int c = 0; c < mu.domain().node_count(); ++c)
    for (int j = 0; j < m; ++j) is >> mu.ac(c)[j];
  int natoms = 0;
  is >> tok >> natoms;
  for (int k = 0; k < natoms; ++k) {
    Vec loc(nd), w(m);
    for (int i = 0; i < nd; ++i) is >> loc[i];
    for (int i = 0; i < m; ++i) is >> w[i];
    mu.add_atom(loc, w);
  }
  int nfacets = 0;
  is >> tok >> nfacets;
  for (int k = 0; k < nfacets; ++k) {
    Facet f;
    int nsub = 0;
    is >> tok >> nsub >> f.length;
    f.p0.resize(nd);
    f.tangent.resize(nd);
    f.normal.resize(nd);
    for (int i = 0; i < nd; ++i) is >> f.p0[i];
    for (int i = 0; i < nd; ++i) is >> f.tangent[i];
    for (int i = 0; i < nd; ++i) is >> f.normal[i];
    f.density.assign(static_cast<size_t>(nsub), Vec::Zero(m));
    for (int i = 0; i < nsub; ++i)
      for (int j = 0; j < m; ++j) is >> f.density[static_cast<size_t>(i)][j];
    mu.add_facet(std::move(f));
  }
  return mu;
}

}  // namespace bhr

#pragma once

// The space X(N,d,2) of symmetric bilinear maps R^N x R^N -> R^d (Hessian
// values), the cone of tensors a (x) b (x) b, a spanning basis drawn from
// that cone, and convexity/Lipschitz diagnostics along cone directions.

#include "bhr/common.hpp"

#include <optional>

namespace bhr {

class SymTensor {
 public:
  SymTensor() = default;
  SymTensor(int d, int n) : d_(d), n_(n), e_(Eigen::VectorXd::Zero(d * n * n)) {
    if (d < 1 || n < 1) throw std::invalid_argument("SymTensor: dims must be positive");
  }

  static SymTensor zero(int d, int n) { return SymTensor(d, n); }

  // scalar case (N = d = 1)
  static SymTensor scalar(double v) {
    SymTensor t(1, 1);
    t.set(0, 0, 0, v);
    return t;
  }

  int d() const { return d_; }
  int n() const { return n_; }
  int size() const { return d_ * n_ * n_; }

  double at(int k, int i, int j) const { return e_[(k * n_ + i) * n_ + j]; }
  void set(int k, int i, int j, double v) {
    e_[(k * n_ + i) * n_ + j] = v;
    e_[(k * n_ + j) * n_ + i] = v;
  }
  void add(int k, int i, int j, double v) {
    e_[(k * n_ + i) * n_ + j] += v;
    if (i != j) e_[(k * n_ + j) * n_ + i] += v;
  }

  const Vec& data() const { return e_; }
  Vec& data() { return e_; }

  // k-th N x N symmetric slice
  Mat slice(int k) const {
    Mat m(n_, n_);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) m(i, j) = at(k, i, j);
    return m;
  }

  double norm() const { return e_.norm(); }
  double dot(const SymTensor& o) const { return e_.dot(o.e_); }

  bool is_symmetric(double tol = 0.0) const {
    for (int k = 0; k < d_; ++k)
      for (int i = 0; i < n_; ++i)
        for (int j = i + 1; j < n_; ++j)
          if (std::abs(at(k, i, j) - at(k, j, i)) > tol) return false;
    return true;
  }
  bool all_finite() const { return e_.allFinite(); }

  // average of the array with its transpose in the last two indices
  static SymTensor symmetrized(int d, int n, const Vec& raw) {
    if (raw.size() != d * n * n) throw std::invalid_argument("symmetrized: bad size");
    SymTensor t(d, n);
    for (int k = 0; k < d; ++k)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          t.e_[(k * n + i) * n + j] =
              0.5 * (raw[(k * n + i) * n + j] + raw[(k * n + j) * n + i]);
    return t;
  }

  // coordinates on the independent entries (k, i <= j), row-major
  Vec independent_coords() const {
    Vec c(d_ * n_ * (n_ + 1) / 2);
    int p = 0;
    for (int k = 0; k < d_; ++k)
      for (int i = 0; i < n_; ++i)
        for (int j = i; j < n_; ++j) c[p++] = at(k, i, j);
    return c;
  }

  SymTensor& operator+=(const SymTensor& o) {
    e_ += o.e_;
    return *this;
  }
  SymTensor& operator-=(const SymTensor& o) {
    e_ -= o.e_;
    return *this;
  }
  SymTensor& operator*=(double s) {
    e_ *= s;
    return *this;
  }
  friend SymTensor operator+(SymTensor a, const SymTensor& b) { return a += b; }
  friend SymTensor operator-(SymTensor a, const SymTensor& b) { return a -= b; }
  friend SymTensor operator*(double s, SymTensor a) { return a *= s; }

 private:
  int d_ = 0, n_ = 0;
  Vec e_;
};

inline SymTensor random_sym_tensor(Rng& rng, int d, int n) {
  SymTensor t(d, n);
  for (int k = 0; k < d; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) t.set(k, i, j, normal(rng));
  return t;
}

inline SymTensor random_unit_sym_tensor(Rng& rng, int d, int n) {
  SymTensor t = random_sym_tensor(rng, d, n);
  double nm = t.norm();
  while (nm < 1e-12) {
    t = random_sym_tensor(rng, d, n);
    nm = t.norm();
  }
  t *= 1.0 / nm;
  return t;
}

// An element a (x) b (x) b of the cone; symmetric by construction.
struct LambdaGenerator {
  Vec a;  // length d
  Vec b;  // length N

  SymTensor realize() const {
    SymTensor t(static_cast<int>(a.size()), static_cast<int>(b.size()));
    for (int k = 0; k < a.size(); ++k)
      for (int i = 0; i < b.size(); ++i)
        for (int j = i; j < b.size(); ++j) t.set(k, i, j, a[k] * b[i] * b[j]);
    return t;
  }
  double norm() const { return a.norm() * b.squaredNorm(); }
};

struct LambdaBasis {
  int n = 0, d = 0, m = 0;  // m = d*N*(N+1)/2
  std::vector<LambdaGenerator> generators;  // unit Frobenius norm
  Mat coeff_matrix;   // maps independent coords of H to basis coefficients
  double equiv_constant = 1.0;  // sampled estimate, a lower bound on the true c
  std::vector<SymTensor> equiv_samples;  // the unit tensors used for the estimate
};

inline Vec decompose(const SymTensor& h, const LambdaBasis& basis) {
  if (h.d() != basis.d || h.n() != basis.n)
    throw std::invalid_argument("decompose: dimension mismatch with basis");
  return basis.coeff_matrix * h.independent_coords();
}

inline SymTensor reconstruct(const Vec& coeffs, const LambdaBasis& basis) {
  SymTensor t = SymTensor::zero(basis.d, basis.n);
  for (int i = 0; i < basis.m; ++i) {
    SymTensor g = basis.generators[static_cast<size_t>(i)].realize();
    g *= coeffs[i];
    t += g;
  }
  return t;
}

// Spanning unit-norm generators: for each k < d and i <= j < N take a = e_k
// and b = e_i (i = j) or b = (e_i + e_j)/sqrt(2) (i < j).
inline LambdaBasis build_lambda_basis(int n, int d, uint64_t seed = 0, int equiv_samples = 1000) {
  if (n < 1 || d < 1) throw std::invalid_argument("build_lambda_basis: dims must be positive");
  LambdaBasis basis;
  basis.n = n;
  basis.d = d;
  basis.m = d * n * (n + 1) / 2;
  for (int k = 0; k < d; ++k) {
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        LambdaGenerator g;
        g.a = unit_vec(d, k);
        if (i == j) {
          g.b = unit_vec(n, i);
        } else {
          g.b = (unit_vec(n, i) + unit_vec(n, j)) / std::sqrt(2.0);
        }
        SymTensor t = g.realize();
        double nm = t.norm();
        g.a /= nm;  // normalize the realized tensor to unit Frobenius norm
        basis.generators.push_back(g);
      }
    }
  }

  Mat real_mat(basis.m, basis.m);
  for (int c = 0; c < basis.m; ++c)
    real_mat.col(c) = basis.generators[static_cast<size_t>(c)].realize().independent_coords();
  Eigen::FullPivLU<Mat> lu(real_mat);
  if (lu.rank() < basis.m)
    throw std::runtime_error("build_lambda_basis: generators do not span X(N,d,2)");
  basis.coeff_matrix = lu.inverse();

  // sampled norm-equivalence constant; samples kept so the estimate can be
  // re-verified exactly as computed
  Rng rng(seed);
  double cmax = 1.0;
  basis.equiv_samples.reserve(static_cast<size_t>(equiv_samples));
  for (int s = 0; s < equiv_samples; ++s) {
    SymTensor h = random_unit_sym_tensor(rng, d, n);
    Vec a = decompose(h, basis);
    double l1 = a.cwiseAbs().sum();
    cmax = std::max(cmax, std::max(l1, 1.0 / l1));
    basis.equiv_samples.push_back(std::move(h));
  }
  basis.equiv_constant = cmax;
  return basis;
}

// Rank-one detection: H is in the cone iff all slices H_k are multiples of a
// single rank-one symmetric matrix b b^T. Uses the eigendecomposition of the
// slice with largest norm. Relative tolerance with an absolute floor 1e-14.
inline std::optional<LambdaGenerator> is_lambda_direction(const SymTensor& h, double tol) {
  int d = h.d(), n = h.n();
  double hn = h.norm();
  if (hn <= 1e-14) {
    LambdaGenerator g;
    g.a = Vec::Zero(d);
    g.b = unit_vec(n, 0);
    return g;
  }
  int kbest = 0;
  double best = -1.0;
  for (int k = 0; k < d; ++k) {
    double nk = h.slice(k).norm();
    if (nk > best) {
      best = nk;
      kbest = k;
    }
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(h.slice(kbest));
  int imax = 0;
  es.eigenvalues().cwiseAbs().maxCoeff(&imax);
  Vec b = es.eigenvectors().col(imax);
  Vec a(d);
  for (int k = 0; k < d; ++k) a[k] = b.dot(h.slice(k) * b);  // |b b^T|_F = 1
  LambdaGenerator g{a, b};
  SymTensor resid = h - g.realize();
  double thresh = std::max(tol * hn, 1e-14);
  if (resid.norm() <= thresh) return g;
  return std::nullopt;
}

struct ConvexityViolation {
  double violation = -std::numeric_limits<double>::infinity();
  int base_index = -1, direction_index = -1;
  double t1 = 0, t2 = 0, t3 = 0;
};

struct ConvexityReport {
  ConvexityViolation worst;
  int flagged_samples = 0;  // non-finite evaluations
  bool passed(double tol = 1e-9) const { return flagged_samples == 0 && worst.violation <= tol; }
};

// Midpoint inequality of f along each cone direction, over every ordered
// triple of the t grid: f(H + t2 xi) <= interpolation of the outer values.
inline ConvexityReport check_lambda_convexity(
    const std::function<double(const SymTensor&)>& f, const std::vector<SymTensor>& base_samples,
    const std::vector<LambdaGenerator>& directions, const std::vector<double>& t_grid) {
  ConvexityReport rep;
  std::vector<double> ts = t_grid;
  std::sort(ts.begin(), ts.end());
  for (size_t bi = 0; bi < base_samples.size(); ++bi) {
    for (size_t di = 0; di < directions.size(); ++di) {
      SymTensor xi = directions[di].realize();
      std::vector<double> vals(ts.size());
      bool finite = true;
      for (size_t q = 0; q < ts.size(); ++q) {
        SymTensor p = base_samples[bi];
        SymTensor step = xi;
        step *= ts[q];
        p += step;
        vals[q] = f(p);
        if (!std::isfinite(vals[q])) {
          finite = false;
          break;
        }
      }
      if (!finite) {
        rep.flagged_samples++;
        continue;
      }
      for (size_t q1 = 0; q1 + 2 < ts.size(); ++q1)
        for (size_t q2 = q1 + 1; q2 + 1 < ts.size(); ++q2)
          for (size_t q3 = q2 + 1; q3 < ts.size(); ++q3) {
            double lam = (ts[q3] - ts[q2]) / (ts[q3] - ts[q1]);
            double interp = lam * vals[q1] + (1.0 - lam) * vals[q3];
            double v = vals[q2] - interp;
            if (v > rep.worst.violation) {
              rep.worst = {v, static_cast<int>(bi), static_cast<int>(di), ts[q1], ts[q2], ts[q3]};
            }
          }
    }
  }
  return rep;
}

struct LipschitzEstimate {
  double estimated = 0.0;
  double bound = 0.0;  // 3 c M C from the basis
  bool within_bound = true;
};

inline LipschitzEstimate estimate_lipschitz(const std::function<double(const SymTensor&)>& f,
                                            double growth_c, const LambdaBasis& basis,
                                            const std::vector<SymTensor>& samples) {
  LipschitzEstimate est;
  est.bound = 3.0 * basis.equiv_constant * basis.m * growth_c;
  std::vector<double> vals(samples.size());
  for (size_t i = 0; i < samples.size(); ++i) vals[i] = f(samples[i]);
  for (size_t i = 0; i < samples.size(); ++i)
    for (size_t j = i + 1; j < samples.size(); ++j) {
      double dist = (samples[i] - samples[j]).norm();
      if (dist < 1e-14) continue;  // coincident pair
      est.estimated = std::max(est.estimated, std::abs(vals[i] - vals[j]) / dist);
    }
  est.within_bound = est.estimated <= est.bound * (1.0 + 1e-12);
  return est;
}

}  // namespace bhr

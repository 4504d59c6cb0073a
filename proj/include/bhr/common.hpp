#pragma once

// Shared small utilities: vector aliases, seeded RNG, Gauss-Legendre rules,
// the smooth bump profile and smoothstep, CSV number formatting.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace bhr {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline Vec make_vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

inline Vec unit_vec(int n, int k) {
  Vec v = Vec::Zero(n);
  v[k] = 1.0;
  return v;
}

// All randomness in the library flows through explicitly seeded engines.
using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double a, double b) {
  std::uniform_real_distribution<double> d(a, b);
  return d(rng);
}

inline double normal(Rng& rng, double mean = 0.0, double sd = 1.0) {
  std::normal_distribution<double> d(mean, sd);
  return d(rng);
}

inline Vec random_unit(Rng& rng, int n) {
  Vec v(n);
  do {
    for (int i = 0; i < n; ++i) v[i] = normal(rng);
  } while (v.norm() < 1e-12);
  return v / v.norm();
}

struct Quadrature1D {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;  // sum to 2
};

// Gauss-Legendre nodes by Newton iteration on Legendre polynomials.
inline const Quadrature1D& gauss_legendre(int n) {
  static std::vector<Quadrature1D> cache(65);
  if (n < 1 || n > 64) throw std::invalid_argument("gauss_legendre: order out of range");
  Quadrature1D& q = cache[static_cast<size_t>(n)];
  if (!q.nodes.empty()) return q;
  q.nodes.resize(static_cast<size_t>(n));
  q.weights.resize(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      double dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    double dp = n * (x * p1 - p0) / (x * x - 1.0);
    q.nodes[static_cast<size_t>(i)] = x;
    q.weights[static_cast<size_t>(i)] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return q;
}

// Integrate f over [a, b] with an n-point Gauss rule.
inline double integrate_gl(const std::function<double(double)>& f, double a, double b, int n = 16) {
  const Quadrature1D& q = gauss_legendre(n);
  double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double s = 0.0;
  for (size_t i = 0; i < q.nodes.size(); ++i) s += q.weights[i] * f(mid + half * q.nodes[i]);
  return s * half;
}

// The standard C-infinity bump exp(-1/(1-t^2)) on |t|<1, before normalization.
inline double bump_raw(double t2) {
  if (t2 >= 1.0) return 0.0;
  return std::exp(-1.0 / (1.0 - t2));
}

// Smooth transition: 0 for t<=0, 1 for t>=1.
inline double smoothstep_cinf(double t) {
  auto b = [](double s) { return s > 0.0 ? std::exp(-1.0 / s) : 0.0; };
  double num = b(t);
  double den = num + b(1.0 - t);
  return den > 0.0 ? num / den : 0.0;
}

// Fixed decimal formatting so identical runs emit identical bytes.
inline std::string fmt_num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", x);
  return std::string(buf);
}

// Chunked parallel loop; bodies must be independent per index.
inline void parallel_for(int n, const std::function<void(int)>& body) {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw <= 1 || n < 16) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  int nthreads = static_cast<int>(std::min<unsigned>(hw, 8));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(nthreads));
  for (int t = 0; t < nthreads; ++t) {
    pool.emplace_back([&, t]() {
      for (int i = t; i < n; i += nthreads) body(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace bhr

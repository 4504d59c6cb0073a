#pragma once

// Box domains discretized by a tensor-product grid of cells. Absolutely
// continuous densities are sampled at cell centers and integrated by the
// midpoint rule.

#include "bhr/common.hpp"

#include <array>
#include <numeric>

namespace bhr {

struct Box {
  Vec lo, hi;

  int dim() const { return static_cast<int>(lo.size()); }
  double volume() const {
    double v = 1.0;
    for (int i = 0; i < dim(); ++i) v *= hi[i] - lo[i];
    return v;
  }
  bool contains(const Vec& x, double pad = 0.0) const {
    for (int i = 0; i < dim(); ++i)
      if (x[i] < lo[i] - pad || x[i] > hi[i] + pad) return false;
    return true;
  }
  // volume of the intersection with another box, as a fraction of this box
  double overlap_fraction(const Vec& clo, const Vec& chi) const {
    double f = 1.0;
    for (int i = 0; i < dim(); ++i) {
      double l = std::max(lo[i], clo[i]), h = std::min(hi[i], chi[i]);
      if (h <= l) return 0.0;
      f *= (h - l) / (hi[i] - lo[i]);
    }
    return f;
  }
};

class GridDomain {
 public:
  GridDomain() = default;
  GridDomain(Vec lo, Vec hi, std::vector<int> cells)
      : lo_(std::move(lo)), hi_(std::move(hi)), cells_(std::move(cells)) {
    if (lo_.size() != hi_.size() || static_cast<size_t>(lo_.size()) != cells_.size())
      throw std::invalid_argument("GridDomain: dimension mismatch");
    for (int i = 0; i < dim(); ++i) {
      if (!(lo_[i] < hi_[i])) throw std::invalid_argument("GridDomain: lo must be < hi");
      if (cells_[static_cast<size_t>(i)] < 1) throw std::invalid_argument("GridDomain: cells >= 1");
    }
    h_.resize(dim());
    total_ = 1;
    for (int i = 0; i < dim(); ++i) {
      h_[i] = (hi_[i] - lo_[i]) / cells_[static_cast<size_t>(i)];
      total_ *= cells_[static_cast<size_t>(i)];
    }
  }

  static GridDomain uniform(Vec lo, Vec hi, int cells_per_axis) {
    std::vector<int> c(static_cast<size_t>(lo.size()), cells_per_axis);
    return GridDomain(std::move(lo), std::move(hi), std::move(c));
  }
  static GridDomain interval(double a, double b, int cells) {
    return GridDomain(make_vec({a}), make_vec({b}), {cells});
  }

  int dim() const { return static_cast<int>(lo_.size()); }
  const Vec& lo() const { return lo_; }
  const Vec& hi() const { return hi_; }
  const std::vector<int>& cells() const { return cells_; }
  const Vec& spacing() const { return h_; }
  int node_count() const { return total_; }
  double cell_volume() const {
    double v = 1.0;
    for (int i = 0; i < dim(); ++i) v *= h_[i];
    return v;
  }
  Box box() const { return Box{lo_, hi_}; }

  std::vector<int> multi_index(int flat) const {
    std::vector<int> idx(static_cast<size_t>(dim()));
    for (int i = dim() - 1; i >= 0; --i) {
      idx[static_cast<size_t>(i)] = flat % cells_[static_cast<size_t>(i)];
      flat /= cells_[static_cast<size_t>(i)];
    }
    return idx;
  }
  int flat_index(const std::vector<int>& idx) const {
    int f = 0;
    for (int i = 0; i < dim(); ++i) f = f * cells_[static_cast<size_t>(i)] + idx[static_cast<size_t>(i)];
    return f;
  }

  // cell-center node
  Vec node(int flat) const {
    auto idx = multi_index(flat);
    Vec x(dim());
    for (int i = 0; i < dim(); ++i) x[i] = lo_[i] + (idx[static_cast<size_t>(i)] + 0.5) * h_[i];
    return x;
  }
  Box cell_box(int flat) const {
    auto idx = multi_index(flat);
    Vec clo(dim()), chi(dim());
    for (int i = 0; i < dim(); ++i) {
      clo[i] = lo_[i] + idx[static_cast<size_t>(i)] * h_[i];
      chi[i] = clo[i] + h_[i];
    }
    return Box{clo, chi};
  }

  bool same_layout(const GridDomain& o) const {
    return dim() == o.dim() && cells_ == o.cells_ && (lo_ - o.lo_).norm() < 1e-14 &&
           (hi_ - o.hi_).norm() < 1e-14;
  }

  // Midpoint-rule integral of a nodewise function over the intersection with
  // `region`; straddling cells are weighted by their overlap fraction.
  double integrate(const std::function<double(int, const Vec&)>& f, const Box& region) const {
    double cv = cell_volume();
    double s = 0.0;
    for (int c = 0; c < total_; ++c) {
      Box cb = cell_box(c);
      double frac = cb.overlap_fraction(region.lo, region.hi);
      if (frac == 0.0) continue;
      s += frac * cv * f(c, node(c));
    }
    return s;
  }
  double integrate(const std::function<double(int, const Vec&)>& f) const {
    return integrate(f, box());
  }

 private:
  Vec lo_, hi_;
  std::vector<int> cells_;
  Vec h_;
  int total_ = 0;
};

}  // namespace bhr

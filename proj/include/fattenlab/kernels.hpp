#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "fattenlab/grid.hpp"
#include "fattenlab/parallel.hpp"

namespace fattenlab {

namespace detail {

/// Neighbour rows of one x-row along axes 1..dim-1, with ghost rows
/// materialised per the extension policy when the neighbour lies outside.
template <typename Scalar>
class RowNeighbors {
 public:
  RowNeighbors(const ScalarField<Scalar>& f, const Extension& ext)
      : f_(f), ext_(ext), p_(f.grid().points()) {
    for (auto& g : ghost_) g.resize(static_cast<std::size_t>(p_));
  }

  /// Fills prev/next pointers for row r.
  void bind(Index r) {
    const int dim = f_.grid().dim();
    const Index j = r % p_;
    const Index k = dim == 3 ? r / p_ : 0;
    const std::array<Index, 2> pos{j, k};
    for (int a = 1; a < dim; ++a) {
      const Index c = pos[static_cast<std::size_t>(a - 1)];
      const Index stride = f_.grid().stride(a) / p_;  // stride in rows
      const std::size_t slot = static_cast<std::size_t>(2 * (a - 1));
      prev_[static_cast<std::size_t>(a)] = neighbour(r, c, -1, stride, slot);
      next_[static_cast<std::size_t>(a)] = neighbour(r, c, +1, stride, slot + 1);
    }
  }

  const Scalar* row(Index r) const { return f_.data() + r * p_; }
  const Scalar* prev(int axis) const { return prev_[static_cast<std::size_t>(axis)]; }
  const Scalar* next(int axis) const { return next_[static_cast<std::size_t>(axis)]; }

 private:
  const Scalar* neighbour(Index r, Index c, int dir, Index row_stride, std::size_t slot) {
    const Index target = c + dir;
    if (target >= 0 && target < p_) return row(r + dir * row_stride);
    switch (ext_.kind) {
      case Extension::Kind::Periodic: {
        const Index wrapped = target < 0 ? p_ - 1 : 0;
        return row(r + (wrapped - c) * row_stride);
      }
      case Extension::Kind::Constant:
        std::fill(ghost_[slot].begin(), ghost_[slot].end(), static_cast<Scalar>(ext_.value));
        return ghost_[slot].data();
      case Extension::Kind::Linear: {
        const Scalar* edge = row(r);
        const Scalar* inner = row(r - dir * row_stride);
        for (Index i = 0; i < p_; ++i) ghost_[slot][static_cast<std::size_t>(i)] = 2 * edge[i] - inner[i];
        return ghost_[slot].data();
      }
    }
    return nullptr;
  }

  const ScalarField<Scalar>& f_;
  Extension ext_;
  Index p_;
  std::array<std::vector<Scalar>, 4> ghost_;
  std::array<const Scalar*, 3> prev_{};
  std::array<const Scalar*, 3> next_{};
};

/// Value just outside either end of an x-row.
template <typename Scalar>
Scalar ghost_x(const Scalar* row, Index p, int side, const Extension& ext) {
  switch (ext.kind) {
    case Extension::Kind::Periodic:
      return side < 0 ? row[p - 1] : row[0];
    case Extension::Kind::Constant:
      return static_cast<Scalar>(ext.value);
    case Extension::Kind::Linear:
      return side < 0 ? 2 * row[0] - row[1] : 2 * row[p - 1] - row[p - 2];
  }
  return Scalar(0);
}

/// Calls fn(row, center, left, right, nbrs) for every x-row; left/right are the
/// x-ghosts. Rows are distributed with parallel_for.
template <typename Scalar, typename Fn>
void for_each_row(const ScalarField<Scalar>& f, const Extension& ext, Fn&& fn) {
  const Index p = f.grid().points();
  parallel_for(f.grid().rows(), [&](Index begin, Index end) {
    RowNeighbors<Scalar> nbrs(f, ext);
    for (Index r = begin; r < end; ++r) {
      nbrs.bind(r);
      const Scalar* c = nbrs.row(r);
      fn(r, c, ghost_x(c, p, -1, ext), ghost_x(c, p, +1, ext), nbrs);
    }
  });
}

}  // namespace detail

/// Second-order (2 dim + 1)-point Laplacian.
template <typename Scalar>
ScalarField<Scalar> laplacian(const ScalarField<Scalar>& f, const Extension& ext) {
  const Grid& g = f.grid();
  const Index p = g.points();
  const int dim = g.dim();
  const Scalar inv_h2 = Scalar(1) / static_cast<Scalar>(g.spacing() * g.spacing());
  const Scalar diag = static_cast<Scalar>(2 * dim);
  ScalarField<Scalar> out(g, Scalar(0), f.time());
  detail::for_each_row(f, ext, [&](Index r, const Scalar* c, Scalar left, Scalar right, const auto& nb) {
    Scalar* o = out.data() + r * p;
    const Scalar* ym = nb.prev(1);
    const Scalar* yp = nb.next(1);
    if (dim == 2) {
      for (Index i = 0; i < p; ++i) {
        const Scalar xm = i == 0 ? left : c[i - 1];
        const Scalar xp = i == p - 1 ? right : c[i + 1];
        o[i] = (xm + xp + ym[i] + yp[i] - diag * c[i]) * inv_h2;
      }
    } else {
      const Scalar* zm = nb.prev(2);
      const Scalar* zp = nb.next(2);
      for (Index i = 0; i < p; ++i) {
        const Scalar xm = i == 0 ? left : c[i - 1];
        const Scalar xp = i == p - 1 ? right : c[i + 1];
        o[i] = (xm + xp + ym[i] + yp[i] + zm[i] + zp[i] - diag * c[i]) * inv_h2;
      }
    }
  });
  return out;
}

template <typename Scalar>
ScalarField<Scalar> laplacian(const ScalarField<Scalar>& f) {
  return laplacian(f, Extension::phase_field(f.grid()));
}

/// Centred first difference along one axis.
template <typename Scalar>
ScalarField<Scalar> central_difference(const ScalarField<Scalar>& f, int axis, const Extension& ext) {
  const Grid& g = f.grid();
  require(axis >= 0 && axis < g.dim(), "axis out of range");
  const Index p = g.points();
  const Scalar inv_2h = Scalar(1) / static_cast<Scalar>(2 * g.spacing());
  ScalarField<Scalar> out(g, Scalar(0), f.time());
  detail::for_each_row(f, ext, [&](Index r, const Scalar* c, Scalar left, Scalar right, const auto& nb) {
    Scalar* o = out.data() + r * p;
    if (axis == 0) {
      for (Index i = 0; i < p; ++i) {
        const Scalar xm = i == 0 ? left : c[i - 1];
        const Scalar xp = i == p - 1 ? right : c[i + 1];
        o[i] = (xp - xm) * inv_2h;
      }
    } else {
      const Scalar* m = nb.prev(axis);
      const Scalar* q = nb.next(axis);
      for (Index i = 0; i < p; ++i) o[i] = (q[i] - m[i]) * inv_2h;
    }
  });
  return out;
}

/// Three-point second difference along one axis.
template <typename Scalar>
ScalarField<Scalar> second_difference(const ScalarField<Scalar>& f, int axis, const Extension& ext) {
  const Grid& g = f.grid();
  require(axis >= 0 && axis < g.dim(), "axis out of range");
  const Index p = g.points();
  const Scalar inv_h2 = Scalar(1) / static_cast<Scalar>(g.spacing() * g.spacing());
  ScalarField<Scalar> out(g, Scalar(0), f.time());
  detail::for_each_row(f, ext, [&](Index r, const Scalar* c, Scalar left, Scalar right, const auto& nb) {
    Scalar* o = out.data() + r * p;
    if (axis == 0) {
      for (Index i = 0; i < p; ++i) {
        const Scalar xm = i == 0 ? left : c[i - 1];
        const Scalar xp = i == p - 1 ? right : c[i + 1];
        o[i] = (xm + xp - 2 * c[i]) * inv_h2;
      }
    } else {
      const Scalar* m = nb.prev(axis);
      const Scalar* q = nb.next(axis);
      for (Index i = 0; i < p; ++i) o[i] = (q[i] + m[i] - 2 * c[i]) * inv_h2;
    }
  });
  return out;
}

/// |grad f|^2 from centred differences.
template <typename Scalar>
ScalarField<Scalar> gradient_norm_sq(const ScalarField<Scalar>& f, const Extension& ext) {
  ScalarField<Scalar> out(f.grid(), Scalar(0), f.time());
  for (int a = 0; a < f.grid().dim(); ++a) out.values() += central_difference(f, a, ext).values().square();
  return out;
}

/// Node radius of the truncated Gaussian used by heat_convolve.
inline Index heat_kernel_radius(double t, double h) {
  return std::max<Index>(1, static_cast<Index>(std::ceil(6.0 * std::sqrt(2.0 * t) / h)));
}

/// Convolution with the heat kernel (4 pi t)^{-dim/2} exp(-|x|^2 / 4t).
///
/// Separable, truncated at 6 sqrt(2t) and renormalised to unit mass so affine
/// data is reproduced exactly. Samples outside the box follow `ext`.
template <typename Scalar>
ScalarField<Scalar> heat_convolve(const ScalarField<Scalar>& f, double t, const Extension& ext) {
  require(t > 0.0 && std::isfinite(t), "heat_convolve requires t > 0");
  const Grid& g = f.grid();
  const Index p = g.points();
  const Index radius = heat_kernel_radius(t, g.spacing());
  if (radius > p) throw ValidationError("time too large for domain");

  std::vector<Scalar> w(static_cast<std::size_t>(2 * radius + 1));
  long double mass = 0;
  for (Index k = -radius; k <= radius; ++k) {
    const double x = static_cast<double>(k) * g.spacing();
    const double v = std::exp(-x * x / (4.0 * t));
    w[static_cast<std::size_t>(k + radius)] = static_cast<Scalar>(v);
    mass += v;
  }
  for (auto& v : w) v = static_cast<Scalar>(static_cast<long double>(v) / mass);

  ScalarField<Scalar> cur = f;
  ScalarField<Scalar> next(g, Scalar(0), f.time());
  for (int axis = 0; axis < g.dim(); ++axis) {
    const Index stride = g.stride(axis);
    const Index lines = g.size() / p;
    parallel_for(lines, [&](Index begin, Index end) {
      std::vector<Scalar> buf(static_cast<std::size_t>(p + 2 * radius));
      for (Index line = begin; line < end; ++line) {
        // base offset of this line: split line index around the axis
        const Index lower = line % stride;
        const Index upper = line / stride;
        const Index base = lower + upper * stride * p;
        const Scalar* src = cur.data();
        auto at = [&](Index i) { return src[base + i * stride]; };
        for (Index i = 0; i < p; ++i) buf[static_cast<std::size_t>(i + radius)] = at(i);
        for (Index m = 1; m <= radius; ++m) {
          Scalar lo_v{}, hi_v{};
          switch (ext.kind) {
            case Extension::Kind::Periodic:
              lo_v = at(((-m) % p + p) % p);
              hi_v = at((p - 1 + m) % p);
              break;
            case Extension::Kind::Constant:
              lo_v = hi_v = static_cast<Scalar>(ext.value);
              break;
            case Extension::Kind::Linear:
              lo_v = at(0) - static_cast<Scalar>(m) * (at(1) - at(0));
              hi_v = at(p - 1) + static_cast<Scalar>(m) * (at(p - 1) - at(p - 2));
              break;
          }
          buf[static_cast<std::size_t>(radius - m)] = lo_v;
          buf[static_cast<std::size_t>(p - 1 + radius + m)] = hi_v;
        }
        Scalar* dst = next.data();
        for (Index i = 0; i < p; ++i) {
          const Scalar* b = buf.data() + i;
          Scalar s = 0;
          for (Index k = 0; k <= 2 * radius; ++k) s += w[static_cast<std::size_t>(k)] * b[k];
          dst[base + i * stride] = s;
        }
      }
    });
    std::swap(cur, next);
  }
  return cur;
}

/// Compensated sum in index order.
template <typename Derived>
double kahan_sum(const Eigen::ArrayBase<Derived>& a) {
  double sum = 0.0;
  double comp = 0.0;
  for (Index n = 0; n < a.size(); ++n) {
    const double y = static_cast<double>(a[n]) - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return sum;
}

/// Integral over the box: h^dim times the compensated nodal sum.
template <typename Scalar>
double integrate(const ScalarField<Scalar>& f) {
  return kahan_sum(f.values()) * f.grid().cell_volume();
}

/// Multilinear interpolation at p. Points in the half-cell rim between the
/// outermost nodes and the box edge take the nearest-hull value.
template <typename Scalar>
double sample(const ScalarField<Scalar>& f, const Point& x) {
  const Grid& g = f.grid();
  require(g.contains(x), "sample point outside box");
  const Index p = g.points();
  std::array<Index, 3> i0{0, 0, 0};
  std::array<double, 3> frac{0, 0, 0};
  for (int a = 0; a < g.dim(); ++a) {
    double xi = (x[a] - g.lo(a)) / g.spacing() - 0.5;
    xi = std::clamp(xi, 0.0, static_cast<double>(p - 1));
    Index i = static_cast<Index>(std::floor(xi));
    if (i >= p - 1) i = p - 2;
    i0[static_cast<std::size_t>(a)] = i;
    frac[static_cast<std::size_t>(a)] = xi - static_cast<double>(i);
  }
  double v = 0.0;
  const int corners = 1 << g.dim();
  for (int c = 0; c < corners; ++c) {
    double w = 1.0;
    std::array<Index, 3> idx{0, 0, 0};
    for (int a = 0; a < g.dim(); ++a) {
      const bool up = (c >> a) & 1;
      const auto s = static_cast<std::size_t>(a);
      idx[s] = i0[s] + (up ? 1 : 0);
      w *= up ? frac[s] : 1.0 - frac[s];
    }
    if (w != 0.0) v += w * static_cast<double>(f.at(idx[0], idx[1], idx[2]));
  }
  return v;
}

}  // namespace fattenlab

#include "lsmc/control_grid.hpp"

#include <algorithm>
#include <cmath>

namespace lsmc {

bool in_admissible_set(const Vector& v, double tol) {
  if (v.size() == 0) return false;
  if ((v.array() < -tol).any()) return false;
  return v.sum() <= 1.0 + tol;
}

bool lex_less(const Vector& a, const Vector& b) {
  for (Index i = 0; i < a.size(); ++i) {
    if (a[i] < b[i]) return true;
    if (a[i] > b[i]) return false;
  }
  return false;
}

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t out = 1;
  for (std::uint64_t i = 1; i <= k; ++i) out = out * (n - k + i) / i;
  return out;
}

namespace {

// mesh must be 2^-s, s >= 1; returns s or -1
int mesh_exponent(double mesh) {
  if (!(mesh > 0.0) || !(mesh < 1.0)) return -1;
  const double s = -std::log2(mesh);
  const int si = static_cast<int>(std::lround(s));
  if (si < 1 || std::abs(mesh - std::ldexp(1.0, -si)) > 1e-15) return -1;
  return si;
}

void enumerate_coords(int d, int levels, std::vector<int>& prefix, int used,
                      std::vector<std::vector<int>>& out) {
  if (static_cast<int>(prefix.size()) == d) {
    out.push_back(prefix);
    return;
  }
  for (int c = 0; c <= levels - used; ++c) {
    prefix.push_back(c);
    enumerate_coords(d, levels, prefix, used + c, out);
    prefix.pop_back();
  }
}

bool coord_lex_less(const Eigen::MatrixXi& coords, Index row, const std::vector<int>& key) {
  for (Index i = 0; i < coords.cols(); ++i) {
    if (coords(row, i) != key[static_cast<std::size_t>(i)])
      return coords(row, i) < key[static_cast<std::size_t>(i)];
  }
  return false;
}

}  // namespace

ControlGrid build_simplex_grid(Index d, double mesh) {
  if (d < 1) throw ConfigError("control grid: dimension must be >= 1");
  const int s = mesh_exponent(mesh);
  if (s < 0) throw ConfigError("control grid: mesh must be a power 2^-s with s >= 1");

  ControlGrid grid;
  grid.d_ = d;
  grid.mesh_ = mesh;
  grid.levels_ = 1 << s;

  std::vector<std::vector<int>> rows;
  std::vector<int> prefix;
  enumerate_coords(static_cast<int>(d), grid.levels_, prefix, 0, rows);

  grid.coords_.resize(static_cast<Index>(rows.size()), d);
  grid.nodes_.resize(static_cast<Index>(rows.size()), d);
  for (Index r = 0; r < grid.coords_.rows(); ++r)
    for (Index c = 0; c < d; ++c) {
      grid.coords_(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
      grid.nodes_(r, c) = grid.coords_(r, c) * mesh;
    }
  return grid;
}

std::optional<Index> ControlGrid::find(const Vector& alpha, double tol) const {
  if (alpha.size() != d_) return std::nullopt;
  std::vector<int> key(static_cast<std::size_t>(d_));
  int sum = 0;
  for (Index i = 0; i < d_; ++i) {
    const double scaled = alpha[i] / mesh_;
    const int c = static_cast<int>(std::lround(scaled));
    if (c < 0 || std::abs(alpha[i] - c * mesh_) > tol) return std::nullopt;
    key[static_cast<std::size_t>(i)] = c;
    sum += c;
  }
  if (sum > levels_) return std::nullopt;

  Index lo = 0, hi = coords_.rows();
  while (lo < hi) {
    const Index mid = lo + (hi - lo) / 2;
    if (coord_lex_less(coords_, mid, key))
      lo = mid + 1;
    else
      hi = mid;
  }
  if (lo == coords_.rows()) return std::nullopt;
  for (Index i = 0; i < d_; ++i)
    if (coords_(lo, i) != key[static_cast<std::size_t>(i)]) return std::nullopt;
  return lo;
}

bool LocalPatch::contains(const Vector& p, double tol) const {
  if (p.size() != center.size()) return false;
  for (Index i = 0; i < p.size(); ++i)
    if (p[i] < lo[i] - tol || p[i] > hi[i] + tol) return false;
  return in_admissible_set(p, tol);
}

LocalPatch local_patch(const ControlGrid& grid, Index j, int radius) {
  if (j < 0 || j >= grid.size()) throw std::invalid_argument("local_patch: node index out of range");
  if (radius < 1) throw std::invalid_argument("local_patch: radius must be >= 1");
  const Index d = grid.dim();
  const double reach = radius * grid.mesh();
  LocalPatch patch;
  patch.center = grid.node(j);
  patch.mesh = grid.mesh();
  patch.radius = radius;
  patch.lo.resize(d);
  patch.hi.resize(d);
  for (Index i = 0; i < d; ++i) {
    patch.lo[i] = std::max(0.0, patch.center[i] - reach);
    patch.hi[i] = std::min(1.0, patch.center[i] + reach);
  }

  // Walk the (2r+1)^d integer offsets around the center; for wide grids in
  // high dimension a linear scan over all nodes is cheaper.
  const Index total = grid.size();
  const double enum_count = std::pow(2.0 * radius + 1.0, static_cast<double>(d));
  if (enum_count <= static_cast<double>(total) * 4.0) {
    std::vector<int> offset(static_cast<std::size_t>(d), -radius);
    Vector cand(d);
    while (true) {
      bool valid = true;
      int sum = 0;
      for (Index i = 0; i < d; ++i) {
        const int c = grid.coords()(j, i) + offset[static_cast<std::size_t>(i)];
        if (c < 0) {
          valid = false;
          break;
        }
        sum += c;
        cand[i] = c * grid.mesh();
      }
      if (valid && sum <= grid.levels()) {
        if (auto idx = grid.find(cand)) patch.node_indices.push_back(*idx);
      }
      Index axis = d - 1;
      while (axis >= 0 && offset[static_cast<std::size_t>(axis)] == radius) {
        offset[static_cast<std::size_t>(axis)] = -radius;
        --axis;
      }
      if (axis < 0) break;
      ++offset[static_cast<std::size_t>(axis)];
    }
    std::sort(patch.node_indices.begin(), patch.node_indices.end());
  } else {
    for (Index r = 0; r < total; ++r) {
      bool near = true;
      for (Index i = 0; i < d; ++i) {
        if (std::abs(grid.coords()(r, i) - grid.coords()(j, i)) > radius) {
          near = false;
          break;
        }
      }
      if (near) patch.node_indices.push_back(r);
    }
  }

  patch.nodes.resize(static_cast<Index>(patch.node_indices.size()), d);
  for (Index r = 0; r < patch.nodes.rows(); ++r)
    patch.nodes.row(r) = grid.nodes().row(patch.node_indices[static_cast<std::size_t>(r)]);
  return patch;
}

LocalPatch local_patch(const ControlGrid& grid, const Vector& alpha_hat, int radius) {
  const auto j = grid.find(alpha_hat);
  if (!j) throw std::invalid_argument("local_patch: alpha_hat is not a grid node");
  return local_patch(grid, *j, radius);
}

Matrix refine_grid(const Vector& center, double mesh, int p, const LocalPatch& patch) {
  if (p < 1) throw std::invalid_argument("refine_grid: refinement level must be >= 1");
  const Index d = center.size();
  const double h = mesh / std::ldexp(1.0, p);

  Matrix cand(1 + 2 * d, d);
  Index n = 0;
  cand.row(n++) = center;
  for (Index i = 0; i < d; ++i) {
    for (const double sign : {-1.0, 1.0}) {
      Vector c = center;
      c[i] += sign * h;
      if (patch.contains(c)) cand.row(n++) = c;
    }
  }
  return cand.topRows(n);
}

}  // namespace lsmc

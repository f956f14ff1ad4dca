#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "lsmc/types.hpp"

namespace lsmc {

/// True when v has nonnegative entries summing to at most one, i.e. it is a
/// long-only, unlevered weight vector (cash absorbs the remainder).
bool in_admissible_set(const Vector& v, double tol = 1e-12);

/// Strict lexicographic order on equal-length vectors.
bool lex_less(const Vector& a, const Vector& b);

std::uint64_t binomial(std::uint64_t n, std::uint64_t k);

/// Regular simplex discretization with spacing `mesh` = 2^-s.  Nodes are all
/// admissible weight vectors whose entries are integer multiples of the mesh,
/// stored in ascending lexicographic order.
class ControlGrid {
 public:
  ControlGrid() = default;

  Index dim() const { return d_; }
  double mesh() const { return mesh_; }
  int levels() const { return levels_; }
  Index size() const { return nodes_.rows(); }
  const Matrix& nodes() const { return nodes_; }
  Vector node(Index j) const { return nodes_.row(j); }
  const Eigen::MatrixXi& coords() const { return coords_; }

  /// Index of the node equal to alpha (within tolerance), if any.
  std::optional<Index> find(const Vector& alpha, double tol = 1e-9) const;

  friend ControlGrid build_simplex_grid(Index d, double mesh);

 private:
  Index d_ = 0;
  double mesh_ = 0.0;
  int levels_ = 0;
  Eigen::MatrixXi coords_;
  Matrix nodes_;
};

/// Throws ConfigError unless d >= 1 and mesh is 2^-s for integer s >= 1.
ControlGrid build_simplex_grid(Index d, double mesh);

/// Neighborhood of a grid node: the surrounding discrete nodes within
/// `radius` mesh steps in the max norm, plus the continuous box they span
/// clipped to the admissible set.
struct LocalPatch {
  Vector center;
  double mesh = 0.0;
  int radius = 1;
  std::vector<Index> node_indices;
  Matrix nodes;      // one row per patch node
  Vector lo, hi;     // per-axis continuous bounds

  /// Point lies in the box and in the admissible set.
  bool contains(const Vector& p, double tol = 1e-12) const;
};

/// Patch around grid node j.  Boundary nodes keep fewer neighbors than
/// interior ones; pass a larger radius when the caller needs more.
LocalPatch local_patch(const ControlGrid& grid, Index j, int radius = 1);

/// Patch around the node equal to alpha_hat; throws std::invalid_argument
/// when alpha_hat is not a grid node.
LocalPatch local_patch(const ControlGrid& grid, const Vector& alpha_hat, int radius = 1);

/// Level-p refinement candidates around `center`: the point itself plus one
/// step of size mesh / 2^p in each axis direction, keeping only candidates
/// inside the patch.  Rows come back in a fixed order (center, then -/+ per
/// axis) so downstream tie-breaking is deterministic.
Matrix refine_grid(const Vector& center, double mesh, int p, const LocalPatch& patch);

}  // namespace lsmc

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <vector>

#include "lowrank_sdp/applications.hpp"
#include "lowrank_sdp/manifold.hpp"

namespace testutil {

using lowrank_sdp::ConstraintSet;
using lowrank_sdp::Index;
using lowrank_sdp::Matrix;
using lowrank_sdp::SparseMatrix;
using lowrank_sdp::Vector;

inline Matrix gaussian(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix a(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) a(i, j) = normal(rng);
  return a;
}

inline Matrix random_orthogonal(Index n, std::uint64_t seed) {
  Eigen::HouseholderQR<Matrix> qr(gaussian(n, n, seed));
  return qr.householderQ() * Matrix::Identity(n, n);
}

inline Matrix random_symmetric(Index n, std::uint64_t seed) {
  const Matrix a = gaussian(n, n, seed);
  return 0.5 * (a + a.transpose());
}

/// Pairwise orthogonal A_i = Q_i D_i Q_i^T on disjoint column blocks of a
/// random orthogonal Q, with positive non-constant diagonals D_i, covering
/// all of R^n so every full-rank factor is constrained.
inline ConstraintSet random_generic(Index n, Index m, std::uint64_t seed) {
  const Matrix q = random_orthogonal(n, seed);
  std::mt19937_64 rng(seed + 17);
  std::uniform_real_distribution<double> weight(0.5, 2.0);
  std::vector<SparseMatrix> mats;
  Vector b(m);
  Index start = 0;
  for (Index i = 0; i < m; ++i) {
    const Index len = n / m + (i < n % m ? 1 : 0);
    Vector d(len);
    for (Index k = 0; k < len; ++k) d(k) = weight(rng);
    const Matrix block = q.middleCols(start, len);
    Matrix a = block * d.asDiagonal() * block.transpose();
    a = 0.5 * (a + a.transpose()).eval();
    mats.push_back(a.sparseView(1e-300));
    b(i) = 0.5 + weight(rng);
    start += len;
  }
  return ConstraintSet::generic(n, std::move(mats), b);
}

inline ConstraintSet make_geometry(int kind, Index n, std::uint64_t seed) {
  if (kind == 0) return ConstraintSet::elliptope(n);
  if (kind == 1) return ConstraintSet::spectahedron(n);
  return random_generic(n, std::max<Index>(1, std::min<Index>(3, n / 2)), seed);
}

inline double rel_err(const Matrix& a, const Matrix& b) {
  return (a - b).norm() / std::max({a.norm(), b.norm(), 1e-300});
}

inline lowrank_sdp::Graph random_graph(Index n, double density, std::uint64_t seed,
                                       bool weighted = false) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(density);
  std::uniform_real_distribution<double> w(0.1, 2.0);
  std::vector<lowrank_sdp::Edge> edges;
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j)
      if (coin(rng)) edges.push_back({i, j, weighted ? w(rng) : 1.0});
  return lowrank_sdp::Graph(n, edges);
}

/// Exhaustive maximum cut, n <= 20.
inline double brute_force_maxcut(const lowrank_sdp::Graph& g) {
  const Index n = g.vertex_count();
  double best = 0.0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << (n - 1)); ++mask) {
    double cut = 0.0;
    for (const auto& e : g.edges()) {
      if (((mask >> e.i) & 1U) != ((mask >> e.j) & 1U)) cut += e.weight;
    }
    best = std::max(best, cut);
  }
  return best;
}

/// Central difference of a scalar function along a direction.
template <typename F>
double central_difference(F&& f, double h) {
  return (f(h) - f(-h)) / (2.0 * h);
}

}  // namespace testutil

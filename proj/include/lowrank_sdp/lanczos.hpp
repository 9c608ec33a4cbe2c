#pragma once

#include <cstdint>
#include <functional>

#include "lowrank_sdp/manifold.hpp"

namespace lowrank_sdp {

struct LanczosOptions {
  Index subspace = 40;      // basis size before a restart
  int max_restarts = 1000;
  double tolerance = 1e-8;  // residual relative to the spectral-norm estimate
  std::uint64_t seed = 7;
};

struct EigenPair {
  double value = 0.0;
  Vector vector;
  double residual = 0.0;
  int restarts = 0;
};

/// Algebraically smallest eigenpair of a symmetric operator given only
/// through products, by thick-restart Lanczos with full reorthogonalization.
/// Throws EigSolverNoConvergence carrying the best Ritz pair.
EigenPair lanczos_smallest(const std::function<Matrix(const Matrix&)>& op, Index n,
                           const LanczosOptions& opts = {});

}  // namespace lowrank_sdp

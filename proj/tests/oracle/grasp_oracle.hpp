#pragma once

#include "binpick/grasp.hpp"

#include <vector>

namespace oracle {

/// Exhaustive re-implementation of surface-normal grasp scoring: all-pairs
/// neighbour search, cyclic Jacobi eigen-decomposition and a linear scan for
/// boundary distances. Slow, for test use only.
struct BruteScore {
  binpick::Vec3 position;
  double score = 0.0;
};

/// Ranked like score_candidates. Returns an empty list where the library
/// would throw StrategyInvalid.
std::vector<BruteScore> brute_force_rank(const std::vector<binpick::Vec3>& pts, const binpick::Container& container,
                                         const binpick::GraspScoringParams& params);

/// Symmetric 3x3 eigen-decomposition. Eigenvalues ascending, vectors in columns.
void jacobi_eigen(const double a_in[3][3], double evals[3], double evecs[3][3]);

}  // namespace oracle

#pragma once

#include <cstdint>
#include <span>

namespace binpick {

/// Identity of one sampled surface point: instance plus lattice cell.
using PointKey = std::uint64_t;

PointKey make_point_key(std::size_t instance, int i, int j);

/// (1 + b^2) P R / (b^2 P + R); zero when both P and R are zero.
/// beta < 1 weights precision more heavily than recall.
double f_beta(double precision, double recall, double beta);

/// F-beta over set membership. Inputs need not be sorted; duplicates are
/// ignored. Two empty masks agree perfectly and score 1.
double f_beta(std::span<const PointKey> predicted, std::span<const PointKey> truth, double beta);

}  // namespace binpick

#pragma once

#include "noisyarm/series.hpp"

namespace noisyarm {

// Quintic minimum-jerk position profile: s(0)=0, s(1)=1, zero velocity and
// acceleration at both ends.
double min_jerk(double tau);

// Center of the 3x3 target grid cell for a class label (row-major, label =
// 3*row + col), in arm coordinates.
void board_cell_center(int label, double& x, double& y);

// Deterministic synthetic dataset: a planar 2-link arm reaches from a home
// pose to the labeled grid cell and back along a minimum-jerk profile; joint
// keypoints come from elbow-up inverse kinematics, mounts and base are fixed,
// and each camera applies its own fixed affine view. Per-sample jitter
// perturbs the target position and the apex timing only.
Dataset generate(const GeneratorParams& params);

}  // namespace noisyarm

#pragma once

#include <span>

#include <Eigen/Dense>

#include "csi/grid.hpp"

namespace csi {

/// How the shrinkage factor of the complex soft threshold is formed.
/// `magnitude` uses max(|z| - chi, 0); `literal` uses max(|z - chi|, 0),
/// i.e. the real threshold subtracted from the complex entry itself, which
/// is not phase-equivariant. Only `magnitude` is used by the solvers.
enum class ThresholdRule { magnitude, literal };

/// z_m * s / (s + chi) with s = max(|z_m| - chi, 0); entries with |z_m| <= chi vanish.
Eigen::VectorXcd soft_threshold(const Eigen::Ref<const Eigen::VectorXcd>& z, double chi,
                                ThresholdRule rule = ThresholdRule::magnitude);

/// Threshold level chi >= 0 such that ||Thr^chi(z)||_1 = radius, found by
/// sorting magnitudes in descending order and locating the bracketing entry.
/// Returns 0 when ||z||_1 <= radius.
double l1_threshold_level(const Eigen::Ref<const Eigen::VectorXcd>& z, double radius);

/// Euclidean projection onto {||z||_1 <= radius}: z itself when inside the
/// ball, otherwise Thr^chi(z) with chi from l1_threshold_level.
Eigen::VectorXcd project_l1(const Eigen::Ref<const Eigen::VectorXcd>& z, double radius);

double l1_norm(const Eigen::Ref<const Eigen::VectorXcd>& z);

}  // namespace csi

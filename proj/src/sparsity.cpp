#include "csi/sparsity.hpp"

#include <algorithm>
#include <functional>
#include <stdexcept>
#include <vector>

namespace csi {

double l1_norm(const Eigen::Ref<const Eigen::VectorXcd>& z) { return z.cwiseAbs().sum(); }

Eigen::VectorXcd soft_threshold(const Eigen::Ref<const Eigen::VectorXcd>& z, double chi, ThresholdRule rule) {
  if (!(chi >= 0.0)) throw std::invalid_argument("soft_threshold: threshold must be non-negative");
  Eigen::VectorXcd out(z.size());
  if (chi == 0.0) {
    out = z;
    return out;
  }
  for (Eigen::Index m = 0; m < z.size(); ++m) {
    const double s = rule == ThresholdRule::magnitude ? std::max(std::abs(z[m]) - chi, 0.0)
                                                      : std::abs(z[m] - chi);
    out[m] = s > 0.0 ? z[m] * (s / (s + chi)) : cplx(0.0, 0.0);
  }
  return out;
}

double l1_threshold_level(const Eigen::Ref<const Eigen::VectorXcd>& z, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("project_l1: radius must be positive");
  std::vector<double> x(static_cast<std::size_t>(z.size()));
  for (Eigen::Index m = 0; m < z.size(); ++m) x[static_cast<std::size_t>(m)] = std::abs(z[m]);
  double total = 0.0;
  for (double v : x) total += v;
  if (total <= radius) return 0.0;

  std::sort(x.begin(), x.end(), std::greater<>());
  // With 1-based m, ||Thr^{x_m}(x)||_1 = sum_{k<=m} x_k - m x_m. Walk down the
  // sorted magnitudes until the next bracket value reaches the radius; runs of
  // equal magnitudes leave the bracket value unchanged and are skipped over.
  const std::size_t n = x.size();
  double prefix = 0.0;  // sum_{k<=m} x_k
  for (std::size_t m = 1; m <= n; ++m) {
    prefix += x[m - 1];
    const double next = m < n ? x[m] : 0.0;
    const double at_next = prefix - static_cast<double>(m) * next;  // ||Thr^{x_{m+1}}(x)||_1
    if (at_next >= radius) {
      const double at_m = prefix - static_cast<double>(m) * x[m - 1];
      // Rounding in the prefix sums can leave the level slightly negative.
      return std::max(0.0, x[m - 1] - (radius - at_m) / static_cast<double>(m));
    }
  }
  return 0.0;  // unreachable: at m = n the bracket value equals the total
}

Eigen::VectorXcd project_l1(const Eigen::Ref<const Eigen::VectorXcd>& z, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("project_l1: radius must be positive");
  const double chi = l1_threshold_level(z, radius);
  if (chi == 0.0) return z;
  return soft_threshold(z, chi);
}

}  // namespace csi

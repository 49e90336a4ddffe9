#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace cmcm {

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

struct Roc {
  /// From (0,0) to (1,1), one point per distinct score threshold.
  std::vector<RocPoint> points;
  double auc = 0.0;
  double eer = 0.0;
};

/// Verification ROC over pooled scores; a score is accepted when it is at
/// least the threshold. AUC by the trapezoidal rule, EER by linear
/// interpolation along the curve where fpr = 1 - tpr.
Roc roc(std::span<const double> genuine, std::span<const double> impostor);

/// Threshold maximizing the between-class variance of the 256-bin
/// histogram split {<= t} vs {> t}; ties go to the smallest t.
int otsu_threshold(std::span<const std::uint8_t> values);

}  // namespace cmcm

#pragma once

#include <cmath>

namespace linevio {

// Cauchy robust loss with scale c (applied to whitened squared norms).
struct RobustLoss {
  double scale = 1.0;
};

struct LossEval {
  double cost = 0.0;    // rho(s)
  double weight = 1.0;  // d rho / d s
};

inline LossEval cauchy_weight(double squared_norm, const RobustLoss& loss) {
  const double c2 = loss.scale * loss.scale;
  const double x = squared_norm / c2;
  // log1p keeps the cost sensitive for residuals far below machine epsilon;
  // with plain log(1 + x) the cost saturates and blocks fine-scale descent.
  return LossEval{c2 * std::log1p(x), 1.0 / (1.0 + x)};
}

}  // namespace linevio

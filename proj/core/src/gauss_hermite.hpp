#pragma once

#include <vector>

namespace timebin::detail {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Hermite rule for the weight exp(-y^2) (Golub-Welsch).
QuadratureRule gauss_hermite(int n);

}  // namespace timebin::detail

// Plugging a new composite model into the tests.
#include "equicorrelated_model.hpp"

#include <iostream>

int main() {
  using namespace cldiv;
  EquicorrelatedModel model;
  Vector truth(2);
  truth << 1.0, 0.35;
  Sample s = model.sample(truth, 500, 11);

  auto fit = mcle(model, s);
  std::cout << "mcle: mu = " << fit.theta[0] << ", rho = " << fit.theta[1] << '\n';

  auto null = fix_coordinates(2, {1}, {0.3});
  auto lr = clrt(model, s, null);
  std::cout << "clrt = " << lr.statistic << ", weight = " << lr.spectrum.eigenvalues[0]
            << ", p = " << lr.p_value << (lr.reject ? " (reject)" : " (accept)") << '\n';

  const auto& adj = *lr.adjusted;
  std::cout << "adjusted: t1 = " << adj.t1 << " (p " << adj.p1 << "), t2 = " << adj.t2 << " (p " << adj.p2 << ")\n";
  return 0;
}

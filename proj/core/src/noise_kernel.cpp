#include "swarmloc/noise_kernel.hpp"

#include <cmath>

#include "swarmloc/errors.hpp"

namespace swarmloc {

NoiseKernel::NoiseKernel(double step) : step_(step) {
  if (!(step > 0.0)) throw ConfigError("kernel step must be positive");
}

double NoiseKernel::operator()(double z) const {
  // Irwin-Hall(4) on [0, 4] evaluated at x = 2 - |z|/s, which lies in [0, 2].
  const double x = 2.0 - std::abs(z) / step_;
  if (x <= 0.0) return 0.0;
  double f;
  if (x <= 1.0) {
    f = x * x * x / 6.0;
  } else {
    f = (-3.0 * x * x * x + 12.0 * x * x - 12.0 * x + 4.0) / 6.0;
  }
  return f / step_;
}

}  // namespace swarmloc

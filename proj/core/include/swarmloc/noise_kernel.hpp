#pragma once

namespace swarmloc {

/// Density of the sum of four i.i.d. uniforms on [-s/2, s/2]: a scaled
/// Irwin-Hall(4) density. Piecewise cubic, symmetric, supported on [-2s, 2s].
class NoiseKernel {
 public:
  explicit NoiseKernel(double step);

  double step() const { return step_; }
  double operator()(double z) const;
  double peak() const { return 2.0 / (3.0 * step_); }

 private:
  double step_;
};

}  // namespace swarmloc

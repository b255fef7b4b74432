#include "textscore/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace textscore {

double Rng::normal(double mean, double sd) {
  if (has_spare_) {
    has_spare_ = false;
    return mean + sd * spare_;
  }
  // Box-Muller; 1-u1 keeps the log argument in (0, 1].
  const double u1 = uniform01();
  const double u2 = uniform01();
  const double r = std::sqrt(-2.0 * std::log(1.0 - u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(angle);
  has_spare_ = true;
  return mean + sd * r * std::cos(angle);
}

double Rng::gamma(double shape) {
  if (shape <= 0.0) throw std::invalid_argument("gamma: shape must be > 0");
  if (shape < 1.0) {
    const double u = uniform01();
    return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x;
    double v;
    do {
      x = normal(0.0, 1.0);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform01();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

std::vector<double> Rng::dirichlet_symmetric(std::size_t dim, double alpha) {
  std::vector<double> out(dim);
  double total = 0.0;
  for (auto& g : out) {
    g = gamma(alpha);
    total += g;
  }
  if (total <= 0.0) {
    // all gammas underflowed; fall back to uniform
    for (auto& g : out) g = 1.0 / static_cast<double>(dim);
    return out;
  }
  for (auto& g : out) g /= total;
  return out;
}

}  // namespace textscore

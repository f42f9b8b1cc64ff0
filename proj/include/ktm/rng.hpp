#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace ktm {

// Seeded generator with hand-rolled transforms. mt19937_64 output is pinned
// by the standard; the std::*_distribution transforms are not, so rolling our
// own keeps seeded runs reproducible across standard libraries.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // [0, 1)
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // (0, 1]
  double uniform_pos() { return 1.0 - uniform(); }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double two_pi = 6.283185307179586476925286766559;
    double r = std::sqrt(-2.0 * std::log(uniform_pos()));
    double a = two_pi * uniform();
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // Marsaglia-Tsang, unit scale.
  double gamma(double shape) {
    if (shape < 1.0) {
      return gamma(shape + 1.0) * std::pow(uniform_pos(), 1.0 / shape);
    }
    double d = shape - 1.0 / 3.0;
    double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x;
      double v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      double u = uniform_pos();
      if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) {
        return d * v;
      }
    }
  }

  double chi_squared(double dof) { return 2.0 * gamma(0.5 * dof); }

  std::vector<double> dirichlet(std::size_t k, double concentration) {
    std::vector<double> out(k);
    double sum = 0.0;
    for (auto& g : out) {
      g = gamma(concentration);
      sum += g;
    }
    // A draw of all-zero gammas has probability zero but a subnormal sum can
    // occur for tiny concentrations; fall back to uniform.
    if (!(sum > 0.0)) {
      for (auto& g : out) g = 1.0 / static_cast<double>(k);
      return out;
    }
    for (auto& g : out) g /= sum;
    return out;
  }

  // Inverse-CDF draw from an unnormalized weight vector.
  int categorical(const double* weights, int k) {
    double total = 0.0;
    for (int i = 0; i < k; ++i) total += weights[i];
    double u = uniform() * total;
    double c = 0.0;
    for (int i = 0; i < k; ++i) {
      c += weights[i];
      if (u < c) return i;
    }
    return k - 1;
  }

  // Knuth; fine for the small means used here.
  int poisson(double mean) {
    double l = std::exp(-mean);
    int n = 0;
    double p = 1.0;
    do {
      ++n;
      p *= uniform_pos();
    } while (p > l);
    return n - 1;
  }

private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace ktm

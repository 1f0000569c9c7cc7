#include "bmpcc/sim/idm.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace bmpcc::sim {

void IdmParams::validate() const {
  if (!(v0 > 0.0 && T > 0.0 && s0 > 0.0 && a > 0.0 && b > 0.0 && delta > 0.0)) {
    throw std::invalid_argument("IdmParams: all parameters must be positive");
  }
}

double idm_accel(const IdmParams& p, double v, double gap, double lead_speed) {
  if (!(gap > 0.0)) throw std::domain_error("idm_accel: non-positive gap");
  const double free = 1.0 - std::pow(std::max(v, 0.0) / p.v0, p.delta);
  if (std::isinf(gap)) return p.a * free;
  const double dv = v - lead_speed;
  const double desired = p.s0 + std::max(0.0, v * p.T + v * dv / (2.0 * std::sqrt(p.a * p.b)));
  return p.a * (free - (desired / gap) * (desired / gap));
}

void IdmRanges::validate() const {
  auto check = [](const std::array<double, 2>& r, const char* name) {
    if (!(r[0] > 0.0 && r[0] <= r[1])) {
      throw std::invalid_argument(std::string("IdmRanges: bad range for ") + name);
    }
  };
  check(v0, "v0");
  check(T, "T");
  check(s0, "s0");
  check(a, "a");
  check(b, "b");
  if (!(delta > 0.0)) throw std::invalid_argument("IdmRanges: delta must be positive");
}

IdmParams IdmRanges::sample(std::mt19937_64& rng) const {
  auto draw = [&rng](const std::array<double, 2>& r) {
    return std::uniform_real_distribution<double>(r[0], r[1])(rng);
  };
  IdmParams p;
  p.v0 = draw(v0);
  p.T = draw(T);
  p.s0 = draw(s0);
  p.a = draw(a);
  p.b = draw(b);
  p.delta = delta;
  return p;
}

}  // namespace bmpcc::sim

#include "lrb/random.hpp"

#include <algorithm>
#include <cmath>

#include "lrb/distributions.hpp"

namespace lrb {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t h = splitmix64(master);
  for (auto key : path) h = splitmix64(h ^ splitmix64(key + 0x632be59bd9b4e019ULL));
  return h;
}

// Poisson draw by inversion; normal approximation only for huge means.
double Rng::poisson(double mu) {
  if (mu > 600.0) return std::max(0.0, std::round(mu + std::sqrt(mu) * normal()));
  const double u = uniform();
  double k = 0.0, p = std::exp(-mu), cdf = p;
  while (cdf < u && k < 1e6) {
    k += 1.0;
    p *= mu / k;
    cdf += p;
    if (p == 0.0 && k > mu) break;
  }
  return k;
}

std::uint64_t hash_label(std::string_view label) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

double Rng::normal() { return norm_quantile(uniform()); }

double Rng::exponential() { return -std::log(uniform()); }

}  // namespace lrb

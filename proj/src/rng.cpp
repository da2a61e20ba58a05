#include "eod/rng.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "eod/error.hpp"

namespace eod {

std::size_t Rng::uniform_index(std::size_t n) {
  require(n > 0, ErrorCode::invalid_argument, "uniform_index: empty range");
  const std::uint64_t range = n;
  // Rejection sampling removes modulo bias.
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % range);
  std::uint64_t v;
  do {
    v = engine_();
  } while (v >= limit);
  return static_cast<std::size_t>(v % range);
}

double Rng::uniform01() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal(double mean, double stddev) {
  // Box-Muller without caching the second variate, so the state stays a
  // pure function of the engine.
  double u1 = uniform01();
  while (u1 <= 0.0) u1 = uniform01();
  const double u2 = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  return mean + stddev * r * std::cos(2.0 * std::numbers::pi * u2);
}

std::string Rng::state() const {
  std::ostringstream os;
  os << engine_;
  return os.str();
}

void Rng::restore(const std::string& state) {
  std::istringstream is(state);
  std::mt19937_64 engine;
  is >> engine;
  require(!is.fail(), ErrorCode::parse_error, "malformed rng state");
  engine_ = engine;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::string_view stream,
                          std::uint64_t index) {
  // FNV-1a over the stream name.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : stream) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(splitmix64(master ^ h) + index);
}

}  // namespace eod

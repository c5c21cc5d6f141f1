#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace rmipp {

using LocationId = std::size_t;
using Rng = std::mt19937_64;

struct Point {
  double x = 0.0;
  double y = 0.0;
};

using Sites = std::vector<Point>;
using SitesPtr = std::shared_ptr<const Sites>;

inline double squared_distance(Point a, Point b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

// Error taxonomy. Each category maps onto one CLI exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad scenario or argument values (exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Filesystem failures (exit code 3).
class IoError : public Error {
 public:
  using Error::Error;
};

// A planning budget or meeting requirement cannot be met (exit code 4).
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

// Covariance factorization failures and similar numerical breakdowns.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Exact computation requested on an instance beyond its size cap.
class TooLargeError : public Error {
 public:
  using Error::Error;
};

namespace seed {

// SplitMix64 finalizer. Stable across platforms and releases.
constexpr std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Counter-based split: child stream `index` of `parent`.
constexpr std::uint64_t derive(std::uint64_t parent, std::uint64_t index) {
  return mix(mix(parent) ^ mix(index + 0x632be59bd9b4e019ULL));
}

constexpr std::uint64_t derive(std::uint64_t parent, std::uint64_t a,
                               std::uint64_t b) {
  return derive(derive(parent, a), b);
}

constexpr std::uint64_t derive(std::uint64_t parent, std::uint64_t a,
                               std::uint64_t b, std::uint64_t c) {
  return derive(derive(parent, a, b), c);
}

// Named sub-streams of a trial seed.
enum class Stream : std::uint64_t {
  environment = 1,
  evidence = 2,
  compromised = 3,
  attack = 4,
  comm = 5,
  placement = 6,
  random_subarea = 7,
  retransmission = 8,
};

constexpr std::uint64_t derive(std::uint64_t parent, Stream s) {
  return derive(parent, static_cast<std::uint64_t>(s));
}

constexpr std::uint64_t derive(std::uint64_t parent, Stream s, std::uint64_t index) {
  return derive(parent, static_cast<std::uint64_t>(s), index);
}

}  // namespace seed

}  // namespace rmipp

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace asdopt {

using Engine = std::mt19937_64;

/// Labels for independent random streams. Every seed used in a run is
/// derived from the master seed and one of these labels, so streams with
/// different labels never share a seed.
enum class Stream : std::uint64_t {
  kSearch = 1,
  kValidation = 2,
  kCalibration = 3,
  kInitialDesign = 4,
  kAcquisition = 5,
  kSurrogateFit = 6,
  kScenario = 7,
};

std::string_view to_string(Stream stream);

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Counter-based seed derivation: hash of (master, stream, a, b).
/// Independent of evaluation order, so any worker count reproduces the
/// same per-evaluation seeds.
std::uint64_t derive_seed(std::uint64_t master, Stream stream,
                          std::uint64_t a = 0, std::uint64_t b = 0);

/// Uniform draw on the open interval (0, 1).
double open_unit(Engine& rng);

}  // namespace asdopt

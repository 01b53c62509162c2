#include "asdopt/rng.hpp"

namespace asdopt {

std::string_view to_string(Stream stream) {
  switch (stream) {
    case Stream::kSearch: return "search";
    case Stream::kValidation: return "validation";
    case Stream::kCalibration: return "calibration";
    case Stream::kInitialDesign: return "initial-design";
    case Stream::kAcquisition: return "acquisition";
    case Stream::kSurrogateFit: return "surrogate-fit";
    case Stream::kScenario: return "scenario";
  }
  return "unknown";
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, Stream stream,
                          std::uint64_t a, std::uint64_t b) {
  std::uint64_t h = mix64(master);
  h = mix64(h ^ static_cast<std::uint64_t>(stream));
  h = mix64(h ^ a);
  h = mix64(h ^ (b + 0x632be59bd9b4e019ULL));
  return h;
}

double open_unit(Engine& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u = 0.0;
  do {
    u = unif(rng);
  } while (u <= 0.0 || u >= 1.0);
  return u;
}

}  // namespace asdopt

#include "simlearn/error.hpp"

namespace simlearn {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::format: return "format";
    case Errc::parse: return "parse";
    case Errc::degenerate: return "degenerate";
    case Errc::index: return "index";
    case Errc::argument: return "argument";
    case Errc::stratification: return "stratification";
    case Errc::class_coverage: return "class-coverage";
    case Errc::diversity_degenerate: return "diversity-degenerate";
    case Errc::size: return "size";
    case Errc::shape: return "shape";
    case Errc::numeric: return "numeric";
    case Errc::construction: return "construction";
    case Errc::io: return "io";
    case Errc::config: return "config";
    case Errc::aggregate: return "aggregate";
  }
  return "unknown";
}

}  // namespace simlearn

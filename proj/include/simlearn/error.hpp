#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace simlearn {

enum class Errc {
  format,
  parse,
  degenerate,
  index,
  argument,
  stratification,
  class_coverage,
  diversity_degenerate,
  size,
  shape,
  numeric,
  construction,
  io,
  config,
  aggregate,
};

std::string_view to_string(Errc code) noexcept;

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + " error: " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace simlearn

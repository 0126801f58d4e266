#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace simlearn {

// Antisymmetric transfer function with range [-1, 1].
//   ramp(s):  clamp(s * x, -1, 1)
//   sign:     sign(x), sign(0) = 0
//   identity: clamp(x, -1, 1)
struct TransferFunction {
  enum class Kind { ramp, sign, identity };
  Kind kind = Kind::identity;
  double slope = 1.0;  // ramp only

  static TransferFunction ramp(double slope);
  static TransferFunction sign() { return {Kind::sign, 0.0}; }
  static TransferFunction identity() { return {Kind::identity, 1.0}; }

  // Slope used for ordering; sign counts as infinitely steep.
  double effective_slope() const noexcept;

  // "ramp:5", "sign", "identity"
  std::string name() const;

  friend bool operator==(const TransferFunction&, const TransferFunction&) = default;
};

double apply(const TransferFunction& f, double x) noexcept;

TransferFunction parse_transfer(std::string_view text);

struct TransferFamily {
  std::vector<TransferFunction> members;
};

// Ramps with slopes {1, 5, 10, 50, 100, 1000}.
TransferFamily default_family();

// "default" or a comma list of transfers, e.g. "ramp:1,5,10", "sign,identity".
// Bare numbers after a ramp entry continue the ramp list.
TransferFamily parse_family(std::string_view text);

// Spread max f(v) - min f(v) over observed kernel values.
double c_f(const TransferFunction& f, std::span<const double> observed_values);

}  // namespace simlearn

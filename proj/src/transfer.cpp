#include "simlearn/transfer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "simlearn/error.hpp"

namespace simlearn {

TransferFunction TransferFunction::ramp(double slope) {
  if (!(slope > 0.0) || !std::isfinite(slope)) {
    throw Error(Errc::argument, "ramp slope must be positive and finite");
  }
  return {Kind::ramp, slope};
}

double TransferFunction::effective_slope() const noexcept {
  switch (kind) {
    case Kind::ramp: return slope;
    case Kind::identity: return 1.0;
    case Kind::sign: return std::numeric_limits<double>::infinity();
  }
  return 0.0;
}

std::string TransferFunction::name() const {
  switch (kind) {
    case Kind::sign: return "sign";
    case Kind::identity: return "identity";
    case Kind::ramp: {
      std::ostringstream os;
      os << "ramp:" << slope;
      return os.str();
    }
  }
  return "?";
}

double apply(const TransferFunction& f, double x) noexcept {
  switch (f.kind) {
    case TransferFunction::Kind::ramp: return std::clamp(f.slope * x, -1.0, 1.0);
    case TransferFunction::Kind::identity: return std::clamp(x, -1.0, 1.0);
    case TransferFunction::Kind::sign: return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
  }
  return 0.0;
}

namespace {

double parse_slope(std::string_view text) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(Errc::config, "bad ramp slope '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace

TransferFunction parse_transfer(std::string_view text) {
  if (text == "sign") return TransferFunction::sign();
  if (text == "identity") return TransferFunction::identity();
  if (text.starts_with("ramp:")) return TransferFunction::ramp(parse_slope(text.substr(5)));
  throw Error(Errc::config, "unknown transfer '" + std::string(text) + "'");
}

TransferFamily default_family() {
  TransferFamily family;
  for (double s : {1.0, 5.0, 10.0, 50.0, 100.0, 1000.0}) {
    family.members.push_back(TransferFunction::ramp(s));
  }
  return family;
}

TransferFamily parse_family(std::string_view text) {
  if (text == "default") return default_family();
  TransferFamily family;
  bool in_ramp_list = false;
  while (!text.empty()) {
    const auto comma = text.find(',');
    const auto token = text.substr(0, comma);
    if (token.starts_with("ramp:")) {
      family.members.push_back(parse_transfer(token));
      in_ramp_list = true;
    } else if (token == "sign" || token == "identity") {
      family.members.push_back(parse_transfer(token));
      in_ramp_list = false;
    } else if (in_ramp_list) {
      family.members.push_back(TransferFunction::ramp(parse_slope(token)));
    } else {
      throw Error(Errc::config, "unknown family entry '" + std::string(token) + "'");
    }
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  if (family.members.empty()) throw Error(Errc::config, "transfer family is empty");
  for (std::size_t a = 0; a < family.members.size(); ++a) {
    for (std::size_t b = a + 1; b < family.members.size(); ++b) {
      if (family.members[a] == family.members[b]) {
        throw Error(Errc::config, "duplicate family member " + family.members[a].name());
      }
    }
  }
  return family;
}

double c_f(const TransferFunction& f, std::span<const double> observed_values) {
  if (observed_values.empty()) throw Error(Errc::argument, "c_f needs observed values");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double v : observed_values) {
    const double y = apply(f, v);
    lo = std::min(lo, y);
    hi = std::max(hi, y);
  }
  return hi - lo;
}

}  // namespace simlearn

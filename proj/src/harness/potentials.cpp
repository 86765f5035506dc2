#include "harness/potentials.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include <boost/algorithm/string.hpp>

namespace gpelod::harness {

namespace {

std::vector<double> parse_args(const std::string& family, const std::string& args,
                               std::size_t count) {
  std::vector<std::string> parts;
  boost::split(parts, args, boost::is_any_of(","));
  if (parts.size() != count) {
    throw ConfigError("potential '" + family + "' expects " + std::to_string(count) +
                      " argument(s)");
  }
  std::vector<double> out;
  for (auto& p : parts) {
    boost::trim(p);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(p, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != p.size() || !std::isfinite(v)) {
      throw ConfigError("potential '" + family + "': bad number '" + p + "'");
    }
    out.push_back(v);
  }
  return out;
}

}  // namespace

fem::Potential parse_potential(const std::string& spec, double coarse_h) {
  std::string s = boost::trim_copy(spec);
  const auto colon = s.find(':');
  const std::string family = boost::to_lower_copy(s.substr(0, colon));
  const std::string args = colon == std::string::npos ? "" : s.substr(colon + 1);

  if (family == "zero" || family.empty()) {
    if (!args.empty()) throw ConfigError("potential 'zero' takes no arguments");
    return fem::Potential::zero();
  }
  if (family == "constant") {
    return fem::Potential::constant(parse_args(family, args, 1)[0]);
  }
  if (family == "harmonic") {
    const double g = parse_args(family, args, 1)[0];
    return fem::Potential::from_function([g](double x) { return 0.5 * g * g * x * x; });
  }
  if (family == "lattice") {
    const auto a = parse_args(family, args, 2);
    const double alpha = a[0];
    const double lambda = a[1];
    if (!(lambda > 0.0)) throw ConfigError("lattice wavelength must be > 0");
    const double period = 0.5 * lambda;
    const double cells = coarse_h / period;
    const bool aligned = std::abs(cells - std::round(cells)) < 1e-9 * std::max(1.0, cells);
    return fem::Potential::from_function(
        [alpha, lambda](double x) {
          const double s = std::sin(2.0 * std::numbers::pi * x / lambda);
          return alpha * s * s;
        },
        aligned && std::round(cells) >= 1.0);
  }
  throw ConfigError("unknown potential family '" + family + "'");
}

}  // namespace gpelod::harness

#pragma once

// Flat `key = value` configuration covering every tunable of the pipeline.
// Lines starting with '#' are comments. Unknown keys and malformed values are
// errors naming the key.

#include <charconv>
#include <cstdint>
#include <functional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "msreg/error.hpp"
#include "msreg/eval.hpp"
#include "msreg/fusion.hpp"
#include "msreg/io.hpp"
#include "msreg/registration.hpp"

namespace msreg {

struct CliConfig {
  RegistrationParams registration{};
  FusionConfig fusion{};
  SimulationSpec sim{};

  void validate() const {
    registration.validate();
    fusion.validate();
    sim.validate();
  }
};

namespace config_detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  const auto res = std::from_chars(v.data(), end, out);
  if (res.ec != std::errc() || res.ptr != end) throw ParameterError(key + ": expected a number, got '" + v + "'");
  return out;
}

inline long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto* end = v.data() + v.size();
  const auto res = std::from_chars(v.data(), end, out);
  if (res.ec != std::errc() || res.ptr != end) throw ParameterError(key + ": expected an integer, got '" + v + "'");
  return out;
}

inline int to_int32(const std::string& key, const std::string& v) {
  const long long x = to_int(key, v);
  if (x < -2147483647LL || x > 2147483647LL) throw ParameterError(key + ": value out of range");
  return static_cast<int>(x);
}

inline std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto* end = v.data() + v.size();
  const auto res = std::from_chars(v.data(), end, out);
  if (res.ec != std::errc() || res.ptr != end) {
    throw ParameterError(key + ": expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

inline std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(key, trim(item)));
  if (out.empty()) throw ParameterError(key + ": expected a comma-separated list of numbers");
  return out;
}

inline std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

inline std::string fmt_list(const auto& values) {
  std::string out;
  for (double v : values) out += (out.empty() ? "" : ",") + fmt(v);
  return out;
}

}  // namespace config_detail

struct ConfigKey {
  std::string key;
  std::string help;
  std::function<std::string(const CliConfig&)> get;
  std::function<void(CliConfig&, const std::string&)> set;
};

/// Every recognized key, in documentation order.
[[nodiscard]] inline const std::vector<ConfigKey>& config_keys() {
  using namespace config_detail;
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> k;
    auto num = [&k](std::string key, std::string help, auto member) {
      k.push_back({key, std::move(help), [member](const CliConfig& c) { return fmt(member(c)); },
                   [member, key](CliConfig& c, const std::string& v) { member(c) = to_double(key, v); }});
    };
    auto integer = [&k](std::string key, std::string help, auto member) {
      k.push_back({key, std::move(help),
                   [member](const CliConfig& c) { return std::to_string(member(c)); },
                   [member, key](CliConfig& c, const std::string& v) { member(c) = to_int32(key, v); }});
    };
    auto seed = [&k](std::string key, std::string help, auto member) {
      k.push_back({key, std::move(help),
                   [member](const CliConfig& c) { return std::to_string(member(c)); },
                   [member, key](CliConfig& c, const std::string& v) { member(c) = to_u64(key, v); }});
    };

    num("harris.k", "Harris sensitivity k", [](auto& c) -> auto& { return c.registration.harris.k; });
    num("harris.window_sigma", "std of the Gaussian structure-tensor window",
        [](auto& c) -> auto& { return c.registration.harris.window_sigma; });
    integer("harris.nms_window", "odd non-maximal-suppression window (pixels)",
            [](auto& c) -> auto& { return c.registration.harris.nms_window; });
    integer("harris.max_corners", "corner cap per image",
            [](auto& c) -> auto& { return c.registration.harris.max_corners; });
    num("harris.min_score", "minimum corner score as a fraction of the image maximum",
        [](auto& c) -> auto& { return c.registration.harris.min_score; });

    num("canny.blur_sigma", "pre-smoothing std", [](auto& c) -> auto& { return c.registration.canny.blur_sigma; });
    num("canny.low_ratio", "hysteresis low threshold / max gradient magnitude",
        [](auto& c) -> auto& { return c.registration.canny.low_ratio; });
    num("canny.high_ratio", "hysteresis high threshold / max gradient magnitude",
        [](auto& c) -> auto& { return c.registration.canny.high_ratio; });

    integer("descriptor.w2", "odd descriptor window (pixels)",
            [](auto& c) -> auto& { return c.registration.descriptor.w2; });
    integer("descriptor.k1", "gradient direction bins over 360 degrees",
            [](auto& c) -> auto& { return c.registration.descriptor.k1; });
    k.push_back({"descriptor.same_grad", "direction tolerance: circular (wraps) | literal (no wrap)",
                 [](const CliConfig& c) {
                   return std::string(c.registration.descriptor.matching.rule == SameGradRule::Circular ? "circular"
                                                                                                       : "literal");
                 },
                 [](CliConfig& c, const std::string& v) {
                   if (v == "circular") {
                     c.registration.descriptor.matching.rule = SameGradRule::Circular;
                   } else if (v == "literal") {
                     c.registration.descriptor.matching.rule = SameGradRule::Literal;
                   } else {
                     throw ParameterError("descriptor.same_grad: expected circular|literal, got '" + v + "'");
                   }
                 }});
    k.push_back({"descriptor.polarity", "contrast polarity accepted when matching: either | signed",
                 [](const CliConfig& c) {
                   return std::string(c.registration.descriptor.matching.polarity == Polarity::Either ? "either"
                                                                                                      : "signed");
                 },
                 [](CliConfig& c, const std::string& v) {
                   if (v == "either") {
                     c.registration.descriptor.matching.polarity = Polarity::Either;
                   } else if (v == "signed") {
                     c.registration.descriptor.matching.polarity = Polarity::Signed;
                   } else {
                     throw ParameterError("descriptor.polarity: expected either|signed, got '" + v + "'");
                   }
                 }});

    k.push_back({"ransac.model", "translation | similarity | affine",
                 [](const CliConfig& c) { return std::string(to_string(c.registration.ransac.model_kind)); },
                 [](CliConfig& c, const std::string& v) {
                   try {
                     c.registration.ransac.model_kind = parse_model_kind(v);
                   } catch (const ParameterError& e) {
                     throw ParameterError(std::string("ransac.model: ") + e.what());
                   }
                 }});
    integer("ransac.samples_per_iter", "hypotheses per RANSAC round",
            [](auto& c) -> auto& { return c.registration.ransac.samples_per_iter; });
    num("ransac.rd1", "inlier distance, rounds 1-2 (pixels)",
        [](auto& c) -> auto& { return c.registration.ransac.rd1; });
    num("ransac.rd2", "inlier distance, round 3 (pixels)",
        [](auto& c) -> auto& { return c.registration.ransac.rd2; });
    num("ransac.md1", "match gate distance, round 2 (pixels)",
        [](auto& c) -> auto& { return c.registration.ransac.md1; });
    num("ransac.md2", "match gate distance, round 3 (pixels)",
        [](auto& c) -> auto& { return c.registration.ransac.md2; });
    seed("ransac.seed", "RANSAC random seed",
         [](auto& c) -> auto& { return c.registration.ransac.rng_seed; });

    num("fusion.alpha", "low-band weight of the visible image", [](auto& c) -> auto& { return c.fusion.alpha; });
    num("fusion.gain", "high-band gain", [](auto& c) -> auto& { return c.fusion.gain; });
    k.push_back({"fusion.sigmas", "three increasing Gaussian scales",
                 [](const CliConfig& c) { return fmt_list(c.fusion.sigmas); },
                 [](CliConfig& c, const std::string& v) {
                   const auto l = to_list("fusion.sigmas", v);
                   if (l.size() != 3) throw ParameterError("fusion.sigmas: expected exactly three values");
                   c.fusion.sigmas = {l[0], l[1], l[2]};
                 }});
    num("fusion.color_eps", "luminance floor for color restoration",
        [](auto& c) -> auto& { return c.fusion.color_eps; });

    num("sim.translation_range", "planted translation range +/- (pixels)",
        [](auto& c) -> auto& { return c.sim.translation_range; });
    k.push_back({"sim.scales", "comma-separated planted scales",
                 [](const CliConfig& c) { return fmt_list(c.sim.scales); },
                 [](CliConfig& c, const std::string& v) { c.sim.scales = to_list("sim.scales", v); }});
    k.push_back({"sim.modality", "identity | invert | gamma | invert+gamma",
                 [](const CliConfig& c) { return std::string(to_string(c.sim.modality)); },
                 [](CliConfig& c, const std::string& v) {
                   try {
                     c.sim.modality = parse_modality(v);
                   } catch (const ParameterError& e) {
                     throw ParameterError(std::string("sim.modality: ") + e.what());
                   }
                 }});
    num("sim.gamma", "gamma of the simulated band", [](auto& c) -> auto& { return c.sim.gamma; });
    num("sim.noise_sigma", "additive Gaussian noise std", [](auto& c) -> auto& { return c.sim.noise_sigma; });
    integer("sim.trials", "number of trials", [](auto& c) -> auto& { return c.sim.trials; });
    seed("sim.seed", "simulation random seed", [](auto& c) -> auto& { return c.sim.rng_seed; });
    return k;
  }();
  return keys;
}

inline void set_config_value(CliConfig& cfg, const std::string& key, const std::string& value) {
  for (const ConfigKey& k : config_keys()) {
    if (k.key == key) {
      k.set(cfg, value);
      return;
    }
  }
  throw ParameterError("unknown config key '" + key + "'");
}

/// Applies `key=value`.
inline void apply_override(CliConfig& cfg, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ParameterError("expected key=value, got '" + std::string(assignment) + "'");
  }
  set_config_value(cfg, config_detail::trim(assignment.substr(0, eq)), config_detail::trim(assignment.substr(eq + 1)));
}

/// Parses config text into `cfg` (values not mentioned keep their current
/// setting). Does not validate; call `cfg.validate()` after all overrides.
inline void parse_config(CliConfig& cfg, const std::string& text, const std::string& source = "<config>") {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = config_detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    try {
      apply_override(cfg, t);
    } catch (const ParameterError& e) {
      throw ParameterError(source + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

[[nodiscard]] inline CliConfig load_config(const std::string& path) {
  const auto bytes = io_detail::read_file(path);
  CliConfig cfg;
  parse_config(cfg, std::string(bytes.begin(), bytes.end()), path);
  return cfg;
}

/// One `key = default  # help` line per key.
[[nodiscard]] inline std::string describe_config(const CliConfig& cfg = {}) {
  std::string out;
  for (const ConfigKey& k : config_keys()) {
    std::string line = "  " + k.key + " = " + k.get(cfg);
    if (line.size() < 40) line.resize(40, ' ');
    out += line + " # " + k.help + "\n";
  }
  return out;
}

}  // namespace msreg

#pragma once

#include <cstdint>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tslab/bandit.hpp"
#include "tslab/bounds.hpp"
#include "tslab/errors.hpp"
#include "tslab/linalg.hpp"
#include "tslab/logconcave.hpp"

namespace tslab {

enum class PriorKind { kIdentity, kScaled, kPolynomial, kCustom };
enum class NoiseKind { kGauss, kSmoothedLaplace };

/// Flat experiment description; serializes to a diff-friendly key=value file
/// whose canonical form also feeds the config hash.
struct ExperimentConfig {
  int d = 2;
  double r = 1.0;
  double sigma = 1.0;
  PriorKind prior_kind = PriorKind::kIdentity;
  double prior_scale = 1.0;
  double prior_alpha = 1.0;
  std::vector<double> prior_evals;  // kCustom only
  std::optional<std::uint64_t> rotation_seed;
  std::vector<double> mu0;  // empty means zero vector
  int horizon = 256;
  int replicates = 1000;
  std::uint64_t seed = 1;
  std::int64_t instances = 10000;  // elliptical-check
  int mala_steps = 0;              // 0 -> 50 d
  double mala_step_size = 0.0;     // 0 -> 0.5 / lambda_max
  NoiseKind noise = NoiseKind::kGauss;
  std::vector<double> scale_grid = {1.0, 16.0};  // decouple
  double bound_c3 = kDefaultLogConcaveC;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

namespace detail {

inline std::string format_g17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline std::string join_doubles(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += format_g17(xs[i]);
  }
  return out;
}

inline std::vector<double> split_doubles(const std::string& text, const char* who) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string token;
  while (std::getline(ss, token, ',')) {
    try {
      std::size_t used = 0;
      const double v = std::stod(token, &used);
      while (used < token.size() && std::isspace(static_cast<unsigned char>(token[used]))) ++used;
      if (used != token.size()) throw std::invalid_argument(token);
      out.push_back(v);
    } catch (const std::exception&) {
      throw ConfigError(std::string(who) + ": cannot parse number '" + token + "'");
    }
  }
  return out;
}

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

}  // namespace detail

inline std::string prior_to_string(const ExperimentConfig& c) {
  switch (c.prior_kind) {
    case PriorKind::kIdentity:
      return "identity";
    case PriorKind::kScaled:
      return "scaled:" + detail::format_g17(c.prior_scale);
    case PriorKind::kPolynomial:
      return "poly:" + detail::format_g17(c.prior_alpha);
    case PriorKind::kCustom:
      return "evals:" + detail::join_doubles(c.prior_evals);
  }
  throw ConfigError("prior_to_string: unreachable");
}

inline std::string noise_to_string(NoiseKind kind) {
  return kind == NoiseKind::kGauss ? "gauss" : "smoothed-laplace";
}

/// Canonical serialization: fixed key order, 17-significant-digit floats.
inline std::string serialize_config(const ExperimentConfig& c) {
  std::string out;
  out += "d = " + std::to_string(c.d) + "\n";
  out += "r = " + detail::format_g17(c.r) + "\n";
  out += "sigma = " + detail::format_g17(c.sigma) + "\n";
  out += "prior = " + prior_to_string(c) + "\n";
  out += "rotation_seed = " +
         (c.rotation_seed ? std::to_string(*c.rotation_seed) : std::string("none")) +
         "\n";
  out += "mu0 = " + (c.mu0.empty() ? std::string("0") : detail::join_doubles(c.mu0)) +
         "\n";
  out += "horizon = " + std::to_string(c.horizon) + "\n";
  out += "replicates = " + std::to_string(c.replicates) + "\n";
  out += "seed = " + std::to_string(c.seed) + "\n";
  out += "instances = " + std::to_string(c.instances) + "\n";
  out += "mala_steps = " + std::to_string(c.mala_steps) + "\n";
  out += "mala_step_size = " + detail::format_g17(c.mala_step_size) + "\n";
  out += "noise = " + noise_to_string(c.noise) + "\n";
  out += "scale_grid = " + detail::join_doubles(c.scale_grid) + "\n";
  out += "bound_c3 = " + detail::format_g17(c.bound_c3) + "\n";
  return out;
}

inline void apply_config_entry(ExperimentConfig& c, const std::string& key,
                               const std::string& value) {
  const auto parse_int = [&](const char* who) {
    try {
      return std::stoll(value);
    } catch (const std::exception&) {
      throw ConfigError(std::string(who) + ": bad integer '" + value + "'");
    }
  };
  const auto parse_double = [&](const char* who) {
    try {
      return std::stod(value);
    } catch (const std::exception&) {
      throw ConfigError(std::string(who) + ": bad number '" + value + "'");
    }
  };
  if (key == "d") {
    c.d = static_cast<int>(parse_int("d"));
  } else if (key == "r") {
    c.r = parse_double("r");
  } else if (key == "sigma") {
    c.sigma = parse_double("sigma");
  } else if (key == "prior") {
    if (value == "identity") {
      c.prior_kind = PriorKind::kIdentity;
    } else if (value.rfind("scaled:", 0) == 0) {
      c.prior_kind = PriorKind::kScaled;
      c.prior_scale = detail::split_doubles(value.substr(7), "prior").at(0);
    } else if (value.rfind("poly:", 0) == 0) {
      c.prior_kind = PriorKind::kPolynomial;
      c.prior_alpha = detail::split_doubles(value.substr(5), "prior").at(0);
    } else if (value.rfind("evals:", 0) == 0) {
      c.prior_kind = PriorKind::kCustom;
      c.prior_evals = detail::split_doubles(value.substr(6), "prior");
      if (c.prior_evals.empty()) throw ConfigError("prior: empty eigenvalue list");
    } else {
      throw ConfigError("prior: expected identity | scaled:<c> | poly:<a> | evals:<list>, got '" +
                        value + "'");
    }
  } else if (key == "rotation_seed") {
    if (value == "none") {
      c.rotation_seed.reset();
    } else {
      c.rotation_seed = static_cast<std::uint64_t>(parse_int("rotation_seed"));
    }
  } else if (key == "mu0") {
    if (value == "0") {
      c.mu0.clear();
    } else {
      c.mu0 = detail::split_doubles(value, "mu0");
    }
  } else if (key == "horizon") {
    c.horizon = static_cast<int>(parse_int("horizon"));
  } else if (key == "replicates") {
    c.replicates = static_cast<int>(parse_int("replicates"));
  } else if (key == "seed") {
    c.seed = static_cast<std::uint64_t>(parse_int("seed"));
  } else if (key == "instances") {
    c.instances = parse_int("instances");
  } else if (key == "mala_steps") {
    c.mala_steps = static_cast<int>(parse_int("mala_steps"));
  } else if (key == "mala_step_size") {
    c.mala_step_size = parse_double("mala_step_size");
  } else if (key == "noise") {
    if (value == "gauss") {
      c.noise = NoiseKind::kGauss;
    } else if (value == "smoothed-laplace") {
      c.noise = NoiseKind::kSmoothedLaplace;
    } else {
      throw ConfigError("noise: expected gauss | smoothed-laplace, got '" + value + "'");
    }
  } else if (key == "scale_grid") {
    c.scale_grid = detail::split_doubles(value, "scale_grid");
  } else if (key == "bound_c3") {
    c.bound_c3 = parse_double("bound_c3");
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

/// Parses the key=value format produced by serialize_config; '#' starts a
/// comment, blank lines are ignored.
inline ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig c;
  std::stringstream ss(text);
  std::string line;
  int line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    apply_config_entry(c, detail::trim(line.substr(0, eq)),
                       detail::trim(line.substr(eq + 1)));
  }
  return c;
}

/// FNV-1a over the canonical serialization; platform independent.
inline std::uint64_t config_hash(const ExperimentConfig& c) {
  const std::string text = serialize_config(c);
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char byte : text) {
    h ^= byte;
    h *= 0x100000001B3ULL;
  }
  return h;
}

inline std::string config_hash_hex(const ExperimentConfig& c) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(config_hash(c)));
  return buf;
}

inline Vector prior_eigenvalues(const ExperimentConfig& c) {
  switch (c.prior_kind) {
    case PriorKind::kIdentity:
      return Vector::Ones(c.d);
    case PriorKind::kScaled:
      if (!(c.prior_scale > 0.0)) throw ConfigError("prior scale must be positive");
      return Vector::Constant(c.d, c.prior_scale);
    case PriorKind::kPolynomial:
      return polynomial_prior_eigenvalues(c.d, c.prior_alpha);
    case PriorKind::kCustom: {
      if (static_cast<int>(c.prior_evals.size()) != c.d)
        throw ConfigError("prior eigenvalue list must have d entries");
      Vector evals(c.d);
      for (int i = 0; i < c.d; ++i) evals(i) = c.prior_evals[i];
      std::sort(evals.data(), evals.data() + c.d, std::greater<double>());
      return evals;
    }
  }
  throw ConfigError("prior_eigenvalues: unreachable");
}

inline SpdMatrix build_prior_cov(const ExperimentConfig& c) {
  const Vector evals = prior_eigenvalues(c);
  if (!c.rotation_seed) return spd_from_eigenvalues(evals);
  RngStream rng(*c.rotation_seed, 0, stream_role::kAux);
  return spd_from_eigenvalues(evals, random_orthogonal(c.d, rng));
}

inline Vector build_mu0(const ExperimentConfig& c) {
  if (c.mu0.empty()) return Vector::Zero(c.d);
  if (static_cast<int>(c.mu0.size()) != c.d)
    throw ConfigError("mu0 must have d entries");
  Vector v(c.d);
  for (int i = 0; i < c.d; ++i) v(i) = c.mu0[i];
  return v;
}

inline EpisodeSetup to_episode_setup(const ExperimentConfig& c) {
  return make_episode_setup(c.d, c.r, c.sigma, build_mu0(c), build_prior_cov(c));
}

inline LcEpisodeSetup to_lc_episode_setup(const ExperimentConfig& c) {
  NoiseModel noise = c.noise == NoiseKind::kGauss
                         ? make_gaussian_noise(c.sigma)
                         : make_smoothed_laplace_noise(c.sigma);
  auto setup = make_lc_episode_setup(c.d, c.r, build_mu0(c), build_prior_cov(c),
                                     std::move(noise), c.sigma);
  setup.mala_steps = c.mala_steps;
  setup.mala_step_size = c.mala_step_size;
  return setup;
}

}  // namespace tslab

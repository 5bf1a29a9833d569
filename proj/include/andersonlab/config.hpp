#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "interval.hpp"
#include "lattice.hpp"
#include "measures.hpp"
#include "spectral.hpp"

namespace andersonlab {

using nlohmann::json;

enum class PartitionMode { single, derived, explicit_scales };

struct PartitionConfig {
  PartitionMode mode = PartitionMode::single;
  double epsilon = 0.1;       // derived: N ~ side^(1-epsilon)
  double gamma = 0.0;         // derived: l ~ (5d / (alpha gamma)) log side
  bool gamma_given = false;   // false: runner fits gamma from the decay scan
  long blocks_per_side = 1;   // explicit
  long interior_margin = 0;   // explicit
};

inline const char* partition_mode_name(PartitionMode m) {
  switch (m) {
    case PartitionMode::single: return "single";
    case PartitionMode::derived: return "derived";
    case PartitionMode::explicit_scales: return "explicit";
  }
  return "?";
}

struct IdsConfig {
  double energy_min = 0.0;
  double energy_max = 1.0;
  long n_energies = 64;
  long realizations = 200;
  double eps_min = 1e-3;
  double eps_max = 0.25;
  double grid_factor = 2.0;
};

struct VerifyConfig {
  long wegner_realizations = 400;
  long minami_realizations = 1000;
  long diag_realizations = 200;
  double im_z = 0.1;
  int k = 2;
};

// Fractional powers swept when localize.s_scan is on (entries >= alpha are skipped).
inline constexpr double localize_scan_s[] = {0.25, 1.0 / 3.0, 0.5};

struct LocalizeConfig {
  double s = 1.0 / 3.0;
  bool s_scan = false;  // also run the decay fit at each admissible localize_scan_s value
  std::vector<long> distances;
  std::vector<double> im_grid;
  long realizations = 400;
  GreenSolver solver = GreenSolver::direct;
  double tol = 1e-12;
  double residual_cap = 1e-10;
};

struct SpacingConfig {
  bool enabled = false;
  double core_lo = 0.0;
  double core_hi = 0.0;  // defaults to the count interval when left unset
  double buffer = 0.0;
  long min_gaps = 500;
};

struct CompareConfig {
  long n_boot = 300;
};

struct Config {
  int dimension = 1;
  std::vector<long> L_ladder;  // one entry for single-box runs
  HamiltonianSpec hamiltonian;
  SingleSiteDistribution distribution = SingleSiteDistribution::uniform(0.0, 1.0);
  double alpha = 1.0;
  double energy = 0.0;
  Interval interval{0.0, 1.0};
  long realizations = 100;
  std::uint64_t master_seed = 1;
  PartitionConfig partition;
  std::string output_dir = "out";
  int workers = 1;
  IdsConfig ids;
  VerifyConfig verify;
  LocalizeConfig localize;
  SpacingConfig spacing;
  CompareConfig compare;
};

namespace detail {

inline const json& require_field(const json& j, const char* key, const char* where) {
  const auto it = j.find(key);
  if (it == j.end())
    throw ConfigError(std::string("missing required field '") + key + "' in " + where);
  return *it;
}

inline double as_number(const json& j, const char* key, const char* where) {
  if (!j.is_number()) throw ConfigError(std::string("field '") + key + "' in " + where + " must be a number");
  return j.get<double>();
}

inline long as_integer(const json& j, const char* key, const char* where) {
  if (!j.is_number_integer())
    throw ConfigError(std::string("field '") + key + "' in " + where + " must be an integer");
  return j.get<long>();
}

inline std::string as_string(const json& j, const char* key, const char* where) {
  if (!j.is_string()) throw ConfigError(std::string("field '") + key + "' in " + where + " must be a string");
  return j.get<std::string>();
}

}  // namespace detail

inline SingleSiteDistribution parse_distribution(const json& j) {
  using detail::as_number;
  using detail::require_field;
  if (!j.is_object()) throw ConfigError("'distribution' must be an object");
  const std::string kind = detail::as_string(require_field(j, "kind", "distribution"), "kind", "distribution");
  try {
    if (kind == "uniform") {
      return SingleSiteDistribution::uniform(as_number(require_field(j, "a", "distribution"), "a", "distribution"),
                                             as_number(require_field(j, "b", "distribution"), "b", "distribution"));
    }
    if (kind == "bernoulli") {
      return SingleSiteDistribution::bernoulli(
          as_number(require_field(j, "p", "distribution"), "p", "distribution"),
          as_number(require_field(j, "v0", "distribution"), "v0", "distribution"),
          as_number(require_field(j, "v1", "distribution"), "v1", "distribution"));
    }
    if (kind == "cantor") return SingleSiteDistribution::cantor();
    if (kind == "ifs") {
      const json& maps = require_field(j, "maps", "distribution");
      if (!maps.is_array() || maps.size() < 2)
        throw ConfigError("'distribution.maps' must be an array of at least two maps");
      std::vector<AffineMap> ms;
      for (const auto& m : maps) {
        AffineMap am;
        am.ratio = as_number(require_field(m, "ratio", "distribution.maps[]"), "ratio", "distribution.maps[]");
        am.offset = as_number(require_field(m, "offset", "distribution.maps[]"), "offset", "distribution.maps[]");
        am.weight = as_number(require_field(m, "weight", "distribution.maps[]"), "weight", "distribution.maps[]");
        ms.push_back(am);
      }
      double alpha = std::numeric_limits<double>::quiet_NaN();
      double holder = std::numeric_limits<double>::quiet_NaN();
      if (j.contains("alpha")) alpha = as_number(j.at("alpha"), "alpha", "distribution");
      if (j.contains("holder_constant")) holder = as_number(j.at("holder_constant"), "holder_constant", "distribution");
      return SingleSiteDistribution::ifs(ms, alpha, holder);
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid distribution parameters: ") + e.what());
  }
  throw ConfigError("unknown distribution kind '" + kind + "' (expected uniform, bernoulli, cantor, or ifs)");
}

inline Config parse_config(const json& j) {
  using detail::as_integer;
  using detail::as_number;
  using detail::as_string;
  using detail::require_field;
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");

  Config c;
  c.dimension = static_cast<int>(as_integer(require_field(j, "dimension", "config"), "dimension", "config"));
  if (c.dimension < 1 || c.dimension > 4) throw ConfigError("'dimension' must lie in 1..4");

  const bool has_L = j.contains("L");
  const bool has_ladder = j.contains("L_ladder");
  if (has_L == has_ladder) throw ConfigError("config must contain exactly one of 'L' or 'L_ladder'");
  if (has_L) {
    c.L_ladder = {as_integer(j.at("L"), "L", "config")};
  } else {
    const json& lad = j.at("L_ladder");
    if (!lad.is_array() || lad.empty()) throw ConfigError("'L_ladder' must be a nonempty array");
    for (const auto& e : lad) c.L_ladder.push_back(as_integer(e, "L_ladder[]", "config"));
    for (std::size_t i = 1; i < c.L_ladder.size(); ++i)
      if (c.L_ladder[i] <= c.L_ladder[i - 1]) throw ConfigError("'L_ladder' must be strictly increasing");
  }
  for (long L : c.L_ladder)
    if (L < 1) throw ConfigError("box half-side must be >= 1");

  if (j.contains("hopping")) {
    const std::string h = as_string(j.at("hopping"), "hopping", "config");
    if (h == "none")
      c.hamiltonian.hopping = Hopping::none;
    else if (h == "laplacian")
      c.hamiltonian.hopping = Hopping::laplacian_offdiag;
    else
      throw ConfigError("'hopping' must be \"none\" or \"laplacian\"");
  }
  if (j.contains("coupling")) c.hamiltonian.coupling = as_number(j.at("coupling"), "coupling", "config");
  if (!(c.hamiltonian.coupling > 0.0)) throw ConfigError("'coupling' must be positive");

  c.distribution = parse_distribution(require_field(j, "distribution", "config"));
  c.alpha = j.contains("alpha") ? as_number(j.at("alpha"), "alpha", "config") : c.distribution.alpha;
  if (!(c.alpha > 0.0 && c.alpha <= 1.0)) throw ConfigError("'alpha' must lie in (0, 1]");

  c.energy = as_number(require_field(j, "energy", "config"), "energy", "config");

  {
    const json& iv = require_field(j, "interval", "config");
    if (!iv.is_array() || iv.size() != 2) throw ConfigError("'interval' must be an array [a, b]");
    const double a = as_number(iv[0], "interval[0]", "config");
    const double b = as_number(iv[1], "interval[1]", "config");
    if (!(a < b)) throw ConfigError("'interval' must satisfy a < b");
    c.interval = Interval{a, b};
  }

  c.realizations = as_integer(require_field(j, "realizations", "config"), "realizations", "config");
  if (c.realizations < 100)
    throw ConfigError("'realizations' must be >= 100 (distributional statistics need that many)");

  if (j.contains("master_seed")) {
    const json& s = j.at("master_seed");
    if (!s.is_number_integer() || (s.is_number_integer() && s.get<long long>() < 0))
      throw ConfigError("'master_seed' must be a nonnegative integer");
    c.master_seed = s.get<std::uint64_t>();
  }

  if (j.contains("partition")) {
    const json& p = j.at("partition");
    const std::string mode = as_string(require_field(p, "mode", "partition"), "mode", "partition");
    if (mode == "single") {
      c.partition.mode = PartitionMode::single;
    } else if (mode == "derived") {
      c.partition.mode = PartitionMode::derived;
      c.partition.epsilon = as_number(require_field(p, "epsilon", "partition"), "epsilon", "partition");
      if (!(c.partition.epsilon > 0.0 && c.partition.epsilon < 1.0))
        throw ConfigError("'partition.epsilon' must lie in (0, 1)");
      if (p.contains("gamma")) {
        c.partition.gamma = as_number(p.at("gamma"), "gamma", "partition");
        c.partition.gamma_given = true;
        if (!(c.partition.gamma > 0.0)) throw ConfigError("'partition.gamma' must be positive");
      }
    } else if (mode == "explicit") {
      c.partition.mode = PartitionMode::explicit_scales;
      c.partition.blocks_per_side =
          as_integer(require_field(p, "blocks_per_side", "partition"), "blocks_per_side", "partition");
      c.partition.interior_margin =
          as_integer(require_field(p, "interior_margin", "partition"), "interior_margin", "partition");
      if (c.partition.blocks_per_side < 1) throw ConfigError("'partition.blocks_per_side' must be >= 1");
      if (c.partition.interior_margin < 0) throw ConfigError("'partition.interior_margin' must be >= 0");
    } else {
      throw ConfigError("'partition.mode' must be \"single\", \"derived\", or \"explicit\"");
    }
  }

  if (j.contains("output_dir")) c.output_dir = as_string(j.at("output_dir"), "output_dir", "config");
  if (j.contains("workers")) {
    c.workers = static_cast<int>(as_integer(j.at("workers"), "workers", "config"));
    if (c.workers < 1) throw ConfigError("'workers' must be >= 1");
  }

  if (j.contains("ids")) {
    const json& s = j.at("ids");
    if (s.contains("energy_min")) c.ids.energy_min = as_number(s.at("energy_min"), "energy_min", "ids");
    if (s.contains("energy_max")) c.ids.energy_max = as_number(s.at("energy_max"), "energy_max", "ids");
    if (s.contains("n_energies")) c.ids.n_energies = as_integer(s.at("n_energies"), "n_energies", "ids");
    if (s.contains("realizations")) c.ids.realizations = as_integer(s.at("realizations"), "realizations", "ids");
    if (s.contains("eps_min")) c.ids.eps_min = as_number(s.at("eps_min"), "eps_min", "ids");
    if (s.contains("eps_max")) c.ids.eps_max = as_number(s.at("eps_max"), "eps_max", "ids");
    if (s.contains("grid_factor")) c.ids.grid_factor = as_number(s.at("grid_factor"), "grid_factor", "ids");
    if (!(c.ids.energy_min < c.ids.energy_max)) throw ConfigError("'ids' energy range must be increasing");
    if (c.ids.n_energies < 2) throw ConfigError("'ids.n_energies' must be >= 2");
    if (c.ids.realizations < 1) throw ConfigError("'ids.realizations' must be >= 1");
    if (!(c.ids.eps_min > 0.0 && c.ids.eps_min <= c.ids.eps_max))
      throw ConfigError("'ids' epsilon ladder must satisfy 0 < eps_min <= eps_max");
    if (!(c.ids.grid_factor > 1.0)) throw ConfigError("'ids.grid_factor' must exceed 1");
  }

  if (j.contains("verify")) {
    const json& s = j.at("verify");
    if (s.contains("wegner_realizations"))
      c.verify.wegner_realizations = as_integer(s.at("wegner_realizations"), "wegner_realizations", "verify");
    if (s.contains("minami_realizations"))
      c.verify.minami_realizations = as_integer(s.at("minami_realizations"), "minami_realizations", "verify");
    if (s.contains("diag_realizations"))
      c.verify.diag_realizations = as_integer(s.at("diag_realizations"), "diag_realizations", "verify");
    if (s.contains("im_z")) c.verify.im_z = as_number(s.at("im_z"), "im_z", "verify");
    if (s.contains("k")) c.verify.k = static_cast<int>(as_integer(s.at("k"), "k", "verify"));
    if (c.verify.wegner_realizations < 1 || c.verify.minami_realizations < 1 || c.verify.diag_realizations < 1)
      throw ConfigError("'verify' realization counts must be >= 1");
    if (!(c.verify.im_z > 0.0)) throw ConfigError("'verify.im_z' must be positive");
    if (c.verify.k < 1) throw ConfigError("'verify.k' must be >= 1");
  }

  if (j.contains("localize")) {
    const json& s = j.at("localize");
    if (s.contains("s")) c.localize.s = as_number(s.at("s"), "s", "localize");
    if (s.contains("s_scan")) {
      if (!s.at("s_scan").is_boolean()) throw ConfigError("'localize.s_scan' must be a boolean");
      c.localize.s_scan = s.at("s_scan").get<bool>();
    }
    if (s.contains("distances")) {
      c.localize.distances.clear();
      for (const auto& e : s.at("distances")) c.localize.distances.push_back(as_integer(e, "distances[]", "localize"));
    }
    if (s.contains("im_grid")) {
      c.localize.im_grid.clear();
      for (const auto& e : s.at("im_grid")) c.localize.im_grid.push_back(as_number(e, "im_grid[]", "localize"));
    }
    if (s.contains("realizations")) c.localize.realizations = as_integer(s.at("realizations"), "realizations", "localize");
    if (s.contains("solver")) {
      const std::string sv = as_string(s.at("solver"), "solver", "localize");
      if (sv == "direct")
        c.localize.solver = GreenSolver::direct;
      else if (sv == "bicgstab")
        c.localize.solver = GreenSolver::bicgstab;
      else
        throw ConfigError("'localize.solver' must be \"direct\" or \"bicgstab\"");
    }
    if (s.contains("tol")) c.localize.tol = as_number(s.at("tol"), "tol", "localize");
    if (s.contains("residual_cap")) c.localize.residual_cap = as_number(s.at("residual_cap"), "residual_cap", "localize");
    if (!(c.localize.s > 0.0 && c.localize.s < c.alpha))
      throw ConfigError("'localize.s' must lie in (0, alpha)");
    if (c.localize.s_scan && !(localize_scan_s[0] < c.alpha))
      throw ConfigError("'localize.s_scan' needs alpha > 1/4 so at least one scan value is admissible");
    if (c.localize.realizations < 1) throw ConfigError("'localize.realizations' must be >= 1");
    if (!(c.localize.tol > 0.0) || !(c.localize.residual_cap > 0.0))
      throw ConfigError("'localize' tolerances must be positive");
    for (double eta : c.localize.im_grid)
      if (!(eta > 0.0)) throw ConfigError("'localize.im_grid' entries must be positive");
    for (std::size_t i = 1; i < c.localize.distances.size(); ++i)
      if (c.localize.distances[i] <= c.localize.distances[i - 1])
        throw ConfigError("'localize.distances' must be strictly increasing");
  }
  if (c.localize.distances.empty()) {
    for (long r = 5; r <= 60; r += 5) c.localize.distances.push_back(r);
  }
  if (c.localize.im_grid.empty()) c.localize.im_grid = {1e-1, 1e-2, 1e-3, 1e-4};

  c.spacing.core_lo = c.interval.a;
  c.spacing.core_hi = c.interval.b;
  if (j.contains("spacing")) {
    const json& s = j.at("spacing");
    if (s.contains("enabled")) {
      if (!s.at("enabled").is_boolean()) throw ConfigError("'spacing.enabled' must be a boolean");
      c.spacing.enabled = s.at("enabled").get<bool>();
    }
    if (s.contains("core")) {
      const json& core = s.at("core");
      if (!core.is_array() || core.size() != 2) throw ConfigError("'spacing.core' must be an array [lo, hi]");
      c.spacing.core_lo = as_number(core[0], "core[0]", "spacing");
      c.spacing.core_hi = as_number(core[1], "core[1]", "spacing");
    }
    if (s.contains("buffer")) c.spacing.buffer = as_number(s.at("buffer"), "buffer", "spacing");
    if (s.contains("min_gaps")) c.spacing.min_gaps = as_integer(s.at("min_gaps"), "min_gaps", "spacing");
    if (!(c.spacing.core_lo < c.spacing.core_hi)) throw ConfigError("'spacing.core' must be increasing");
    if (c.spacing.buffer < 0.0) throw ConfigError("'spacing.buffer' must be >= 0");
    if (c.spacing.min_gaps < 1) throw ConfigError("'spacing.min_gaps' must be >= 1");
  }

  if (j.contains("compare")) {
    const json& s = j.at("compare");
    if (s.contains("n_boot")) c.compare.n_boot = as_integer(s.at("n_boot"), "n_boot", "compare");
    if (c.compare.n_boot < 0) throw ConfigError("'compare.n_boot' must be >= 0");
  }

  return c;
}

inline Config parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

// Partition scales for one rung of the ladder.
inline ScaleParams scales_for(const Config& c, long L) {
  switch (c.partition.mode) {
    case PartitionMode::single:
      return explicit_scales(L, 1, 0);
    case PartitionMode::derived:
      if (!(c.partition.gamma > 0.0))
        throw ConfigError("derived partition: gamma not resolved; fit one or set 'partition.gamma'");
      return choose_scales(L, c.partition.epsilon, c.alpha, c.partition.gamma, c.dimension);
    case PartitionMode::explicit_scales:
      return explicit_scales(L, c.partition.blocks_per_side, c.partition.interior_margin);
  }
  throw ConfigError("unreachable partition mode");
}

inline CubeGeometry geometry_for(const Config& c, long L) { return CubeGeometry(c.dimension, L, scales_for(c, L)); }

}  // namespace andersonlab

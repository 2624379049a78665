#pragma once

#include "ttvr/anatomy/phantom.hpp"
#include "ttvr/probmap/probmap.hpp"
#include "ttvr/rl/env.hpp"
#include "ttvr/rl/sac.hpp"

#include <fstream>
#include <memory>
#include <sstream>
#include <string>

namespace ttvr::fixtures {

/// Default phantom, synthesized once per test binary.
inline const anatomy::Phantom& default_phantom() {
  static const anatomy::Phantom p = anatomy::synthesize_phantom({});
  return p;
}

inline rl::LocalizationEnv default_env(const rl::EnvConfig& cfg = {}, const rl::InitDistribution& init = {},
                                       std::uint64_t seed = 0) {
  const auto& p = default_phantom();
  return rl::make_env(p.model, p.target, {}, cfg, init, {}, seed);
}

inline std::string data_path(const std::string& name) { return std::string(TTVR_TEST_DATA_DIR) + "/" + name; }

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Policy trained with the default configuration, checked in under tests/data.
inline std::shared_ptr<const rl::Policy> trained_policy() {
  static const auto p = std::make_shared<const rl::Policy>(
      rl::Policy::from_json(nlohmann::json::parse(read_text(data_path("policy.json")))));
  return p;
}

inline std::shared_ptr<const probmap::ProbabilityMap> trained_maps() {
  static const auto m = std::make_shared<const probmap::ProbabilityMap>(
      probmap::ProbabilityMap::from_json(nlohmann::json::parse(read_text(data_path("probability_map.json")))));
  return m;
}

}  // namespace ttvr::fixtures

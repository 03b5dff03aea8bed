#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "safempc/geometry.hpp"
#include "safempc/mpc.hpp"
#include "safempc/network.hpp"

namespace safempc {

/// Everything one experiment needs, as read from a JSON file.
struct Scenario {
  std::string name;
  NetworkSpec network;
  std::optional<SafetyExpr> safety;  // absent: the whole state space is safe
  std::vector<std::vector<double>> extra_breakpoints;  // per link, in link order
  MpcConfig mpc;
  State initial_state;
  std::size_t steps = 20;
  std::uint64_t seed = 0;
  DemandSampler sampler = DemandSampler::uniform;
  std::string output_dir = "out";
  std::uint64_t hash = 0;  // of the canonical JSON text
};

/// Parses and cross-checks a scenario. Throws Error(validation).
Scenario parse_scenario(std::string_view json_text);
Scenario load_scenario(const std::filesystem::path& path);

/// FNV-1a, 64 bit.
std::uint64_t fnv1a(std::string_view bytes);

}  // namespace safempc

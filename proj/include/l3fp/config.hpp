#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "l3fp/acquisition.hpp"
#include "l3fp/l3_features.hpp"
#include "l3fp/ridge_generator.hpp"

namespace l3fp {

struct GeneratorConfig {
  std::uint64_t master_seed = 1;
  int identities = 148;
  int sessions = 2;
  int samples_per_session = 5;
  int replicas = 5;
  ClassWeights class_weights = ClassWeights::population();
  GaborParams gabor;
  PoreSpacingDistribution pores;
  ScratchCountCDF scratch_cdf = ScratchCountCDF::fallback();
  AcquisitionStats acquisition;
  SeedConfig seed;
  std::string output_dir = "out";

  int samples_per_identity() const { return sessions * samples_per_session; }
  void validate() const;
  bool operator==(const GeneratorConfig&) const = default;
};

nlohmann::ordered_json to_json(const GeneratorConfig& config);
/// Keys absent from `j` keep their defaults; unknown keys are rejected.
GeneratorConfig config_from_json(const nlohmann::json& j);

/// Parses and validates; FormatError carries the offending line.
GeneratorConfig load_config(const std::filesystem::path& path);
GeneratorConfig parse_config(const std::string& text, const std::string& source = "<config>");
void save_config(const GeneratorConfig& config, const std::filesystem::path& path);
std::string dump_config(const GeneratorConfig& config);

}  // namespace l3fp

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "l3fp/acquisition.hpp"
#include "l3fp/config.hpp"
#include "l3fp/l3_features.hpp"
#include "l3fp/matcher.hpp"
#include "l3fp/ridge_generator.hpp"
#include "l3fp/ridge_topology.hpp"

namespace l3fp {

/// Every stage of one identity, from the same stream the dataset uses.
struct IdentityBuild {
  RidgeGeneration ridge;
  GrayImage upscaled;
  Skeleton skeleton;
  L3MasterFingerprint l3;
};

IdentityBuild build_identity(const GeneratorConfig& config, int replica, int identity);
SeedImage build_sample(const GeneratorConfig& config, const L3MasterFingerprint& l3, int replica,
                       int identity, int sample);

struct SampleRecord {
  int replica = 0;
  int identity = 0;
  int session = 0;
  int sample = 0;
  std::string image;       ///< relative to the manifest directory
  std::string pores;
  std::string provenance;
  std::string provenance_hash;  ///< FNV-1a 64 of the provenance file bytes, hex

  bool operator==(const SampleRecord&) const = default;
};

struct DatasetManifest {
  GeneratorConfig config;
  std::vector<SampleRecord> records;  ///< by (replica, identity, sample)
  std::vector<std::string> files;     ///< every file written except the manifest, sorted
};

inline constexpr const char* kManifestName = "manifest.json";

/// "r{replica}/id{identity:03}/s{sample:02}"
std::string sample_stem(int replica, int identity, int sample);

/// Writes every replica into `out_dir`, which must be empty or absent.
/// Identities are spread over `workers` threads; output does not depend on
/// the worker count.
DatasetManifest generate_dataset(const GeneratorConfig& config, const std::filesystem::path& out_dir,
                                 int workers = 1);

nlohmann::ordered_json to_json(const DatasetManifest& manifest);
std::string dump_manifest(const DatasetManifest& manifest);
DatasetManifest load_manifest(const std::filesystem::path& path);

/// Problems found comparing the manifest with the files under `root`:
/// missing or unlisted files and provenance hash mismatches.
std::vector<std::string> verify_manifest(const DatasetManifest& manifest,
                                         const std::filesystem::path& root);

struct ReplicaEvaluation {
  int replica = 0;
  std::vector<ScoredPair> scores;
  RocCurve roc;
};

struct Evaluation {
  std::vector<ReplicaEvaluation> replicas;
  std::optional<MeanRoc> mean;  ///< with two or more replicas
};

Evaluation evaluate_manifest(const DatasetManifest& manifest, const std::filesystem::path& root,
                             const ProtocolParams& params = {}, int workers = 1);

/// scores_r{k}.csv, roc_r{k}.csv, roc_r{k}.dat, eer.csv and, with two or
/// more replicas, roc_mean.csv. Returns the paths written.
std::vector<std::filesystem::path> write_evaluation(const Evaluation& eval,
                                                    const std::filesystem::path& out_dir);

/// ridge_map.png, skeleton.png, master.png, l3_master.png plus the
/// l3_pores.csv, segments.txt and scratches.json sidecars. Returns the paths written.
std::vector<std::filesystem::path> write_debug_images(const GeneratorConfig& config, int replica,
                                                      int identity,
                                                      const std::filesystem::path& out_dir);

}  // namespace l3fp

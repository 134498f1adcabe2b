// Command-line front end: generate, estimate, evaluate, render-debug.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "l3fp/config.hpp"
#include "l3fp/dataset.hpp"
#include "l3fp/error.hpp"
#include "l3fp/estimation.hpp"
#include "l3fp/io_formats.hpp"

namespace fs = std::filesystem;
using namespace l3fp;

namespace {

enum ExitCode {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,
  kFormat = 3,
  kIo = 4,
  kGeneration = 5,
  kEstimation = 6,
  kInvalidArgument = 7,
};

int fail(const char* kind, std::string detail, int code) {
  for (char& c : detail)
    if (c == '\n' || c == '\r') c = ' ';
  std::fprintf(stderr, "error: %s: %s\n", kind, detail.c_str());
  return code;
}

struct GenerateArgs {
  std::string config;
  std::string out;
  int workers = 1;
};

struct EstimateArgs {
  std::string pores;
  std::string correspondences;
  std::string scratch_counts;
  std::string base;
  std::string out;
  double threshold = 3.0;
  int iterations = 1000;
  std::uint64_t seed = 1;
  double center_x = 0.0;
  double center_y = 0.0;
};

struct EvaluateArgs {
  std::string manifest;
  std::string out;
  int workers = 1;
  std::string genuine = "cross-session";
  std::string impostor = "first-sample";
};

struct DebugArgs {
  std::string config;
  int identity = 0;
  int replica = 0;
  std::string out = "debug";
};

int run_generate(const GenerateArgs& a) {
  const GeneratorConfig config = load_config(a.config);
  const DatasetManifest m = generate_dataset(config, a.out, a.workers);
  std::printf("wrote %zu images to %s\n", m.records.size(), a.out.c_str());
  return kOk;
}

int run_estimate(const EstimateArgs& a) {
  if (a.pores.empty() && a.correspondences.empty() && a.scratch_counts.empty())
    return fail("usage", "estimate needs at least one of --pores, --correspondences, --scratch-counts",
                kUsage);
  GeneratorConfig config = a.base.empty() ? GeneratorConfig{} : load_config(a.base);

  if (!a.pores.empty()) {
    const auto rows = read_pore_csv(a.pores);
    config.pores = estimate_pore_spacing(rows);
    std::printf("pore_spacing mean=%s std_dev=%s pores=%zu\n", format_double(config.pores.mean).c_str(),
                format_double(config.pores.std_dev).c_str(), rows.size());
  }
  if (!a.correspondences.empty()) {
    const auto groups = read_correspondence_csv(a.correspondences);
    RansacParams rp;
    rp.inlier_threshold = a.threshold;
    rp.iterations = a.iterations;
    rp.center = {a.center_x, a.center_y};
    Rng rng(a.seed);
    std::vector<RigidTransform> pairwise;
    for (const auto& g : groups) {
      try {
        pairwise.push_back(ransac_rigid(g.pairs, rp, rng).transform);
      } catch (const EstimationFailure& e) {
        throw EstimationFailure(g.image_a + " vs " + g.image_b + ": " + e.what());
      }
    }
    const SigmaEstimates s = estimate_sigmas(pairwise);
    config.acquisition = {s.sigma_x, s.sigma_y, s.sigma_theta_deg};
    std::printf("sigmas x=%s y=%s theta_deg=%s pairs=%d\n", format_double(s.sigma_x).c_str(),
                format_double(s.sigma_y).c_str(), format_double(s.sigma_theta_deg).c_str(), s.n_pairs);
  }
  if (!a.scratch_counts.empty()) {
    const auto counts = read_scratch_counts(a.scratch_counts);
    config.scratch_cdf = estimate_scratch_cdf(counts);
    std::printf("scratch_cdf steps=%zu images=%zu\n", config.scratch_cdf.steps.size(), counts.size());
  }
  config.validate();
  save_config(config, a.out);
  return kOk;
}

int run_evaluate(const EvaluateArgs& a) {
  ProtocolParams params;
  if (a.genuine == "all-pairs") params.genuine = GenuinePolicy::AllPairs;
  if (a.impostor == "all-samples") params.impostor = ImpostorPolicy::AllSamples;
  const fs::path manifest_path(a.manifest);
  const DatasetManifest m = load_manifest(manifest_path);
  const Evaluation ev = evaluate_manifest(m, manifest_path.parent_path(), params, a.workers);
  write_evaluation(ev, a.out);
  for (const auto& r : ev.replicas)
    std::printf("replica %d pairs=%zu eer=%s%%\n", r.replica, r.scores.size(),
                format_double(r.roc.eer).c_str());
  if (ev.mean)
    std::printf("mean eer=%s%% ci95=+-%s\n", format_double(ev.mean->mean_eer).c_str(),
                format_double(ev.mean->eer_ci_half_width).c_str());
  return kOk;
}

int run_debug(const DebugArgs& a) {
  const GeneratorConfig config = load_config(a.config);
  for (const auto& p : write_debug_images(config, a.replica, a.identity, a.out))
    std::printf("%s\n", p.string().c_str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic L3 fingerprint dataset generator"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Generate a dataset from a config file");
  g->add_option("--config", gen.config, "Generator config (JSON)")->required();
  g->add_option("--out", gen.out, "Output directory (empty or absent)")->required();
  g->add_option("--workers", gen.workers, "Worker threads")->check(CLI::PositiveNumber);

  EstimateArgs est;
  auto* e = app.add_subcommand("estimate", "Estimate calibration parameters into a config file");
  e->add_option("--pores", est.pores, "Pore annotation CSV");
  e->add_option("--correspondences", est.correspondences, "Correspondence CSV");
  e->add_option("--scratch-counts", est.scratch_counts, "Per-image scratch count CSV");
  e->add_option("--base", est.base, "Config to start from (defaults otherwise)");
  e->add_option("--out", est.out, "Config file to write")->required();
  e->add_option("--threshold", est.threshold, "RANSAC inlier threshold, px")->check(CLI::PositiveNumber);
  e->add_option("--iterations", est.iterations, "RANSAC iterations")->check(CLI::PositiveNumber);
  e->add_option("--seed", est.seed, "RANSAC seed");
  e->add_option("--center-x", est.center_x, "Rotation centre x of the fitted transforms");
  e->add_option("--center-y", est.center_y, "Rotation centre y of the fitted transforms");

  EvaluateArgs ev;
  auto* v = app.add_subcommand("evaluate", "Score a generated dataset with the pore matcher");
  v->add_option("--manifest", ev.manifest, "manifest.json of a generated dataset")->required();
  v->add_option("--out", ev.out, "Output directory")->required();
  v->add_option("--workers", ev.workers, "Worker threads")->check(CLI::PositiveNumber);
  v->add_option("--genuine-policy", ev.genuine, "cross-session | all-pairs")
      ->check(CLI::IsMember({"cross-session", "all-pairs"}));
  v->add_option("--impostor-policy", ev.impostor, "first-sample | all-samples")
      ->check(CLI::IsMember({"first-sample", "all-samples"}));

  DebugArgs dbg;
  auto* d = app.add_subcommand("render-debug", "Write the intermediate images of one identity");
  d->add_option("--config", dbg.config, "Generator config (JSON)")->required();
  d->add_option("--identity", dbg.identity, "Identity index")->required();
  d->add_option("--replica", dbg.replica, "Replica index");
  d->add_option("--out", dbg.out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& err) {
    return fail("usage", err.what(), kUsage);
  }

  try {
    if (*g) return run_generate(gen);
    if (*e) return run_estimate(est);
    if (*v) return run_evaluate(ev);
    if (*d) return run_debug(dbg);
  } catch (const FormatError& err) {
    return fail("format", err.what(), kFormat);
  } catch (const IoError& err) {
    return fail("io", err.what(), kIo);
  } catch (const GenerationFailure& err) {
    return fail("generation", err.what(), kGeneration);
  } catch (const RegenerationRequired& err) {
    return fail("generation", err.what(), kGeneration);
  } catch (const EstimationFailure& err) {
    return fail("estimation", err.what(), kEstimation);
  } catch (const InvalidArgument& err) {
    return fail("invalid-argument", err.what(), kInvalidArgument);
  } catch (const std::exception& err) {
    return fail("internal", err.what(), kInternal);
  }
  return kInternal;
}

#include "l3fp/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "l3fp/error.hpp"
#include "l3fp/io_formats.hpp"
#include "l3fp/png_io.hpp"
#include "l3fp/random.hpp"

namespace l3fp {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr std::uint64_t kIdentityStream = 0;

std::string where(int replica, int identity) {
  return "replica " + std::to_string(replica) + " identity " + std::to_string(identity);
}

}  // namespace

IdentityBuild build_identity(const GeneratorConfig& config, int replica, int identity) {
  Rng rng = make_rng(config.master_seed,
                     {static_cast<std::uint64_t>(replica), static_cast<std::uint64_t>(identity),
                      kIdentityStream});
  IdentityBuild b;
  try {
    b.ridge = generate_ridge_map(config.class_weights, config.gabor, rng);
    MasterBuild mb = build_master(b.ridge.ridge_map, rng);
    b.upscaled = std::move(mb.upscaled);
    b.skeleton = std::move(mb.skeleton);
    b.l3 = apply_l3(std::move(mb.master), config.pores, config.scratch_cdf, rng, identity);
  } catch (const GenerationFailure& e) {
    throw GenerationFailure(where(replica, identity) + ": " + e.what());
  } catch (const RegenerationRequired& e) {
    throw GenerationFailure(where(replica, identity) + ": " + e.what());
  }
  return b;
}

SeedImage build_sample(const GeneratorConfig& config, const L3MasterFingerprint& l3, int replica,
                       int identity, int sample) {
  Rng rng = make_rng(config.master_seed,
                     {static_cast<std::uint64_t>(replica), static_cast<std::uint64_t>(identity),
                      static_cast<std::uint64_t>(sample) + 1});
  try {
    return make_seed_image(l3, config.acquisition, config.seed, rng, sample);
  } catch (const GenerationFailure& e) {
    throw GenerationFailure(where(replica, identity) + " sample " + std::to_string(sample) + ": " +
                            e.what());
  }
}

std::string sample_stem(int replica, int identity, int sample) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "r%d/id%03d/s%02d", replica, identity, sample);
  return buf;
}

namespace {

std::string provenance_text(const SeedImage& seed, int replica, int session) {
  ordered_json j;
  j["replica"] = replica;
  j["identity_id"] = seed.identity_id;
  j["session"] = session;
  j["sample_id"] = seed.sample_id;
  j["pore_count"] = seed.pores.size();
  j["provenance"] = to_json(seed.provenance);
  return j.dump(2) + "\n";
}

std::vector<SampleRecord> write_identity(const GeneratorConfig& config, const fs::path& out,
                                         int replica, int identity) {
  const IdentityBuild build = build_identity(config, replica, identity);
  std::vector<SampleRecord> records;
  for (int s = 0; s < config.samples_per_identity(); ++s) {
    const SeedImage seed = build_sample(config, build.l3, replica, identity, s);
    const std::string stem = sample_stem(replica, identity, s);
    SampleRecord r;
    r.replica = replica;
    r.identity = identity;
    r.session = s / config.samples_per_session;
    r.sample = s;
    r.image = stem + ".png";
    r.pores = stem + ".pores.csv";
    r.provenance = stem + ".json";
    std::error_code ec;
    fs::create_directories((out / stem).parent_path(), ec);
    if (ec) throw IoError("cannot create " + (out / stem).parent_path().string() + ": " + ec.message());
    write_png(out / r.image, seed.image);
    const auto rows = annotations_of(seed);
    write_pore_csv(out / r.pores, rows);
    const std::string prov = provenance_text(seed, replica, r.session);
    write_text(out / r.provenance, prov);
    r.provenance_hash = hex64(fnv1a64(prov));
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace

DatasetManifest generate_dataset(const GeneratorConfig& config, const fs::path& out_dir,
                                 int workers) {
  config.validate();
  std::error_code ec;
  if (fs::exists(out_dir, ec) && !fs::is_empty(out_dir, ec))
    throw IoError("output directory is not empty: " + out_dir.string());
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  const int units = config.replicas * config.identities;
  std::vector<std::vector<SampleRecord>> results(units);
  std::vector<std::exception_ptr> errors(units);
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  auto work = [&] {
    for (int u; !failed && (u = next.fetch_add(1)) < units;) {
      try {
        results[u] = write_identity(config, out_dir, u / config.identities, u % config.identities);
      } catch (...) {
        errors[u] = std::current_exception();
        failed = true;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int i = 1; i < std::max(1, workers); ++i) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  DatasetManifest m;
  m.config = config;
  for (auto& r : results)
    for (auto& rec : r) {
      m.files.push_back(rec.image);
      m.files.push_back(rec.pores);
      m.files.push_back(rec.provenance);
      m.records.push_back(std::move(rec));
    }
  std::sort(m.files.begin(), m.files.end());
  write_text(out_dir / kManifestName, dump_manifest(m));
  return m;
}

ordered_json to_json(const DatasetManifest& m) {
  ordered_json j;
  j["format"] = "l3fp-manifest";
  j["version"] = 1;
  j["config"] = to_json(m.config);
  ordered_json recs = ordered_json::array();
  for (const auto& r : m.records)
    recs.push_back({{"replica", r.replica},
                    {"identity", r.identity},
                    {"session", r.session},
                    {"sample", r.sample},
                    {"image", r.image},
                    {"pores", r.pores},
                    {"provenance", r.provenance},
                    {"provenance_hash", r.provenance_hash}});
  j["records"] = recs;
  j["files"] = m.files;
  return j;
}

std::string dump_manifest(const DatasetManifest& m) { return to_json(m).dump(2) + "\n"; }

DatasetManifest load_manifest(const fs::path& path) {
  const std::string text = read_text(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto end = text.begin() + std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    throw FormatError(path.string(), 1 + static_cast<int>(std::count(text.begin(), end, '\n')),
                      "invalid JSON");
  }
  DatasetManifest m;
  try {
    if (j.value("format", "") != "l3fp-manifest")
      throw FormatError(path.string(), 1, "not an l3fp manifest");
    m.config = config_from_json(j.at("config"));
    for (const auto& r : j.at("records")) {
      SampleRecord s;
      s.replica = r.at("replica").get<int>();
      s.identity = r.at("identity").get<int>();
      s.session = r.at("session").get<int>();
      s.sample = r.at("sample").get<int>();
      s.image = r.at("image").get<std::string>();
      s.pores = r.at("pores").get<std::string>();
      s.provenance = r.at("provenance").get<std::string>();
      s.provenance_hash = r.at("provenance_hash").get<std::string>();
      m.records.push_back(std::move(s));
    }
    m.files = j.at("files").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw FormatError(path.string(), 1, std::string("malformed manifest: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw FormatError(path.string(), 1, std::string("malformed manifest: ") + e.what());
  }
  return m;
}

std::vector<std::string> verify_manifest(const DatasetManifest& m, const fs::path& root) {
  std::vector<std::string> problems;
  std::set<std::string> on_disk;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) on_disk.insert(fs::relative(e.path(), root).generic_string());
  on_disk.erase(kManifestName);
  const std::set<std::string> listed(m.files.begin(), m.files.end());
  for (const auto& f : listed)
    if (!on_disk.count(f)) problems.push_back("missing: " + f);
  for (const auto& f : on_disk)
    if (!listed.count(f)) problems.push_back("unlisted: " + f);
  for (const auto& r : m.records) {
    for (const auto* f : {&r.image, &r.pores, &r.provenance})
      if (!listed.count(*f)) problems.push_back("record file not listed: " + *f);
    if (on_disk.count(r.provenance) &&
        hex64(fnv1a64(read_text(root / r.provenance))) != r.provenance_hash)
      problems.push_back("provenance hash mismatch: " + r.provenance);
  }
  return problems;
}

Evaluation evaluate_manifest(const DatasetManifest& m, const fs::path& root,
                             const ProtocolParams& params, int workers) {
  std::map<int, std::vector<ProtocolSample>> by_replica;
  for (const auto& r : m.records) {
    ProtocolSample s{r.identity, r.session, r.sample, {}};
    for (const auto& a : read_pore_csv(root / r.pores)) s.pores.push_back(a.position);
    by_replica[r.replica].push_back(std::move(s));
  }
  Evaluation ev;
  std::vector<RocCurve> curves;
  for (auto& [replica, samples] : by_replica) {
    ReplicaEvaluation re;
    re.replica = replica;
    re.scores = run_protocol(samples, params, workers);
    re.roc = compute_roc(re.scores);
    curves.push_back(re.roc);
    ev.replicas.push_back(std::move(re));
  }
  if (curves.size() >= 2) ev.mean = aggregate_replicas(curves);
  return ev;
}

std::vector<fs::path> write_evaluation(const Evaluation& ev, const fs::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  std::vector<fs::path> written;
  auto put = [&](const std::string& name, const std::string& text) {
    write_text(out_dir / name, text);
    written.push_back(out_dir / name);
  };
  std::string eer = "replica,eer_percent,ci_half_width,genuine,impostor\n";
  for (const auto& r : ev.replicas) {
    const std::string k = std::to_string(r.replica);
    put("scores_r" + k + ".csv", scores_csv(r.scores));
    put("roc_r" + k + ".csv", roc_csv(r.roc));
    put("roc_r" + k + ".dat", roc_dat(r.roc));
    const auto g = std::count_if(r.scores.begin(), r.scores.end(),
                                 [](const ScoredPair& p) { return p.kind == PairKind::Genuine; });
    eer += k + ',' + format_double(r.roc.eer) + ",," + std::to_string(g) + ',' +
           std::to_string(r.scores.size() - g) + '\n';
  }
  if (ev.mean) {
    put("roc_mean.csv", mean_roc_csv(*ev.mean));
    eer += "mean," + format_double(ev.mean->mean_eer) + ',' +
           format_double(ev.mean->eer_ci_half_width) + ",,\n";
  }
  put("eer.csv", eer);
  return written;
}

std::vector<fs::path> write_debug_images(const GeneratorConfig& config, int replica, int identity,
                                         const fs::path& out_dir) {
  config.validate();
  if (replica < 0 || replica >= config.replicas || identity < 0 || identity >= config.identities)
    throw InvalidArgument(where(replica, identity) + " is outside the configured dataset");
  const IdentityBuild b = build_identity(config, replica, identity);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  std::vector<fs::path> written;
  write_binary_png(out_dir / "ridge_map.png", b.ridge.ridge_map.pixels);
  written.push_back(out_dir / "ridge_map.png");
  write_binary_png(out_dir / "skeleton.png", b.skeleton.pixels);
  written.push_back(out_dir / "skeleton.png");
  write_png(out_dir / "master.png", b.l3.master.image);
  written.push_back(out_dir / "master.png");
  write_png(out_dir / "l3_master.png", b.l3.image);
  written.push_back(out_dir / "l3_master.png");
  const auto rows = annotations_of(b.l3);
  write_pore_csv(out_dir / "l3_pores.csv", rows);
  written.push_back(out_dir / "l3_pores.csv");
  write_text(out_dir / "segments.txt", segment_sidecar(b.l3.master));
  written.push_back(out_dir / "segments.txt");
  write_text(out_dir / "scratches.json", to_json(std::span<const Scratch>(b.l3.scratches)).dump(2) + "\n");
  written.push_back(out_dir / "scratches.json");
  return written;
}

}  // namespace l3fp

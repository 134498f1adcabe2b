#include "l3fp/config.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "l3fp/error.hpp"

namespace l3fp {

using nlohmann::json;
using nlohmann::ordered_json;

void GeneratorConfig::validate() const {
  if (identities < 1 || sessions < 1 || samples_per_session < 1 || replicas < 1)
    throw InvalidArgument("identity, session, sample and replica counts must be >= 1");
  class_weights.validate();
  gabor.validate();
  pores.validate();
  scratch_cdf.validate();
  acquisition.validate();
  seed.validate();
}

namespace {

std::string_view to_string(AffineMode m) { return m == AffineMode::Shear ? "shear" : "translation"; }

/// Schema violation at a key; the caller turns it into a FormatError.
struct SchemaError {
  std::string key;
  std::string what;
};

void expect_object(const json& j, std::string_view where, std::initializer_list<std::string_view> keys) {
  if (!j.is_object()) throw SchemaError{std::string(where), "expected an object"};
  for (const auto& [k, v] : j.items())
    if (std::find(keys.begin(), keys.end(), k) == keys.end())
      throw SchemaError{k, "unknown key '" + k + "' in " + std::string(where)};
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
  const auto it = obj.find(key);
  if (it == obj.end()) return;
  const json& v = *it;
  if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) throw SchemaError{key, "expected a boolean"};
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) throw SchemaError{key, "expected a string"};
  } else if constexpr (std::is_same_v<T, std::uint64_t>) {
    if (!v.is_number_unsigned()) throw SchemaError{key, "expected a non-negative integer"};
  } else if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) throw SchemaError{key, "expected an integer"};
  } else {
    if (!v.is_number()) throw SchemaError{key, "expected a number"};
  }
  out = v.get<T>();
}

}  // namespace

ordered_json to_json(const GeneratorConfig& c) {
  ordered_json j;
  j["master_seed"] = c.master_seed;
  j["identities"] = c.identities;
  j["sessions"] = c.sessions;
  j["samples_per_session"] = c.samples_per_session;
  j["replicas"] = c.replicas;
  ordered_json w;
  for (FingerprintClass k : kAllClasses) w[std::string(to_string(k))] = c.class_weights[k];
  j["class_weights"] = w;
  j["gabor"] = {{"base_scale", c.gabor.base_scale},
                {"max_jitter", c.gabor.max_jitter},
                {"kernel_bandwidth", c.gabor.kernel_bandwidth},
                {"iterations", c.gabor.iterations},
                {"seed_density", c.gabor.seed_density},
                {"orientation_bins", c.gabor.orientation_bins},
                {"convergence_tolerance", c.gabor.convergence_tolerance}};
  j["pores"] = {{"mean", c.pores.mean}, {"std_dev", c.pores.std_dev}};
  ordered_json steps = ordered_json::array();
  for (auto [count, p] : c.scratch_cdf.steps) steps.push_back({count, p});
  j["scratch_cdf"] = steps;
  j["acquisition"] = {{"sigma_x", c.acquisition.sigma_x},
                      {"sigma_y", c.acquisition.sigma_y},
                      {"sigma_theta_deg", c.acquisition.sigma_theta_deg}};
  j["seed"] = {{"crop_width", c.seed.crop_width},
               {"crop_height", c.seed.crop_height},
               {"rigid", c.seed.rigid_enabled},
               {"affine", c.seed.affine_enabled},
               {"affine_mode", to_string(c.seed.affine_mode)},
               {"elastic", c.seed.elastic_enabled},
               {"elastic_alpha", c.seed.elastic.alpha},
               {"elastic_sigma", c.seed.elastic.smoothing_sigma},
               {"dropout_rate", c.seed.dropout_rate},
               {"max_retries", c.seed.max_retries},
               {"max_padding", c.seed.max_padding}};
  j["output_dir"] = c.output_dir;
  return j;
}

GeneratorConfig config_from_json(const json& j) {
  GeneratorConfig c;
  expect_object(j, "config",
                {"master_seed", "identities", "sessions", "samples_per_session", "replicas",
                 "class_weights", "gabor", "pores", "scratch_cdf", "acquisition", "seed",
                 "output_dir"});
  read(j, "master_seed", c.master_seed);
  read(j, "identities", c.identities);
  read(j, "sessions", c.sessions);
  read(j, "samples_per_session", c.samples_per_session);
  read(j, "replicas", c.replicas);
  read(j, "output_dir", c.output_dir);

  if (auto it = j.find("class_weights"); it != j.end()) {
    expect_object(*it, "class_weights",
                  {"whorl", "right_loop", "left_loop", "plain_arch", "tented_arch"});
    for (FingerprintClass k : kAllClasses) {
      const std::string name(to_string(k));
      if (!it->contains(name)) throw SchemaError{"class_weights", "missing weight '" + name + "'"};
      read(*it, name.c_str(), c.class_weights.weights[static_cast<int>(k)]);
    }
  }
  if (auto it = j.find("gabor"); it != j.end()) {
    expect_object(*it, "gabor",
                  {"base_scale", "max_jitter", "kernel_bandwidth", "iterations", "seed_density",
                   "orientation_bins", "convergence_tolerance"});
    read(*it, "base_scale", c.gabor.base_scale);
    read(*it, "max_jitter", c.gabor.max_jitter);
    read(*it, "kernel_bandwidth", c.gabor.kernel_bandwidth);
    read(*it, "iterations", c.gabor.iterations);
    read(*it, "seed_density", c.gabor.seed_density);
    read(*it, "orientation_bins", c.gabor.orientation_bins);
    read(*it, "convergence_tolerance", c.gabor.convergence_tolerance);
  }
  if (auto it = j.find("pores"); it != j.end()) {
    expect_object(*it, "pores", {"mean", "std_dev"});
    read(*it, "mean", c.pores.mean);
    read(*it, "std_dev", c.pores.std_dev);
  }
  if (auto it = j.find("scratch_cdf"); it != j.end()) {
    if (!it->is_array() || it->empty())
      throw SchemaError{"scratch_cdf", "expected a non-empty array of [count, cumulative] pairs"};
    c.scratch_cdf.steps.clear();
    for (const auto& s : *it) {
      if (!s.is_array() || s.size() != 2 || !s[0].is_number_integer() || !s[1].is_number())
        throw SchemaError{"scratch_cdf", "expected [count, cumulative] pairs"};
      c.scratch_cdf.steps.emplace_back(s[0].get<int>(), s[1].get<double>());
    }
  }
  if (auto it = j.find("acquisition"); it != j.end()) {
    expect_object(*it, "acquisition", {"sigma_x", "sigma_y", "sigma_theta_deg"});
    read(*it, "sigma_x", c.acquisition.sigma_x);
    read(*it, "sigma_y", c.acquisition.sigma_y);
    read(*it, "sigma_theta_deg", c.acquisition.sigma_theta_deg);
  }
  if (auto it = j.find("seed"); it != j.end()) {
    expect_object(*it, "seed",
                  {"crop_width", "crop_height", "rigid", "affine", "affine_mode", "elastic",
                   "elastic_alpha", "elastic_sigma", "dropout_rate", "max_retries",
                   "max_padding"});
    read(*it, "crop_width", c.seed.crop_width);
    read(*it, "crop_height", c.seed.crop_height);
    read(*it, "rigid", c.seed.rigid_enabled);
    read(*it, "affine", c.seed.affine_enabled);
    std::string mode(to_string(c.seed.affine_mode));
    read(*it, "affine_mode", mode);
    if (mode == "translation")
      c.seed.affine_mode = AffineMode::Translation;
    else if (mode == "shear")
      c.seed.affine_mode = AffineMode::Shear;
    else
      throw SchemaError{"affine_mode", "affine_mode must be 'translation' or 'shear'"};
    read(*it, "elastic", c.seed.elastic_enabled);
    read(*it, "elastic_alpha", c.seed.elastic.alpha);
    read(*it, "elastic_sigma", c.seed.elastic.smoothing_sigma);
    read(*it, "dropout_rate", c.seed.dropout_rate);
    read(*it, "max_retries", c.seed.max_retries);
    read(*it, "max_padding", c.seed.max_padding);
  }
  return c;
}

namespace {

int line_of_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + offset, '\n'));
}

int line_of_key(const std::string& text, const std::string& key) {
  const auto pos = text.find("\"" + key + "\"");
  return pos == std::string::npos ? 1 : line_of_offset(text, pos);
}

}  // namespace

GeneratorConfig parse_config(const std::string& text, const std::string& source) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(source, line_of_offset(text, e.byte == 0 ? 0 : e.byte - 1),
                      "invalid JSON");
  }
  GeneratorConfig c;
  try {
    c = config_from_json(j);
  } catch (const SchemaError& e) {
    throw FormatError(source, line_of_key(text, e.key), e.what);
  } catch (const json::exception& e) {
    throw FormatError(source, 1, e.what());
  }
  try {
    c.validate();
  } catch (const InvalidArgument& e) {
    throw FormatError(source, 1, e.what());
  }
  return c;
}

GeneratorConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

std::string dump_config(const GeneratorConfig& config) { return to_json(config).dump(2) + "\n"; }

void save_config(const GeneratorConfig& config, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << dump_config(config);
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace l3fp

#include "mhgan/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>

#include "json.hpp"

namespace mhgan {

namespace {

using nlohmann::json;

const std::set<std::string>& top_level_keys() {
  static const std::set<std::string> keys = {
      "loss_variant", "dataset",        "dataset_size",     "d_steps_per_g",
      "lr_g",         "lr_d",           "lambda",           "batch_size",
      "total_g_steps", "eval_interval", "eval_samples",     "seed",
      "labeled_fraction", "z_dim",      "switch_step",      "head_mode",
      "adam_beta1",   "adam_beta2",     "output_dir",       "determinism",
      "checkpoint_interval", "resume_from"};
  return keys;
}

json default_doc() {
  json d;
  d["loss_variant"] = "MHGAN";
  d["dataset"] = {{"kind", "ring"}, {"k", 8}, {"radius", 2.0}, {"sigma", 0.05}, {"seed", 1}};
  d["dataset_size"] = 8192;
  d["d_steps_per_g"] = 1;
  d["lr_g"] = 1e-4;
  d["lr_d"] = 4e-4;
  d["lambda"] = 0.1;
  d["batch_size"] = 128;
  d["total_g_steps"] = 20000;
  d["eval_interval"] = 500;
  d["eval_samples"] = 4096;
  d["seed"] = 0;
  d["labeled_fraction"] = 1.0;
  d["z_dim"] = 16;
  d["switch_step"] = -1;
  d["head_mode"] = "auto";
  d["adam_beta1"] = 0.0;
  d["adam_beta2"] = 0.9;
  d["output_dir"] = "run";
  d["determinism"] = true;
  d["checkpoint_interval"] = 5000;
  d["resume_from"] = "";
  return d;
}

void check_dataset_keys(const json& ds) {
  if (!ds.is_object() || !ds.contains("kind") || !ds["kind"].is_string())
    throw ConfigError("dataset must be an object with a string 'kind'");
  const std::string kind = ds["kind"].get<std::string>();
  std::set<std::string> allowed;
  if (kind == "ring")
    allowed = {"kind", "k", "radius", "sigma", "seed"};
  else if (kind == "grid")
    allowed = {"kind", "rows", "cols", "sigma", "seed"};
  else if (kind == "csv")
    allowed = {"kind", "path", "dim", "k", "seed"};
  else
    throw ConfigError("unknown dataset kind '" + kind + "' (expected ring, grid, or csv)");
  for (const auto& [key, value] : ds.items())
    if (allowed.find(key) == allowed.end())
      throw ConfigError("unknown dataset key '" + key + "' for kind '" + kind + "'");
}

DatasetSpec dataset_from(const json& ds) {
  check_dataset_keys(ds);
  DatasetSpec spec;
  spec.seed = ds.value("seed", 1ull);
  const std::string kind = ds["kind"].get<std::string>();
  if (kind == "ring") {
    RingMixtureSpec ring;
    ring.k = ds.value("k", 8);
    ring.radius = ds.value("radius", 2.0f);
    ring.sigma = ds.value("sigma", 0.05f);
    spec.kind = ring;
  } else if (kind == "grid") {
    GridMixtureSpec grid;
    grid.rows = ds.value("rows", 5);
    grid.cols = ds.value("cols", 5);
    grid.sigma = ds.value("sigma", 0.05f);
    spec.kind = grid;
  } else {
    CsvVectorsSpec csv;
    if (!ds.contains("path")) throw ConfigError("csv dataset needs a 'path'");
    csv.path = ds["path"].get<std::string>();
    csv.dim = ds.value("dim", 2);
    csv.k = ds.value("k", 2);
    spec.kind = csv;
  }
  return spec;
}

json dataset_to_json(const DatasetSpec& spec) {
  json ds;
  ds["seed"] = spec.seed;
  if (const auto* ring = std::get_if<RingMixtureSpec>(&spec.kind)) {
    ds["kind"] = "ring";
    ds["k"] = ring->k;
    ds["radius"] = ring->radius;
    ds["sigma"] = ring->sigma;
  } else if (const auto* grid = std::get_if<GridMixtureSpec>(&spec.kind)) {
    ds["kind"] = "grid";
    ds["rows"] = grid->rows;
    ds["cols"] = grid->cols;
    ds["sigma"] = grid->sigma;
  } else {
    const auto& csv = std::get<CsvVectorsSpec>(spec.kind);
    ds["kind"] = "csv";
    ds["path"] = csv.path;
    ds["dim"] = csv.dim;
    ds["k"] = csv.k;
  }
  return ds;
}

HeadMode head_mode_from(const std::string& name, LossVariant variant) {
  if (name == "auto") return default_head_mode(variant);
  if (name == "projection_only") return HeadMode::ProjectionOnly;
  if (name == "aux") return HeadMode::Aux;
  if (name == "shared") return HeadMode::Shared;
  throw ConfigError("unknown head_mode '" + name +
                    "' (expected auto, projection_only, aux, or shared)");
}

json parse_override_value(const std::string& text) {
  json parsed = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (parsed.is_discarded() || parsed.is_object() || parsed.is_array()) return json(text);
  return parsed;
}

template <typename T>
T get_as(const json& doc, const std::string& key) {
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type");
  }
}

}  // namespace

RunConfig load_config(const std::optional<std::string>& file_path,
                      const std::vector<std::string>& overrides) {
  json doc = default_doc();
  std::set<std::string> user_keys;

  if (file_path.has_value()) {
    std::ifstream is(*file_path);
    if (!is) throw ConfigError("cannot open config file '" + *file_path + "'");
    json file = json::parse(is, nullptr, /*allow_exceptions=*/false);
    if (file.is_discarded())
      throw ConfigError("config file '" + *file_path + "' is not valid JSON");
    if (!file.is_object()) throw ConfigError("config file must hold a JSON object");
    for (const auto& [key, value] : file.items()) {
      if (top_level_keys().find(key) == top_level_keys().end())
        throw ConfigError("unknown config key '" + key + "'");
      doc[key] = value;
      user_keys.insert(key);
    }
  }

  for (const std::string& ov : overrides) {
    const size_t eq = ov.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ConfigError("override '" + ov + "' is not of the form key=value");
    const std::string path = ov.substr(0, eq);
    const json value = parse_override_value(ov.substr(eq + 1));
    const size_t dot = path.find('.');
    if (dot == std::string::npos) {
      if (top_level_keys().find(path) == top_level_keys().end())
        throw ConfigError("unknown config key '" + path + "'");
      doc[path] = value;
      user_keys.insert(path);
    } else {
      const std::string head = path.substr(0, dot);
      const std::string tail = path.substr(dot + 1);
      if (head != "dataset" || tail.empty() || tail.find('.') != std::string::npos)
        throw ConfigError("unknown config key '" + path + "'");
      doc["dataset"][tail] = value;
      user_keys.insert("dataset");
    }
  }

  RunConfig config;
  TrainConfig& t = config.train;
  const std::string variant_name = get_as<std::string>(doc, "loss_variant");
  const auto variant = parse_loss_variant(variant_name);
  if (!variant.has_value())
    throw ConfigError("unknown loss_variant '" + variant_name +
                      "' (expected SAGAN_Hinge, MHGAN, ACGAN, MHGAN_SSL, ACGAN_SSL, MHShared)");
  t.variant = *variant;
  t.dataset = dataset_from(doc["dataset"]);
  t.dataset_size = get_as<int>(doc, "dataset_size");
  t.d_steps_per_g = get_as<int>(doc, "d_steps_per_g");
  t.lr_g = get_as<float>(doc, "lr_g");
  t.lr_d = get_as<float>(doc, "lr_d");
  t.lambda = get_as<float>(doc, "lambda");
  t.batch_size = get_as<int>(doc, "batch_size");
  t.total_g_steps = get_as<int>(doc, "total_g_steps");
  t.eval_interval = get_as<int>(doc, "eval_interval");
  t.eval_samples = get_as<int>(doc, "eval_samples");
  t.seed = get_as<uint64_t>(doc, "seed");
  t.labeled_fraction = get_as<float>(doc, "labeled_fraction");
  t.z_dim = get_as<int>(doc, "z_dim");
  t.switch_step = get_as<int>(doc, "switch_step");
  t.adam_beta1 = get_as<float>(doc, "adam_beta1");
  t.adam_beta2 = get_as<float>(doc, "adam_beta2");

  const std::string head_name = get_as<std::string>(doc, "head_mode");
  t.head_mode = head_mode_from(head_name, t.variant);
  apply_variant_defaults(t, user_keys.count("d_steps_per_g") > 0, user_keys.count("lr_d") > 0,
                         head_name != "auto");

  config.settings.out_dir = get_as<std::string>(doc, "output_dir");
  config.settings.determinism = get_as<bool>(doc, "determinism");
  config.settings.checkpoint_interval = get_as<int>(doc, "checkpoint_interval");
  config.settings.resume_from = get_as<std::string>(doc, "resume_from");

  validate(t);
  return config;
}

std::string config_echo(const RunConfig& config) {
  json doc;
  const TrainConfig& t = config.train;
  doc["loss_variant"] = loss_variant_name(t.variant);
  doc["dataset"] = dataset_to_json(t.dataset);
  doc["dataset_size"] = t.dataset_size;
  doc["d_steps_per_g"] = t.d_steps_per_g;
  doc["lr_g"] = t.lr_g;
  doc["lr_d"] = t.lr_d;
  doc["lambda"] = t.lambda;
  doc["batch_size"] = t.batch_size;
  doc["total_g_steps"] = t.total_g_steps;
  doc["eval_interval"] = t.eval_interval;
  doc["eval_samples"] = t.eval_samples;
  doc["seed"] = t.seed;
  doc["labeled_fraction"] = t.labeled_fraction;
  doc["z_dim"] = t.z_dim;
  doc["switch_step"] = t.switch_step;
  doc["head_mode"] = head_mode_name(t.head_mode);
  doc["adam_beta1"] = t.adam_beta1;
  doc["adam_beta2"] = t.adam_beta2;
  doc["output_dir"] = config.settings.out_dir;
  doc["determinism"] = config.settings.determinism;
  doc["checkpoint_interval"] = config.settings.checkpoint_interval;
  doc["resume_from"] = config.settings.resume_from;
  return doc.dump(2);
}

std::string default_config_json() { return default_doc().dump(2); }

DatasetSpec parse_dataset_json(const std::string& json_text) {
  json ds = json::parse(json_text, nullptr, /*allow_exceptions=*/false);
  if (ds.is_discarded()) throw ConfigError("dataset spec is not valid JSON: " + json_text);
  return dataset_from(ds);
}

}  // namespace mhgan

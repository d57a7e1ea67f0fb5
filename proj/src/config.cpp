#include "motif/config.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>

#include "motif/errors.hpp"

namespace motif {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

void check_keys(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : obj.items())
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ConfigError("unknown key '" + key + "' in " + where);
}

std::size_t as_count(const json& v, const std::string& what) {
  if (v.is_number_unsigned()) return v.get<std::size_t>();
  if (v.is_number_integer() && v.get<long long>() >= 0) return static_cast<std::size_t>(v.get<long long>());
  throw ConfigError(what + " must be a non-negative integer");
}

double as_number(const json& v, const std::string& what) {
  if (!v.is_number()) throw ConfigError(what + " must be a number");
  return v.get<double>();
}

bool as_bool(const json& v, const std::string& what) {
  if (!v.is_boolean()) throw ConfigError(what + " must be true or false");
  return v.get<bool>();
}

std::vector<std::size_t> as_counts(const json& v, const std::string& what) {
  if (!v.is_array()) throw ConfigError(what + " must be an array of integers");
  std::vector<std::size_t> out;
  for (const auto& item : v) out.push_back(as_count(item, what));
  return out;
}

}  // namespace

bool is_sweepable_field(std::string_view name) {
  static constexpr std::string_view fields[] = {"smt",         "rfw",          "cw",           "lr",
                                                "epochs",      "batch_size",   "hidden_dims",  "conv_kernel",
                                                "conv_channels", "threshold",  "conventional_pr", "normalize_input",
                                                "eval_every"};
  return std::find(std::begin(fields), std::end(fields), name) != std::end(fields);
}

void set_train_field(TrainConfig& c, std::string_view name, const json& v) {
  const std::string what(name);
  if (name == "smt") c.loss.smt = as_number(v, what);
  else if (name == "rfw") c.loss.rfw = as_number(v, what);
  else if (name == "cw") c.loss.cw = as_number(v, what);
  else if (name == "lr") c.lr = as_number(v, what);
  else if (name == "epochs") c.epochs = as_count(v, what);
  else if (name == "batch_size") c.batch_size = as_count(v, what);
  else if (name == "eval_every") c.eval_every = as_count(v, what);
  else if (name == "hidden_dims") c.head.hidden_dims = as_counts(v, what);
  else if (name == "conv_kernel") c.head.conv_kernel = as_count(v, what);
  else if (name == "conv_channels") {
    const auto ch = as_counts(v, what);
    if (ch.size() != 2) throw ConfigError("conv_channels must have exactly two entries");
    c.head.conv_channels = {ch[0], ch[1]};
  } else if (name == "threshold") c.metrics.threshold = as_number(v, what);
  else if (name == "conventional_pr") c.metrics.conventional_pr = as_bool(v, what);
  else if (name == "normalize_input") c.head.normalize_input = as_bool(v, what);
  else throw ConfigError("unknown config field '" + what + "'");
}

void RunConfig::finalize() {
  if (!seed) throw ConfigError("seed is required (set \"seed\" in the config or pass --seed)");
  train.seed = *seed;
  train.validate();
}

RunConfig parse_run_config(const json& doc) {
  check_keys(doc, {"data", "seed", "train", "loss", "head", "metrics"}, "run config");
  RunConfig rc;
  TrainConfig& t = rc.train;
  bool input_dim_given = false;
  for (const auto& [section, body] : doc.items()) {
    if (section == "seed") {
      if (!body.is_number_unsigned() && !(body.is_number_integer() && body.get<long long>() >= 0))
        throw ConfigError("seed must be a non-negative integer");
      rc.seed = body.get<std::uint64_t>();
    } else if (section == "data") {
      check_keys(body, {"manifest", "store", "test_fraction"}, "data");
      for (const auto& [key, v] : body.items()) {
        if (key == "test_fraction") {
          t.test_fraction = as_number(v, "data.test_fraction");
        } else {
          if (!v.is_string()) throw ConfigError("data." + key + " must be a path string");
          (key == "manifest" ? rc.manifest : rc.store) = v.get<std::string>();
        }
      }
    } else if (section == "train") {
      check_keys(body, {"epochs", "batch_size", "lr", "eval_every"}, "train");
      for (const auto& [key, v] : body.items()) set_train_field(t, key, v);
    } else if (section == "loss") {
      check_keys(body, {"smt", "rfw", "cw"}, "loss");
      for (const auto& [key, v] : body.items()) set_train_field(t, key, v);
    } else if (section == "metrics") {
      check_keys(body, {"threshold", "conventional_pr"}, "metrics");
      for (const auto& [key, v] : body.items()) set_train_field(t, key, v);
    } else if (section == "head") {
      check_keys(body, {"kind", "input_dim", "hidden_dims", "output_dim", "conv_kernel", "conv_channels", "grid",
                        "normalize_input"},
                 "head");
      for (const auto& [key, v] : body.items()) {
        if (key == "kind") {
          if (!v.is_string()) throw ConfigError("head.kind must be a string");
          t.head.kind = parse_head_kind(v.get<std::string>());
        } else if (key == "input_dim") {
          t.head.input_dim = as_count(v, "head.input_dim");
          input_dim_given = true;
        } else if (key == "output_dim") {
          t.head.output_dim = as_count(v, "head.output_dim");
        } else if (key == "grid") {
          const auto g = as_counts(v, "head.grid");
          if (g.size() != 3) throw ConfigError("head.grid must be [channels, height, width]");
          t.head.grid = {g[0], g[1], g[2]};
        } else {
          set_train_field(t, key, v);
        }
      }
    }
  }
  if (t.head.kind == HeadKind::conv && !input_dim_given) t.head.input_dim = t.head.grid.size();
  return rc;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path.string() + "': " + e.what());
  }
  RunConfig rc = parse_run_config(doc);
  // Relative data paths are resolved against the config file's directory.
  const auto base = path.parent_path();
  if (!rc.manifest.empty() && rc.manifest.is_relative()) rc.manifest = base / rc.manifest;
  if (!rc.store.empty() && rc.store.is_relative()) rc.store = base / rc.store;
  return rc;
}

ordered_json to_json(const TrainConfig& c) {
  ordered_json j;
  j["seed"] = c.seed;
  j["data"]["test_fraction"] = c.test_fraction;
  j["train"]["epochs"] = c.epochs;
  j["train"]["batch_size"] = c.batch_size;
  j["train"]["lr"] = c.lr;
  j["train"]["eval_every"] = c.eval_every;
  j["loss"]["smt"] = c.loss.smt;
  j["loss"]["rfw"] = c.loss.rfw;
  j["loss"]["cw"] = c.loss.cw;
  j["head"]["kind"] = to_string(c.head.kind);
  j["head"]["input_dim"] = c.head.input_dim;
  j["head"]["hidden_dims"] = c.head.hidden_dims;
  j["head"]["output_dim"] = c.head.output_dim;
  if (c.head.kind == HeadKind::conv) {
    j["head"]["conv_kernel"] = c.head.conv_kernel;
    j["head"]["conv_channels"] = c.head.conv_channels;
    j["head"]["grid"] = {c.head.grid.channels, c.head.grid.height, c.head.grid.width};
  }
  j["head"]["normalize_input"] = c.head.normalize_input;
  j["metrics"]["threshold"] = c.metrics.threshold;
  j["metrics"]["conventional_pr"] = c.metrics.conventional_pr;
  return j;
}

ordered_json to_json(const RunConfig& rc) {
  ordered_json j = to_json(rc.train);
  j["data"]["manifest"] = rc.manifest.string();
  j["data"]["store"] = rc.store.string();
  return j;
}

}  // namespace motif

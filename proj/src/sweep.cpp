#include "motif/sweep.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <ostream>

#include "motif/errors.hpp"

namespace motif {

using nlohmann::json;

namespace {

constexpr std::string_view kMetricNames[] = {"precision", "recall", "f1", "f1_with_sm", "max_accuracy",
                                             "exact_match"};

std::string render(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array()) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "x" : "") + render(v[i]);
    return s;
  }
  return v.dump();
}

}  // namespace

bool is_metric_name(std::string_view name) {
  return std::find(std::begin(kMetricNames), std::end(kMetricNames), name) != std::end(kMetricNames);
}

double metric_value(const MetricsReport& r, std::string_view name) {
  if (name == "precision") return r.precision;
  if (name == "recall") return r.recall;
  if (name == "f1") return r.f1;
  if (name == "f1_with_sm") return r.f1_with_sm;
  if (name == "max_accuracy") return r.max_accuracy;
  if (name == "exact_match") return r.exact_match;
  throw ConfigError("unknown metric '" + std::string(name) + "'");
}

void SweepSpec::validate() const {
  std::size_t points = 1;
  for (const auto& axis : axes) {
    if (!is_sweepable_field(axis.name)) throw ConfigError("sweep axis '" + axis.name + "' is not a config field");
    if (axis.values.empty()) throw ConfigError("sweep axis '" + axis.name + "' has no values");
    points *= axis.values.size();
    for (const auto& other : axes)
      if (&other != &axis && other.name == axis.name) throw ConfigError("sweep axis '" + axis.name + "' repeated");
  }
  if (points < 1) throw ConfigError("sweep grid is empty");
  if (metrics.empty()) throw ConfigError("sweep needs at least one metric");
  for (const auto& m : metrics)
    if (!is_metric_name(m)) throw ConfigError("unknown metric '" + m + "'");
}

SweepSpec parse_sweep_spec(const json& doc) {
  if (!doc.is_object()) throw ConfigError("sweep spec must be an object");
  SweepSpec spec;
  for (const auto& [key, v] : doc.items()) {
    if (key == "base") {
      spec.base = parse_run_config(v);
      spec.base.finalize();
    } else if (key == "axes") {
      if (!v.is_array()) throw ConfigError("axes must be an array of {name, values}");
      for (const auto& a : v) {
        if (!a.is_object() || !a.contains("name") || !a.contains("values") || a.size() != 2 ||
            !a["name"].is_string() || !a["values"].is_array())
          throw ConfigError("each axis must be {\"name\": string, \"values\": [...]}");
        spec.axes.push_back({a["name"].get<std::string>(), a["values"].get<std::vector<json>>()});
      }
    } else if (key == "metrics") {
      if (!v.is_array()) throw ConfigError("metrics must be an array of names");
      spec.metrics.clear();
      for (const auto& m : v) {
        if (!m.is_string()) throw ConfigError("metric names must be strings");
        spec.metrics.push_back(m.get<std::string>());
      }
    } else if (key == "output_dir") {
      if (!v.is_string()) throw ConfigError("output_dir must be a path string");
      spec.output_dir = v.get<std::string>();
    } else if (key == "parallel") {
      if (!v.is_boolean()) throw ConfigError("parallel must be true or false");
      spec.parallel = v.get<bool>();
    } else {
      throw ConfigError("unknown key '" + key + "' in sweep spec");
    }
  }
  spec.validate();
  return spec;
}

SweepSpec load_sweep_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open sweep spec '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("sweep spec '" + path.string() + "': " + e.what());
  }
  SweepSpec spec = parse_sweep_spec(doc);
  const auto base = path.parent_path();
  if (!spec.base.manifest.empty() && spec.base.manifest.is_relative()) spec.base.manifest = base / spec.base.manifest;
  if (!spec.base.store.empty() && spec.base.store.is_relative()) spec.base.store = base / spec.base.store;
  return spec;
}

std::vector<GridPoint> expand_grid(const SweepSpec& spec) {
  spec.validate();
  std::vector<GridPoint> points{GridPoint{"", {}, spec.base.train}};
  for (const auto& axis : spec.axes) {
    std::vector<GridPoint> next;
    for (const auto& p : points)
      for (const auto& v : axis.values) {
        GridPoint q = p;
        set_train_field(q.config, axis.name, v);
        q.values.push_back(render(v));
        q.name += (q.name.empty() ? "" : ",") + axis.name + "=" + q.values.back();
        next.push_back(std::move(q));
      }
    points = std::move(next);
  }
  if (spec.axes.empty()) points.front().name = "base";
  for (const auto& p : points) {
    try {
      p.config.validate();
    } catch (const ConfigError& e) {
      throw ConfigError("grid point " + p.name + ": " + e.what());
    }
  }
  return points;
}

SweepTable run_sweep(const SweepSpec& spec, const DatasetManifest& manifest, const FeatureSource& features) {
  const std::vector<GridPoint> points = expand_grid(spec);
  if (!manifest.has_split()) throw DataError("sweep requires a manifest with a fixed train/test split");

  SweepTable table;
  for (const auto& axis : spec.axes) table.axis_names.push_back(axis.name);
  table.metric_names = spec.metrics;
  table.rows.resize(points.size());

  std::mutex error_mutex;
  std::optional<std::string> first_error;
  std::size_t first_error_point = points.size();
  int error_kind = 0;

  auto run_point = [&](std::size_t i) {
    const GridPoint& p = points[i];
    std::optional<std::filesystem::path> dir;
    if (!spec.output_dir.empty()) {
      char prefix[16];
      std::snprintf(prefix, sizeof prefix, "%03zu_", i);
      dir = spec.output_dir / "points" / (prefix + p.name);
    }
    try {
      const RunRecord rec = train(manifest, features, p.config, dir);
      SweepRow row{p.name, p.values, {}};
      const MetricsReport& all = rec.final_report(Slice::all);
      for (const auto& m : spec.metrics) row.metrics.push_back(metric_value(all, m));
      table.rows[i] = std::move(row);
    } catch (const std::exception& e) {
      std::lock_guard lock(error_mutex);
      if (i < first_error_point) {
        first_error_point = i;
        first_error = "grid point " + p.name + " failed: " + e.what();
        error_kind = dynamic_cast<const ConfigError*>(&e) ? 2 : dynamic_cast<const NumericError*>(&e) ? 4 : 3;
      }
    }
  };

  const auto n = static_cast<std::int64_t>(points.size());
  if (spec.parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t i = 0; i < n; ++i) run_point(static_cast<std::size_t>(i));
  } else {
    for (std::int64_t i = 0; i < n && !first_error; ++i) run_point(static_cast<std::size_t>(i));
  }
  if (first_error) {
    if (error_kind == 2) throw ConfigError(*first_error);
    if (error_kind == 4) throw NumericError(*first_error);
    throw DataError(*first_error);
  }

  if (!spec.output_dir.empty()) {
    std::filesystem::create_directories(spec.output_dir);
    std::ofstream out(spec.output_dir / "sweep.dat", std::ios::trunc);
    write_sweep_table(out, table);
  }
  return table;
}

void write_sweep_table(std::ostream& out, const SweepTable& table) {
  std::string key;
  for (std::size_t i = 0; i < table.axis_names.size(); ++i) key += (i ? "-" : "") + table.axis_names[i];
  out << (key.empty() ? "Point" : key);
  for (const auto& m : table.metric_names) out << ' ' << m;
  out << '\n';
  char buf[32];
  for (const auto& row : table.rows) {
    std::string k;
    for (std::size_t i = 0; i < row.axis_values.size(); ++i) k += (i ? "/" : "") + row.axis_values[i];
    out << (k.empty() ? row.point : k);
    for (double v : row.metrics) {
      std::snprintf(buf, sizeof buf, " %.6f", v);
      out << buf;
    }
    out << '\n';
  }
}

std::vector<RankEntry> rank_models(const SweepTable& table, std::string_view metric) {
  const auto it = std::find(table.metric_names.begin(), table.metric_names.end(), metric);
  if (it == table.metric_names.end()) throw ConfigError("metric '" + std::string(metric) + "' not in sweep table");
  const auto col = static_cast<std::size_t>(it - table.metric_names.begin());
  std::vector<RankEntry> out;
  for (const auto& row : table.rows) out.push_back({0, row.point, row.metrics.at(col)});
  std::sort(out.begin(), out.end(), [](const RankEntry& a, const RankEntry& b) {
    if (a.value != b.value) return a.value > b.value;
    return a.point < b.point;
  });
  for (std::size_t i = 0; i < out.size(); ++i) out[i].rank = i + 1;
  return out;
}

}  // namespace motif

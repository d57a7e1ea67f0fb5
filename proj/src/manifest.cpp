#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "motif/data.hpp"
#include "motif/errors.hpp"

namespace motif {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(Tag tag) {
  switch (tag) {
    case Tag::red_flag: return "red_flag";
    case Tag::standard: return "standard";
    case Tag::canonical: return "canonical";
  }
  return "standard";
}

std::string_view to_string(SplitRole role) { return role == SplitRole::train ? "train" : "test"; }

Tag parse_tag(std::string_view text) {
  if (text == "red_flag") return Tag::red_flag;
  if (text == "standard") return Tag::standard;
  if (text == "canonical") return Tag::canonical;
  throw DataError("unknown tag '" + std::string(text) + "' (expected red_flag, standard or canonical)");
}

SplitRole parse_split_role(std::string_view text) {
  if (text == "train") return SplitRole::train;
  if (text == "test") return SplitRole::test;
  throw DataError("unknown split '" + std::string(text) + "' (expected train or test)");
}

bool DatasetManifest::has_split() const {
  return !records.empty() && std::all_of(records.begin(), records.end(), [](const auto& r) { return r.split.has_value(); });
}

std::vector<std::string> DatasetManifest::ids_in(SplitRole role) const {
  std::vector<std::string> ids;
  for (const auto& r : records)
    if (r.split == role) ids.push_back(r.image_id);
  return ids;
}

std::vector<std::string> DatasetManifest::all_ids() const {
  std::vector<std::string> ids;
  ids.reserve(records.size());
  for (const auto& r : records) ids.push_back(r.image_id);
  return ids;
}

const AnnotationRecord& DatasetManifest::at(std::string_view image_id) const {
  for (const auto& r : records)
    if (r.image_id == image_id) return r;
  throw DataError("unknown image id '" + std::string(image_id) + "'");
}

std::optional<MotifId> DatasetManifest::motif_index(std::string_view name) const {
  for (std::size_t i = 0; i < motif_names.size(); ++i)
    if (motif_names[i] == name) return static_cast<MotifId>(i);
  return std::nullopt;
}

void DatasetManifest::validate() const {
  if (motif_names.empty()) throw DataError("manifest declares no motifs");
  std::unordered_set<std::string> names(motif_names.begin(), motif_names.end());
  if (names.size() != motif_names.size()) throw DataError("duplicate motif name in manifest header");
  if (records.empty()) throw DataError("empty dataset");

  std::unordered_set<std::string> ids;
  for (const auto& r : records) {
    const std::string where = "record '" + r.image_id + "'";
    if (r.image_id.empty()) throw DataError("record with empty image_id");
    if (!ids.insert(r.image_id).second) throw DataError("duplicate image_id '" + r.image_id + "'");
    if (r.primary.empty()) throw DataError(where + ": empty primary motifs");
    for (const MotifSet* set : {&r.primary, &r.secondary}) {
      if (!std::is_sorted(set->begin(), set->end()) || std::adjacent_find(set->begin(), set->end()) != set->end())
        throw DataError(where + ": motif set not sorted and unique");
      for (MotifId m : *set)
        if (m >= n_classes()) throw DataError(where + ": motif index " + std::to_string(m) + " out of range");
    }
    for (MotifId m : r.secondary)
      if (std::binary_search(r.primary.begin(), r.primary.end(), m))
        throw DataError(where + ": motif '" + motif_names[m] + "' is both primary and secondary");
  }
}

namespace {

MotifSet parse_motif_list(const json& value, const DatasetManifest& m, const std::string& where) {
  if (!value.is_array()) throw DataError(where + ": motif list must be an array");
  MotifSet out;
  for (const auto& item : value) {
    if (!item.is_string()) throw DataError(where + ": motif names must be strings");
    const auto name = item.get<std::string>();
    const auto idx = m.motif_index(name);
    if (!idx) throw DataError(where + ": unknown motif name '" + name + "'");
    out.push_back(*idx);
  }
  std::sort(out.begin(), out.end());
  if (std::adjacent_find(out.begin(), out.end()) != out.end()) throw DataError(where + ": motif listed twice");
  return out;
}

}  // namespace

DatasetManifest parse_manifest(std::istream& in, const std::string& source) {
  DatasetManifest manifest;
  bool have_header = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const std::string where = source + ":" + std::to_string(line_no);
    json doc;
    try {
      doc = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(where + ": parse error: " + e.what());
    }
    if (!doc.is_object()) throw DataError(where + ": expected a JSON object");

    if (!have_header) {
      if (!doc.contains("motifs") || doc.size() != 1 || !doc["motifs"].is_array())
        throw DataError(where + ": first entry must be the header {\"motifs\": [...]}");
      for (const auto& name : doc["motifs"]) {
        if (!name.is_string()) throw DataError(where + ": motif names must be strings");
        manifest.motif_names.push_back(name.get<std::string>());
      }
      have_header = true;
      continue;
    }

    AnnotationRecord rec;
    for (const auto& [key, value] : doc.items()) {
      if (key == "id") {
        if (!value.is_string()) throw DataError(where + ": id must be a string");
        rec.image_id = value.get<std::string>();
      } else if (key == "primary") {
        rec.primary = parse_motif_list(value, manifest, where);
      } else if (key == "secondary") {
        rec.secondary = parse_motif_list(value, manifest, where);
      } else if (key == "tag") {
        if (!value.is_string()) throw DataError(where + ": tag must be a string");
        rec.tag = parse_tag(value.get<std::string>());
      } else if (key == "split") {
        if (!value.is_string()) throw DataError(where + ": split must be a string");
        rec.split = parse_split_role(value.get<std::string>());
      } else {
        throw DataError(where + ": unknown field '" + key + "'");
      }
    }
    if (rec.image_id.empty()) throw DataError(where + ": missing id");
    manifest.records.push_back(std::move(rec));
  }
  if (!have_header) throw DataError(source + ": missing motif header");
  manifest.validate();
  return manifest;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest '" + path.string() + "'");
  return parse_manifest(in, path.string());
}

void write_manifest(std::ostream& out, const DatasetManifest& manifest) {
  ordered_json header;
  header["motifs"] = manifest.motif_names;
  out << header.dump() << '\n';
  for (const auto& r : manifest.records) {
    ordered_json line;
    line["id"] = r.image_id;
    auto names = [&](const MotifSet& set) {
      json arr = json::array();
      for (MotifId m : set) arr.push_back(manifest.motif_names.at(m));
      return arr;
    };
    line["primary"] = names(r.primary);
    line["secondary"] = names(r.secondary);
    line["tag"] = to_string(r.tag);
    if (r.split) line["split"] = to_string(*r.split);
    out << line.dump() << '\n';
  }
}

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write manifest '" + path.string() + "'");
  write_manifest(out, manifest);
}

}  // namespace motif

#pragma once
// File formats: JSON-Lines trial records, text feature tables (one or many
// items per file, optional metadata), and the latent sidecar written by the
// synthetic oracle. All numeric output uses %.17g for exact round-trips and
// none of the formats embeds timestamps, keeping reruns byte-identical.

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bwsnet/core.hpp"
#include "bwsnet/trial.hpp"

namespace bwsnet {

using ordered_json = nlohmann::ordered_json;

// --- Trials: one compact JSON object per line, fixed key order. ---

inline void save_trials(const std::vector<Trial>& trials, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw error("save_trials: cannot open '" + path + "'");
  for (const Trial& t : trials) {
    ordered_json j;
    j["attribute"] = t.attribute;
    j["item_ids"] = t.item_ids;
    j["best"] = t.best;
    j["worst"] = t.worst;
    out << j.dump() << "\n";
  }
  if (!out) throw error("save_trials: write failed for '" + path + "'");
}

inline std::vector<Trial> load_trials(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw error("load_trials: cannot open '" + path + "'");
  std::vector<Trial> trials;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const std::exception& e) {
      throw error("load_trials: bad JSON at " + path + ":" + std::to_string(lineno) + ": " +
                  e.what());
    }
    Trial t;
    try {
      t.attribute = j.at("attribute").get<std::string>();
      t.item_ids = j.at("item_ids").get<std::vector<std::string>>();
      t.best = j.at("best").get<int>();
      t.worst = j.at("worst").get<int>();
    } catch (const std::exception& e) {
      throw error("load_trials: bad record at " + path + ":" + std::to_string(lineno) + ": " +
                  e.what());
    }
    trials.push_back(std::move(t));
  }
  return trials;
}

// --- Feature files: text records, one or many items per file. ---
//
//   bwsnet-features v1
//   item <id>
//   shape <frames> <feature_dim>
//   meta <key> <value>           (zero or more)
//   <frames data lines, feature_dim %.17g values each>

inline void write_feature_record(std::ofstream& out, const std::string& id, const Mat& features,
                                 const std::vector<std::pair<std::string, std::string>>& meta) {
  out << "item " << id << "\n";
  out << "shape " << features.rows << " " << features.cols << "\n";
  for (const auto& [k, v] : meta) out << "meta " << k << " " << v << "\n";
  for (int r = 0; r < features.rows; ++r) {
    for (int c = 0; c < features.cols; ++c) {
      if (c) out << " ";
      out << fmt_g17(features.at(r, c));
    }
    out << "\n";
  }
}

inline void save_features(const std::vector<Item>& items, const std::string& path,
                          const std::vector<std::pair<std::string, std::string>>& meta = {}) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw error("save_features: cannot open '" + path + "'");
  out << "bwsnet-features v1\n";
  for (const Item& it : items) write_feature_record(out, it.id, it.features, meta);
  if (!out) throw error("save_features: write failed for '" + path + "'");
}

inline std::vector<Item> load_features_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw error("load_features: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != "bwsnet-features v1")
    throw error("load_features: bad header in '" + path + "'");

  std::vector<Item> items;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream head(line);
    std::string word, id;
    head >> word >> id;
    if (word != "item" || id.empty())
      throw error("load_features: expected 'item <id>' in '" + path + "'");
    if (!std::getline(in, line)) throw error("load_features: truncated record in '" + path + "'");
    std::istringstream shape_line(line);
    int rows = 0, cols = 0;
    shape_line >> word >> rows >> cols;
    if (word != "shape" || rows <= 0 || cols <= 0)
      throw error("load_features: bad shape line for item '" + id + "' in '" + path + "'");

    // Skip metadata lines; the first non-meta line is the first data row.
    std::string first_data;
    while (std::getline(in, line)) {
      if (line.rfind("meta ", 0) == 0) continue;
      first_data = line;
      break;
    }
    Item item;
    item.id = id;
    item.features = Mat(rows, cols);
    for (int r = 0; r < rows; ++r) {
      const std::string& src = (r == 0) ? first_data : line;
      if (r > 0 && !std::getline(in, line))
        throw error("load_features: truncated data for item '" + id + "' in '" + path + "'");
      std::istringstream row((r == 0) ? src : line);
      for (int c = 0; c < cols; ++c)
        if (!(row >> item.features.at(r, c)))
          throw error("load_features: short data row for item '" + id + "' in '" + path + "'");
    }
    items.push_back(std::move(item));
  }
  return items;
}

// Accepts either a multi-record feature file or a directory of *.feat files
// (loaded in sorted filename order).
inline std::vector<Item> load_items(const std::string& path) {
  namespace fs = std::filesystem;
  if (fs::is_directory(path)) {
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(path))
      if (entry.is_regular_file() && entry.path().extension() == ".feat")
        files.push_back(entry.path().string());
    std::sort(files.begin(), files.end());
    std::vector<Item> items;
    for (const std::string& f : files) {
      std::vector<Item> part = load_features_file(f);
      for (Item& it : part) items.push_back(std::move(it));
    }
    return items;
  }
  return load_features_file(path);
}

// --- Latent sidecar: TSV item_id <TAB> latent. Written by the oracle,
// read only by analysis/evaluation code, never by training. ---

inline void save_latents(const std::vector<Item>& items, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw error("save_latents: cannot open '" + path + "'");
  for (const Item& it : items)
    if (it.latent.has_value()) out << it.id << "\t" << fmt_g17(*it.latent) << "\n";
  if (!out) throw error("save_latents: write failed for '" + path + "'");
}

inline std::map<std::string, double> load_latents(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw error("load_latents: cannot open '" + path + "'");
  std::map<std::string, double> latents;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::size_t tab = line.find('\t');
    if (tab == std::string::npos) throw error("load_latents: bad line in '" + path + "'");
    latents[line.substr(0, tab)] = std::stod(line.substr(tab + 1));
  }
  return latents;
}

}  // namespace bwsnet

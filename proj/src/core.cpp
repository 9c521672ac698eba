#include "curator/core.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace curator {

using nlohmann::json;

std::string format_real(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

const Instance& Dataset::instance(const std::string& id) const {
  auto it = instances.find(id);
  if (it == instances.end()) fail(ErrorKind::Reference, "unknown instance id '" + id + "'");
  return it->second;
}

void Dataset::validate() const {
  if (dimensionality == 0) fail(ErrorKind::Format, "dataset dimensionality must be positive");
  for (const auto& [id, inst] : instances) {
    if (inst.id != id) fail(ErrorKind::Format, "instance map key mismatch for '" + id + "'");
    if (inst.features.size() != dimensionality)
      fail(ErrorKind::Format, "instance '" + id + "' has " + std::to_string(inst.features.size()) +
                                  " features, expected " + std::to_string(dimensionality));
    for (double v : inst.features)
      if (!std::isfinite(v)) fail(ErrorKind::Format, "instance '" + id + "' has a non-finite feature");
  }
  std::set<std::string> seen;
  for (const auto& [bag_id, bag] : bags) {
    if (bag.id != bag_id) fail(ErrorKind::Format, "bag map key mismatch for '" + bag_id + "'");
    if (bag.instances.empty()) fail(ErrorKind::Format, "bag '" + bag_id + "' is empty");
    if (bag.label && *bag.label != 1 && *bag.label != -1)
      fail(ErrorKind::Format, "bag '" + bag_id + "' label must be +1 or -1");
    std::set<std::string> local;
    for (const auto& iid : bag.instances) {
      if (!instances.count(iid))
        fail(ErrorKind::Reference, "bag '" + bag_id + "' references unknown instance '" + iid + "'");
      if (!local.insert(iid).second)
        fail(ErrorKind::Format, "bag '" + bag_id + "' lists instance '" + iid + "' twice");
      if (!seen.insert(iid).second)
        fail(ErrorKind::Format, "instance '" + iid + "' belongs to more than one bag");
    }
  }
  if (seen.size() != instances.size())
    fail(ErrorKind::Format, "dataset has instances not referenced by any bag");
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_real(const std::string& text, std::size_t row) {
  try {
    std::size_t used = 0;
    double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument("trailing garbage");
    return v;
  } catch (const std::exception&) {
    fail(ErrorKind::Format, "row " + std::to_string(row) + ": bad numeric field '" + text + "'");
  }
}

void check_id_charset(const std::string& id) {
  if (id.empty()) fail(ErrorKind::Format, "empty id");
  if (id.find_first_of(",\n\r\"") != std::string::npos)
    fail(ErrorKind::Format, "id '" + id + "' contains a character reserved by the CSV format");
}

std::vector<Instance> read_feature_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open features file '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::Format, "features file '" + path.string() + "' is empty");
  auto header = split_csv_line(line);
  if (header.empty() || header[0] != "id")
    fail(ErrorKind::Format, "features header must start with 'id'");
  const std::size_t dim = header.size() - 1;
  if (dim == 0) fail(ErrorKind::Format, "features header declares zero feature columns");

  std::vector<Instance> rows;
  std::size_t row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv_line(line);
    if (fields.size() != dim + 1)
      fail(ErrorKind::Format, "row " + std::to_string(row_no) + " (id '" + fields[0] + "') has " +
                                  std::to_string(fields.size() - 1) + " features, expected " +
                                  std::to_string(dim));
    Instance inst;
    inst.id = fields[0];
    check_id_charset(inst.id);
    inst.features.reserve(dim);
    for (std::size_t i = 1; i < fields.size(); ++i) inst.features.push_back(parse_real(fields[i], row_no));
    rows.push_back(std::move(inst));
  }
  return rows;
}

void write_feature_csv(const std::vector<Instance>& rows, std::size_t dim,
                       const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write features file '" + path.string() + "'");
  out << "id";
  for (std::size_t i = 1; i <= dim; ++i) out << ",f_" << i;
  out << "\n";
  for (const auto& inst : rows) {
    check_id_charset(inst.id);
    out << inst.id;
    for (double v : inst.features) out << ',' << format_real(v);
    out << "\n";
  }
  if (!out) fail(ErrorKind::Io, "write failed for '" + path.string() + "'");
}

}  // namespace

std::vector<Instance> load_feature_rows(const std::filesystem::path& path) {
  return read_feature_csv(path);
}

void save_feature_rows(const std::vector<Instance>& rows, const std::filesystem::path& path) {
  if (rows.empty()) fail(ErrorKind::Parameter, "refusing to write an empty feature file");
  write_feature_csv(rows, rows.front().features.size(), path);
}

Dataset load_dataset(const std::filesystem::path& features_path,
                     const std::filesystem::path& manifest_path) {
  auto rows = read_feature_csv(features_path);

  std::ifstream in(manifest_path);
  if (!in) fail(ErrorKind::Io, "cannot open manifest '" + manifest_path.string() + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    fail(ErrorKind::Format, "manifest '" + manifest_path.string() + "': " + e.what());
  }
  if (!doc.contains("dimensionality") || !doc.contains("bags"))
    fail(ErrorKind::Format, "manifest missing 'dimensionality' or 'bags'");

  Dataset ds;
  ds.dimensionality = doc.at("dimensionality").get<std::size_t>();
  for (auto& inst : rows) {
    if (inst.features.size() != ds.dimensionality)
      fail(ErrorKind::Format, "instance '" + inst.id + "' has " + std::to_string(inst.features.size()) +
                                  " features but manifest declares d=" + std::to_string(ds.dimensionality));
    auto id = inst.id;
    if (!ds.instances.emplace(id, std::move(inst)).second)
      fail(ErrorKind::Format, "duplicate instance id '" + id + "' in features file");
  }
  if (ds.instances.size() != rows.size())
    fail(ErrorKind::Format, "instance rows were dropped during load");

  for (const auto& jb : doc.at("bags")) {
    Bag bag;
    bag.id = jb.at("id").get<std::string>();
    bag.query_text = jb.value("query_text", std::string{});
    if (jb.contains("label") && !jb.at("label").is_null()) bag.label = jb.at("label").get<int>();
    for (const auto& iid : jb.at("instances")) bag.instances.push_back(iid.get<std::string>());
    for (const auto& iid : bag.instances)
      if (!ds.instances.count(iid))
        fail(ErrorKind::Reference, "bag '" + bag.id + "' references unknown instance '" + iid + "'");
    auto id = bag.id;
    if (!ds.bags.emplace(id, std::move(bag)).second)
      fail(ErrorKind::Format, "duplicate bag id '" + id + "' in manifest");
  }
  ds.validate();
  return ds;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& features_path,
                  const std::filesystem::path& manifest_path) {
  dataset.validate();

  std::vector<Instance> rows;
  rows.reserve(dataset.instances.size());
  for (const auto& [id, inst] : dataset.instances) rows.push_back(inst);
  write_feature_csv(rows, dataset.dimensionality, features_path);

  json doc;
  doc["dimensionality"] = dataset.dimensionality;
  doc["bags"] = json::array();
  for (const auto& [id, bag] : dataset.bags) {
    json jb;
    jb["id"] = bag.id;
    jb["query_text"] = bag.query_text;
    if (bag.label)
      jb["label"] = *bag.label;
    else
      jb["label"] = nullptr;
    jb["instances"] = bag.instances;
    doc["bags"].push_back(std::move(jb));
  }
  std::ofstream out(manifest_path, std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write manifest '" + manifest_path.string() + "'");
  out << doc.dump(2) << "\n";
  if (!out) fail(ErrorKind::Io, "write failed for '" + manifest_path.string() + "'");
}

}  // namespace curator

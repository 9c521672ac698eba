#include "curator/semantic_distance.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"

namespace curator {

using nlohmann::json;

CountTable::CountTable(std::uint64_t total, std::map<std::string, std::uint64_t> singles,
                       std::map<std::pair<std::string, std::string>, std::uint64_t> pairs)
    : total_(total), singles_(std::move(singles)) {
  for (const auto& [k, v] : pairs) pairs_[key(k.first, k.second)] = v;
}

std::pair<std::string, std::string> CountTable::key(const std::string& a, const std::string& b) {
  return a <= b ? std::make_pair(a, b) : std::make_pair(b, a);
}

std::uint64_t CountTable::single(const std::string& term) const {
  auto it = singles_.find(term);
  if (it == singles_.end()) fail(ErrorKind::Lookup, "no single count for term '" + term + "'");
  return it->second;
}

std::uint64_t CountTable::pair(const std::string& a, const std::string& b) const {
  auto it = pairs_.find(key(a, b));
  if (it == pairs_.end())
    fail(ErrorKind::Lookup, "no pair count for terms '" + a + "' / '" + b + "'");
  return it->second;
}

bool CountTable::has_single(const std::string& term) const { return singles_.count(term) > 0; }

bool CountTable::has_pair(const std::string& a, const std::string& b) const {
  return pairs_.count(key(a, b)) > 0;
}

void CountTable::set_single(const std::string& term, std::uint64_t count) {
  singles_[term] = count;
}

void CountTable::set_pair(const std::string& a, const std::string& b, std::uint64_t count) {
  pairs_[key(a, b)] = count;
}

CountTable CountTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open count table '" + path.string() + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    fail(ErrorKind::Format, "count table '" + path.string() + "': " + e.what());
  }
  CountTable table;
  table.total_ = doc.at("total").get<std::uint64_t>();
  if (table.total_ == 0) fail(ErrorKind::Format, "count table total must be positive");
  for (auto& [term, count] : doc.at("singles").items())
    table.singles_[term] = count.get<std::uint64_t>();
  for (const auto& p : doc.at("pairs"))
    table.set_pair(p.at("a").get<std::string>(), p.at("b").get<std::string>(),
                   p.at("count").get<std::uint64_t>());
  return table;
}

void CountTable::save(const std::filesystem::path& path) const {
  json doc;
  doc["total"] = total_;
  doc["singles"] = json::object();
  for (const auto& [term, count] : singles_) doc["singles"][term] = count;
  doc["pairs"] = json::array();
  for (const auto& [k, count] : pairs_)
    doc["pairs"].push_back({{"a", k.first}, {"b", k.second}, {"count", count}});
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write count table '" + path.string() + "'");
  out << doc.dump(2) << "\n";
}

double ngd(const CountTable& table, const std::string& x, const std::string& y) {
  const std::uint64_t fx = table.single(x);
  const std::uint64_t fy = table.single(y);
  const std::uint64_t fxy = table.pair(x, y);
  if (fx < 1 || fy < 1 || fxy < 1)
    fail(ErrorKind::Domain, "zero count for '" + x + "' / '" + y + "'");
  if (table.total() <= std::max(fx, fy))
    fail(ErrorKind::Domain, "corpus total must exceed every single count");

  const double lx = std::log(static_cast<double>(fx));
  const double ly = std::log(static_cast<double>(fy));
  const double lxy = std::log(static_cast<double>(fxy));
  const double ln = std::log(static_cast<double>(table.total()));
  const double value = (std::max(lx, ly) - lxy) / (ln - std::min(lx, ly));
  return std::max(value, 0.0);
}

void semantic_graph(const CountTable& table, const std::string& target,
                    std::vector<CandidateQuery>& candidates) {
  for (auto& cand : candidates) {
    if (!table.has_single(cand.phrase) || !table.has_single(target) ||
        !table.has_pair(cand.phrase, target)) {
      if (!cand.note.empty()) cand.note += ";";
      cand.note += "no-count";
      continue;
    }
    cand.semantic_distance = ngd(table, cand.phrase, target);
  }
}

}  // namespace curator

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "curator/error.hpp"
#include "curator/query_discovery.hpp"

namespace curator {

/// Single and joint occurrence counts over a corpus of `total` pages.
/// Pair lookup is order-insensitive. Counts are used as given; joint
/// counts exceeding both singles merely clamp the distance at zero.
class CountTable {
 public:
  CountTable() = default;
  CountTable(std::uint64_t total, std::map<std::string, std::uint64_t> singles,
             std::map<std::pair<std::string, std::string>, std::uint64_t> pairs);

  static CountTable load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::uint64_t total() const { return total_; }
  std::uint64_t single(const std::string& term) const;                       // throws Lookup
  std::uint64_t pair(const std::string& a, const std::string& b) const;      // throws Lookup
  bool has_single(const std::string& term) const;
  bool has_pair(const std::string& a, const std::string& b) const;

  void set_single(const std::string& term, std::uint64_t count);
  void set_pair(const std::string& a, const std::string& b, std::uint64_t count);
  void set_total(std::uint64_t total) { total_ = total; }

 private:
  static std::pair<std::string, std::string> key(const std::string& a, const std::string& b);

  std::uint64_t total_ = 0;
  std::map<std::string, std::uint64_t> singles_;
  std::map<std::pair<std::string, std::string>, std::uint64_t> pairs_;
};

// Normalized distance from occurrence counts, natural log, clamped at 0.
double ngd(const CountTable& table, const std::string& x, const std::string& y);

// Sets semantic_distance = ngd(phrase, target) on every candidate; candidates
// with missing counts are annotated "no-count" and left unscored.
void semantic_graph(const CountTable& table, const std::string& target,
                    std::vector<CandidateQuery>& candidates);

}  // namespace curator

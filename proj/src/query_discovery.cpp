#include "curator/query_discovery.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>

#include "json.hpp"

namespace curator {

using nlohmann::json;

Pos parse_pos(std::string_view text) {
  if (text == "NOUN") return Pos::Noun;
  if (text == "VERB") return Pos::Verb;
  if (text == "ADJECTIVE" || text == "ADJ") return Pos::Adjective;
  if (text == "ADVERB" || text == "ADV") return Pos::Adverb;
  return Pos::Other;
}

std::string_view pos_name(Pos pos) {
  switch (pos) {
    case Pos::Noun: return "NOUN";
    case Pos::Verb: return "VERB";
    case Pos::Adjective: return "ADJECTIVE";
    case Pos::Adverb: return "ADVERB";
    case Pos::Other: return "OTHER";
  }
  return "OTHER";
}

std::string_view verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Pending: return "pending";
    case Verdict::RejectedNonSalient: return "rejected_non_salient";
    case Verdict::RejectedIrrelevant: return "rejected_irrelevant";
    case Verdict::Accepted: return "accepted";
  }
  return "pending";
}

Verdict parse_verdict(std::string_view text) {
  if (text == "pending") return Verdict::Pending;
  if (text == "rejected_non_salient") return Verdict::RejectedNonSalient;
  if (text == "rejected_irrelevant") return Verdict::RejectedIrrelevant;
  if (text == "accepted") return Verdict::Accepted;
  fail(ErrorKind::Format, "unknown verdict '" + std::string(text) + "'");
}

void apply_verdict(CandidateQuery& candidate, Verdict verdict) {
  if (verdict == Verdict::Pending)
    fail(ErrorKind::Parameter, "cannot reset '" + candidate.phrase + "' to pending");
  if (candidate.verdict != Verdict::Pending)
    fail(ErrorKind::Parameter, "candidate '" + candidate.phrase + "' already decided");
  if (verdict == Verdict::RejectedNonSalient && !candidate.salience_score)
    fail(ErrorKind::Parameter,
         "candidate '" + candidate.phrase + "' rejected as non-salient without a salience score");
  candidate.verdict = verdict;
}

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

bool parse_count(const std::string& text, std::uint64_t& out) {
  if (text.empty()) return false;
  std::uint64_t v = 0;
  for (char c : text) {
    if (c < '0' || c > '9') return false;
    v = v * 10 + static_cast<std::uint64_t>(c - '0');
  }
  out = v;
  return true;
}

}  // namespace

ParsedCorpus parse_ngram_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open ngram corpus '" + path.string() + "'");

  ParsedCorpus result;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == '\t') {
        fields.push_back(line.substr(start, i - start));
        start = i + 1;
      }
    }
    std::uint64_t count = 0;
    if (fields.size() != 5 || trim(fields[0]).empty() || trim(fields[2]).empty() ||
        !parse_count(trim(fields[4]), count)) {
      ++result.malformed_lines;
      continue;
    }
    NgramEntry entry;
    entry.head = {trim(fields[0]), parse_pos(trim(fields[1]))};
    entry.modifier = {trim(fields[2]), parse_pos(trim(fields[3]))};
    entry.match_count = count;
    result.entries.push_back(std::move(entry));
  }
  if (result.entries.empty())
    fail(ErrorKind::Format, "ngram corpus '" + path.string() + "' contains no usable entries");
  return result;
}

std::vector<CandidateQuery> discover_candidates(std::span<const NgramEntry> corpus,
                                                const TaggedTerm& target) {
  if (corpus.empty()) fail(ErrorKind::Parameter, "empty ngram corpus");
  if (trim(target.text).empty()) fail(ErrorKind::Parameter, "empty target term");

  const std::string target_lc = lower(target.text);
  std::map<std::string, CandidateQuery> by_phrase;
  for (const auto& entry : corpus) {
    if (lower(entry.head.text) != target_lc || entry.head.pos != target.pos) continue;
    if (entry.modifier.pos == Pos::Other) continue;
    std::string phrase = entry.modifier.text + " " + target.text;
    auto [it, inserted] = by_phrase.try_emplace(phrase);
    if (inserted) {
      it->second.phrase = phrase;
      it->second.modifier = entry.modifier;
      it->second.corpus_count = entry.match_count;
    } else {
      it->second.corpus_count += entry.match_count;
    }
  }

  std::vector<CandidateQuery> out;
  out.reserve(by_phrase.size());
  for (auto& [phrase, cand] : by_phrase) out.push_back(std::move(cand));
  std::sort(out.begin(), out.end(), [](const CandidateQuery& a, const CandidateQuery& b) {
    if (a.corpus_count != b.corpus_count) return a.corpus_count > b.corpus_count;
    return a.phrase < b.phrase;
  });
  return out;
}

namespace {

json candidate_to_json(const CandidateQuery& c) {
  json j;
  j["phrase"] = c.phrase;
  j["modifier"] = {{"text", c.modifier.text}, {"pos", std::string(pos_name(c.modifier.pos))}};
  j["corpus_count"] = c.corpus_count;
  j["salience_score"] = c.salience_score ? json(*c.salience_score) : json(nullptr);
  j["semantic_distance"] = c.semantic_distance ? json(*c.semantic_distance) : json(nullptr);
  j["visual_distance"] = c.visual_distance ? json(*c.visual_distance) : json(nullptr);
  j["verdict"] = std::string(verdict_name(c.verdict));
  j["note"] = c.note;
  return j;
}

CandidateQuery candidate_from_json(const json& j) {
  CandidateQuery c;
  c.phrase = j.at("phrase").get<std::string>();
  c.modifier.text = j.at("modifier").at("text").get<std::string>();
  c.modifier.pos = parse_pos(j.at("modifier").at("pos").get<std::string>());
  c.corpus_count = j.at("corpus_count").get<std::uint64_t>();
  if (!j.at("salience_score").is_null()) c.salience_score = j.at("salience_score").get<double>();
  if (!j.at("semantic_distance").is_null()) c.semantic_distance = j.at("semantic_distance").get<double>();
  if (!j.at("visual_distance").is_null()) c.visual_distance = j.at("visual_distance").get<double>();
  c.verdict = parse_verdict(j.at("verdict").get<std::string>());
  c.note = j.value("note", std::string{});
  return c;
}

}  // namespace

void save_candidates(const std::vector<CandidateQuery>& candidates,
                     const std::filesystem::path& path) {
  json doc = json::array();
  for (const auto& c : candidates) doc.push_back(candidate_to_json(c));
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write candidates file '" + path.string() + "'");
  out << doc.dump(2) << "\n";
}

std::vector<CandidateQuery> load_candidates(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open candidates file '" + path.string() + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    fail(ErrorKind::Format, "candidates file '" + path.string() + "': " + e.what());
  }
  std::vector<CandidateQuery> out;
  for (const auto& j : doc) out.push_back(candidate_from_json(j));
  return out;
}

}  // namespace curator

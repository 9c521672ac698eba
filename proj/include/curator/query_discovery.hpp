#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "curator/error.hpp"

namespace curator {

// The four modifier classes admitted as candidates; anything else a
// corpus line may carry (determiners, prepositions, ...) maps to Other.
enum class Pos { Noun, Verb, Adjective, Adverb, Other };

Pos parse_pos(std::string_view text);
std::string_view pos_name(Pos pos);

struct TaggedTerm {
  std::string text;
  Pos pos = Pos::Noun;
};

struct NgramEntry {
  TaggedTerm head;
  TaggedTerm modifier;
  std::uint64_t match_count = 0;
};

enum class Verdict { Pending, RejectedNonSalient, RejectedIrrelevant, Accepted };

std::string_view verdict_name(Verdict v);
Verdict parse_verdict(std::string_view text);

struct CandidateQuery {
  std::string phrase;  // modifier + target, space joined
  TaggedTerm modifier;
  std::uint64_t corpus_count = 0;
  std::optional<double> salience_score;
  std::optional<double> semantic_distance;
  std::optional<double> visual_distance;
  Verdict verdict = Verdict::Pending;
  std::string note;  // non-fatal annotations: "no-count", "too-few-images", ...
};

// Only Pending -> Rejected*/Accepted is legal; anything else throws.
void apply_verdict(CandidateQuery& candidate, Verdict verdict);

struct ParsedCorpus {
  std::vector<NgramEntry> entries;
  std::size_t malformed_lines = 0;
};

// TSV: head_text \t head_pos \t modifier_text \t modifier_pos \t match_count.
// Malformed lines are skipped and counted; a file with no usable line is an error.
ParsedCorpus parse_ngram_corpus(const std::filesystem::path& path);

// Entries whose head matches the target (case-insensitive text, exact POS)
// and whose modifier is one of the four admitted classes, deduplicated by
// phrase with counts summed, sorted by count descending then phrase.
std::vector<CandidateQuery> discover_candidates(std::span<const NgramEntry> corpus,
                                                const TaggedTerm& target);

void save_candidates(const std::vector<CandidateQuery>& candidates,
                     const std::filesystem::path& path);
std::vector<CandidateQuery> load_candidates(const std::filesystem::path& path);

}  // namespace curator

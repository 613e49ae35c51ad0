#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace pivotal {

enum class KeywordCategory { Metacognitive, Structural, VisualReexamination };

const char* to_string(KeywordCategory category);

struct LexiconEntry {
    std::string phrase;  // lowercase, single-spaced, non-empty
    KeywordCategory category = KeywordCategory::Metacognitive;
};

/// The pivotal-keyword lexicon: phrases that signal cognitive uncertainty,
/// structural transitions, or visual re-examination. Immutable after
/// construction and safe to share across threads.
class PivotalLexicon {
  public:
    PivotalLexicon() = default;

    /// Validates invariants (lowercase, non-empty, normalized whitespace,
    /// no duplicates) and throws Error(LexiconMalformed) on failure.
    static PivotalLexicon from_entries(std::vector<LexiconEntry> entries);

    const std::vector<LexiconEntry>& entries() const { return entries_; }
    bool empty() const { return entries_.empty(); }
    std::size_t size() const { return entries_.size(); }
    bool contains(std::string_view phrase) const;

  private:
    std::vector<LexiconEntry> entries_;
};

struct MatchResult {
    bool matched = false;
    std::vector<std::string> phrases;  // distinct matched phrases, lexicon order
    int occurrences = 0;               // total match positions across phrases
};

/// The built-in lexicon (also shipped as data/pivotal_lexicon.tsv).
PivotalLexicon load_default_lexicon();

/// Parses the `category<TAB>phrase` line format; `#` starts a comment line.
/// Categories: metacognitive, structural, visual_reexamination.
PivotalLexicon parse_lexicon_tsv(std::string_view text);

PivotalLexicon load_lexicon_file(const std::filesystem::path& path);

/// Reports every lexicon phrase found in the sentence. Matching is
/// case-insensitive, collapses whitespace runs inside multi-word phrases, and
/// requires word boundaries at both ends: a letter or digit adjacent to the
/// candidate blocks the match, any other character (punctuation included)
/// does not.
MatchResult contains_keyword(std::string_view sentence, const PivotalLexicon& lex);

/// Same matching semantics against an ad-hoc phrase list.
MatchResult match_phrases(std::string_view text, const std::vector<std::string>& phrases);

}  // namespace pivotal

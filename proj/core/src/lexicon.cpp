#include "pivotal/lexicon.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include "pivotal/error.hpp"
#include "text_util.hpp"

namespace pivotal {

namespace detail {
// Defined in the generated embedded_data translation unit.
extern const char* const kDefaultLexiconTsv;
}  // namespace detail

const char* to_string(KeywordCategory category) {
    switch (category) {
        case KeywordCategory::Metacognitive: return "metacognitive";
        case KeywordCategory::Structural: return "structural";
        case KeywordCategory::VisualReexamination: return "visual_reexamination";
    }
    return "unknown";
}

namespace {

bool is_lower_word_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
}

void validate_phrase(const std::string& phrase) {
    if (phrase.empty()) {
        throw Error(ErrorCode::LexiconMalformed, "empty phrase");
    }
    if (phrase.front() == ' ' || phrase.back() == ' ') {
        throw Error(ErrorCode::LexiconMalformed, "phrase has leading/trailing space: '" + phrase + "'");
    }
    for (std::size_t i = 0; i < phrase.size(); ++i) {
        const char c = phrase[i];
        if (c >= 'A' && c <= 'Z') {
            throw Error(ErrorCode::LexiconMalformed, "phrase not lowercase: '" + phrase + "'");
        }
        if (pivotal::detail::is_ascii_space(c)) {
            if (c != ' ') {
                throw Error(ErrorCode::LexiconMalformed,
                            "phrase contains non-space whitespace: '" + phrase + "'");
            }
            if (i + 1 < phrase.size() && phrase[i + 1] == ' ') {
                throw Error(ErrorCode::LexiconMalformed,
                            "phrase contains a double space: '" + phrase + "'");
            }
        }
    }
}

}  // namespace

PivotalLexicon PivotalLexicon::from_entries(std::vector<LexiconEntry> entries) {
    std::unordered_set<std::string> seen;
    for (const auto& entry : entries) {
        validate_phrase(entry.phrase);
        if (!seen.insert(entry.phrase).second) {
            throw Error(ErrorCode::LexiconMalformed, "duplicate phrase: '" + entry.phrase + "'");
        }
    }
    PivotalLexicon lex;
    lex.entries_ = std::move(entries);
    return lex;
}

bool PivotalLexicon::contains(std::string_view phrase) const {
    for (const auto& entry : entries_) {
        if (entry.phrase == phrase) {
            return true;
        }
    }
    return false;
}

PivotalLexicon parse_lexicon_tsv(std::string_view text) {
    std::vector<LexiconEntry> entries;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t eol = text.find('\n', pos);
        std::string_view line =
            text.substr(pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        if (line.empty() || line.front() == '#') {
            continue;
        }
        const std::size_t tab = line.find('\t');
        if (tab == std::string_view::npos) {
            throw Error(ErrorCode::LexiconMalformed,
                        "line " + std::to_string(line_no) + ": expected category<TAB>phrase");
        }
        const std::string_view category = line.substr(0, tab);
        const std::string_view phrase = line.substr(tab + 1);
        LexiconEntry entry;
        entry.phrase = std::string(phrase);
        if (category == "metacognitive") {
            entry.category = KeywordCategory::Metacognitive;
        } else if (category == "structural") {
            entry.category = KeywordCategory::Structural;
        } else if (category == "visual_reexamination") {
            entry.category = KeywordCategory::VisualReexamination;
        } else {
            throw Error(ErrorCode::LexiconMalformed, "line " + std::to_string(line_no) +
                                                         ": unknown category '" +
                                                         std::string(category) + "'");
        }
        entries.push_back(std::move(entry));
    }
    return PivotalLexicon::from_entries(std::move(entries));
}

PivotalLexicon load_default_lexicon() {
    return parse_lexicon_tsv(detail::kDefaultLexiconTsv);
}

PivotalLexicon load_lexicon_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot read lexicon file: " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_lexicon_tsv(buffer.str());
}

namespace {

struct FoldedText {
    std::string folded;  // case-folded, whitespace-collapsed
};

// All phrase occurrences in the folded text, word-boundary checked: a letter
// or digit immediately before or after the candidate blocks the match.
int count_occurrences(const std::string& folded, const std::string& phrase) {
    int count = 0;
    std::size_t from = 0;
    while (true) {
        const std::size_t hit = folded.find(phrase, from);
        if (hit == std::string::npos) {
            break;
        }
        const bool left_ok = hit == 0 || !is_lower_word_char(folded[hit - 1]);
        const std::size_t after = hit + phrase.size();
        const bool right_ok = after == folded.size() || !is_lower_word_char(folded[after]);
        if (left_ok && right_ok) {
            ++count;
        }
        from = hit + 1;
    }
    return count;
}

}  // namespace

MatchResult match_phrases(std::string_view text, const std::vector<std::string>& phrases) {
    MatchResult result;
    const std::string folded = detail::fold_and_collapse(text);
    for (const auto& phrase : phrases) {
        const int n = count_occurrences(folded, phrase);
        if (n > 0) {
            result.matched = true;
            result.phrases.push_back(phrase);
            result.occurrences += n;
        }
    }
    return result;
}

MatchResult contains_keyword(std::string_view sentence, const PivotalLexicon& lex) {
    MatchResult result;
    const std::string folded = detail::fold_and_collapse(sentence);
    for (const auto& entry : lex.entries()) {
        const int n = count_occurrences(folded, entry.phrase);
        if (n > 0) {
            result.matched = true;
            result.phrases.push_back(entry.phrase);
            result.occurrences += n;
        }
    }
    return result;
}

}  // namespace pivotal

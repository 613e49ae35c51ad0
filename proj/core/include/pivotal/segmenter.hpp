#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pivotal/trace.hpp"

namespace pivotal {

/// One sentence of reasoning text. Offsets are byte offsets into the input
/// passed to segment_sentences (or into the full response when returned by
/// preceding_sentence).
struct SentenceUnit {
    std::string text;
    std::size_t start = 0;
    std::size_t end = 0;
};

/// Splits reasoning text into sentences.
///
/// A sentence ends after a run of terminator punctuation (`.` `?` `!` and the
/// CJK forms `。` `？` `！`) or at a newline; punctuation terminators are part
/// of the sentence, newlines are not. A trailing fragment without a
/// terminator forms its own sentence. Whitespace-only candidates are dropped.
/// No abbreviation handling: "e.g." splits like any other period.
std::vector<SentenceUnit> segment_sentences(std::string_view reasoning_text);

/// Returns the sentence immediately preceding perception `perception_index`:
/// the last sentence of the reasoning text between the previous tag and this
/// perception's open tag. Absent when that text is empty or whitespace (for
/// example, two adjacent perceptions). Offsets are relative to the response.
/// Throws Error(IndexOutOfRange) when the index is not a valid perception.
std::optional<SentenceUnit> preceding_sentence(const ParsedTrace& parsed,
                                               std::size_t perception_index);

}  // namespace pivotal

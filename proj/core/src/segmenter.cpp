#include "pivotal/segmenter.hpp"

#include "pivotal/error.hpp"
#include "text_util.hpp"

namespace pivotal {

using detail::decode_utf8;
using detail::is_ascii_space;
using detail::is_terminator_cp;

std::vector<SentenceUnit> segment_sentences(std::string_view text) {
    std::vector<SentenceUnit> sentences;
    std::size_t pos = 0;
    std::size_t start = std::string_view::npos;  // first non-whitespace of the candidate
    std::size_t last_content = 0;                // one past the last non-whitespace byte

    auto close = [&](std::size_t end) {
        if (start != std::string_view::npos && end > start) {
            sentences.push_back({std::string(text.substr(start, end - start)), start, end});
        }
        start = std::string_view::npos;
    };

    while (pos < text.size()) {
        const char c = text[pos];
        if (c == '\n') {
            close(last_content);
            ++pos;
            continue;
        }
        if (is_ascii_space(c)) {
            ++pos;
            continue;
        }
        const auto cp = decode_utf8(text, pos);
        if (start == std::string_view::npos) {
            start = pos;
        }
        if (is_terminator_cp(cp.value)) {
            // Attach the whole run of terminator punctuation ("?!", "...").
            std::size_t end = pos + cp.length;
            while (end < text.size()) {
                const auto next = decode_utf8(text, end);
                if (!is_terminator_cp(next.value)) {
                    break;
                }
                end += next.length;
            }
            close(end);
            last_content = end;
            pos = end;
            continue;
        }
        pos += cp.length;
        last_content = pos;
    }
    close(last_content);
    return sentences;
}

std::optional<SentenceUnit> preceding_sentence(const ParsedTrace& parsed,
                                               std::size_t perception_index) {
    if (perception_index >= parsed.perceptions.size()) {
        throw Error(ErrorCode::IndexOutOfRange,
                    "perception index " + std::to_string(perception_index) + " out of range (m=" +
                        std::to_string(parsed.perceptions.size()) + ")");
    }
    const auto& occ = parsed.perceptions[perception_index];
    auto sentences = segment_sentences(parsed.preceding_text(perception_index));
    if (sentences.empty()) {
        return std::nullopt;
    }
    SentenceUnit last = std::move(sentences.back());
    last.start += occ.preceding_begin;  // rebase into response coordinates
    last.end += occ.preceding_begin;
    return last;
}

}  // namespace pivotal

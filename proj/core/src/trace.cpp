#include "pivotal/trace.hpp"

#include <algorithm>
#include <array>
#include <cassert>

#include "pivotal/error.hpp"
#include "text_util.hpp"

namespace pivotal {

namespace {

enum class TagKind { ThinkOpen, ThinkClose, PerceptionOpen, PerceptionClose };

struct TagEvent {
    TagKind kind;
    std::size_t begin;
    std::size_t end;
};

// Left-to-right greedy scan for the four tag literals, longest first so a
// literal that happens to prefix another cannot shadow it.
std::vector<TagEvent> scan_tags(std::string_view text, const TagConfig& tags) {
    struct Literal {
        TagKind kind;
        std::string_view text;
    };
    std::array<Literal, 4> literals{{
        {TagKind::ThinkOpen, tags.think_open},
        {TagKind::ThinkClose, tags.think_close},
        {TagKind::PerceptionOpen, tags.perception_open},
        {TagKind::PerceptionClose, tags.perception_close},
    }};
    std::sort(literals.begin(), literals.end(),
              [](const Literal& a, const Literal& b) { return a.text.size() > b.text.size(); });
    assert(!literals.back().text.empty());

    std::vector<TagEvent> events;
    std::size_t pos = 0;
    while (pos < text.size()) {
        bool matched = false;
        for (const auto& lit : literals) {
            if (text.compare(pos, lit.text.size(), lit.text) == 0) {
                events.push_back({lit.kind, pos, pos + lit.text.size()});
                pos += lit.text.size();
                matched = true;
                break;
            }
        }
        if (!matched) {
            ++pos;
        }
    }
    return events;
}

// Content of the last complete `\boxed{...}` at or after `from`, with
// balance-aware brace scanning.
std::optional<std::string> last_boxed(std::string_view text, std::size_t from) {
    static constexpr std::string_view kMarker = "\\boxed{";
    std::optional<std::string> result;
    std::size_t pos = from;
    while (pos < text.size()) {
        const std::size_t hit = text.find(kMarker, pos);
        if (hit == std::string_view::npos) {
            break;
        }
        std::size_t cursor = hit + kMarker.size();
        int depth = 1;
        while (cursor < text.size() && depth > 0) {
            if (text[cursor] == '{') {
                ++depth;
            } else if (text[cursor] == '}') {
                --depth;
            }
            ++cursor;
        }
        if (depth == 0) {
            result = std::string(text.substr(hit + kMarker.size(),
                                             cursor - 1 - (hit + kMarker.size())));
        }
        pos = hit + kMarker.size();
    }
    return result;
}

}  // namespace

const char* to_string(ViolationCode code) {
    switch (code) {
        case ViolationCode::UnclosedTag: return "UNCLOSED_TAG";
        case ViolationCode::PerceptionOutsideThink: return "PERCEPTION_OUTSIDE_THINK";
        case ViolationCode::NestedPerception: return "NESTED_PERCEPTION";
        case ViolationCode::MissingThink: return "MISSING_THINK";
        case ViolationCode::TagAfterThinkClose: return "TAG_AFTER_THINK_CLOSE";
        case ViolationCode::MultipleThink: return "MULTIPLE_THINK";
    }
    return "UNKNOWN_VIOLATION";
}

bool ParsedTrace::has_violation(ViolationCode code) const {
    return std::find(format_violations.begin(), format_violations.end(), code) !=
           format_violations.end();
}

std::string_view ParsedTrace::think_text() const {
    return std::string_view(response).substr(think_begin, think_end - think_begin);
}

std::string_view ParsedTrace::preceding_text(std::size_t perception_index) const {
    const auto& occ = perceptions.at(perception_index);
    return std::string_view(response).substr(occ.preceding_begin,
                                             occ.preceding_end - occ.preceding_begin);
}

std::string_view ParsedTrace::suffix_text() const {
    return std::string_view(response).substr(suffix_begin);
}

ParsedTrace parse_trace(const RawTrace& raw, const TagConfig& tags) {
    ParsedTrace out;
    out.response = raw.response;
    const std::string& text = out.response;

    out.prefix_end = text.size();
    out.suffix_begin = text.size();
    out.think_begin = text.size();
    out.think_end = text.size();

    const auto events = scan_tags(text, tags);

    enum class Phase { BeforeThink, InThink, AfterThink };
    Phase phase = Phase::BeforeThink;
    bool in_perception = false;
    std::size_t perception_open_begin = 0;
    std::size_t perception_open_end = 0;
    std::size_t segment_cursor = 0;   // start of pending reasoning text
    std::size_t previous_tag_end = 0; // end of the last event of any kind

    auto add_violation = [&out](ViolationCode code) {
        if (!out.has_violation(code)) {
            out.format_violations.push_back(code);
        }
    };
    auto flush_reasoning = [&](std::size_t until) {
        if (segment_cursor < until) {
            out.segments.push_back({SegmentKind::Reasoning,
                                    text.substr(segment_cursor, until - segment_cursor),
                                    segment_cursor, until});
        }
        segment_cursor = until;
    };

    for (const auto& ev : events) {
        switch (ev.kind) {
            case TagKind::ThinkOpen:
                if (phase == Phase::BeforeThink) {
                    phase = Phase::InThink;
                    out.has_think = true;
                    out.prefix_end = ev.begin;
                    out.think_begin = ev.end;
                    segment_cursor = ev.end;
                } else if (phase == Phase::InThink) {
                    add_violation(ViolationCode::MultipleThink);
                } else {
                    add_violation(ViolationCode::TagAfterThinkClose);
                    add_violation(ViolationCode::MultipleThink);
                }
                break;

            case TagKind::ThinkClose:
                if (phase == Phase::InThink) {
                    if (in_perception) {
                        add_violation(ViolationCode::UnclosedTag);
                        in_perception = false;
                    } else {
                        flush_reasoning(ev.begin);
                    }
                    phase = Phase::AfterThink;
                    out.think_closed = true;
                    out.think_end = ev.begin;
                    out.suffix_begin = ev.end;
                } else if (phase == Phase::BeforeThink) {
                    add_violation(ViolationCode::UnclosedTag);  // close without open
                } else {
                    add_violation(ViolationCode::TagAfterThinkClose);
                }
                break;

            case TagKind::PerceptionOpen:
                out.perceptions.push_back({ev.begin, previous_tag_end, ev.begin});
                if (phase == Phase::InThink) {
                    if (in_perception) {
                        add_violation(ViolationCode::NestedPerception);
                    } else {
                        flush_reasoning(ev.begin);
                        in_perception = true;
                        perception_open_begin = ev.begin;
                        perception_open_end = ev.end;
                    }
                } else if (phase == Phase::BeforeThink) {
                    add_violation(ViolationCode::PerceptionOutsideThink);
                } else {
                    add_violation(ViolationCode::TagAfterThinkClose);
                    add_violation(ViolationCode::PerceptionOutsideThink);
                }
                break;

            case TagKind::PerceptionClose:
                if (phase == Phase::InThink && in_perception) {
                    out.segments.push_back(
                        {SegmentKind::Perception,
                         text.substr(perception_open_end, ev.begin - perception_open_end),
                         perception_open_begin, ev.end});
                    in_perception = false;
                    segment_cursor = ev.end;
                } else if (phase == Phase::InThink) {
                    add_violation(ViolationCode::UnclosedTag);  // close without open
                } else if (phase == Phase::BeforeThink) {
                    add_violation(ViolationCode::PerceptionOutsideThink);
                } else {
                    add_violation(ViolationCode::TagAfterThinkClose);
                }
                break;
        }
        previous_tag_end = ev.end;
    }

    if (phase == Phase::BeforeThink) {
        add_violation(ViolationCode::MissingThink);
    } else if (phase == Phase::InThink) {
        add_violation(ViolationCode::UnclosedTag);  // think never closed
        out.think_end = text.size();
        if (!in_perception) {
            flush_reasoning(text.size());
        }
    }

    out.format_valid = out.format_violations.empty();
    out.answer_text = extract_answer(out);
    return out;
}

std::optional<std::string> extract_answer(const ParsedTrace& parsed) {
    const std::string& text = parsed.response;
    if (parsed.think_closed) {
        if (auto boxed = last_boxed(text, parsed.suffix_begin)) {
            return boxed;
        }
    }
    if (auto boxed = last_boxed(text, 0)) {
        return boxed;
    }
    if (parsed.think_closed) {
        const auto tail = detail::trim(parsed.suffix_text());
        if (!tail.empty()) {
            return std::string(tail);
        }
    }
    return std::nullopt;
}

std::string serialize_trace(const ParsedTrace& parsed, const TagConfig& tags) {
    if (!parsed.format_valid) {
        throw Error(ErrorCode::SerializeInvalid, "cannot serialize a format-invalid trace");
    }
    std::string out;
    out.reserve(parsed.response.size());
    out.append(parsed.response, 0, parsed.prefix_end);
    out += tags.think_open;
    for (const auto& segment : parsed.segments) {
        if (segment.kind == SegmentKind::Reasoning) {
            out += segment.text;
        } else {
            out += tags.perception_open;
            out += segment.text;
            out += tags.perception_close;
        }
    }
    out += tags.think_close;
    out.append(parsed.response, parsed.suffix_begin, std::string::npos);
    return out;
}

}  // namespace pivotal

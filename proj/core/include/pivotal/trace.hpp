#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pivotal {

/// Literal tag strings delimiting the think block and perception segments.
/// Tags are matched as exact, case-sensitive literals. All four must be
/// non-empty and pairwise distinct.
struct TagConfig {
    std::string think_open = "<think>";
    std::string think_close = "</think>";
    std::string perception_open = "<perception>";
    std::string perception_close = "</perception>";
};

/// One corpus record: a model response plus the query and reference answer
/// it was produced for.
struct RawTrace {
    std::string id;
    std::string prompt;
    std::string response;
    std::string ground_truth;
    std::string group_id;  // empty when the trace is not part of a rollout group
};

enum class ViolationCode {
    UnclosedTag,
    PerceptionOutsideThink,
    NestedPerception,
    MissingThink,
    TagAfterThinkClose,
    MultipleThink,
};

const char* to_string(ViolationCode code);

enum class SegmentKind { Reasoning, Perception };

/// A structural unit of the think block. [start, end) is the raw byte span in
/// the response, tags included; `text` excludes the tag delimiters for
/// Perception segments and equals the raw span for Reasoning segments.
struct Segment {
    SegmentKind kind = SegmentKind::Reasoning;
    std::string text;
    std::size_t start = 0;
    std::size_t end = 0;
};

/// One perception open tag, regardless of whether the trace is well formed.
/// `preceding` is the raw text between the nearest earlier tag (any kind, or
/// start of response) and this open tag; it never contains tag literals.
struct PerceptionOccurrence {
    std::size_t open_pos = 0;
    std::size_t preceding_begin = 0;
    std::size_t preceding_end = 0;
};

/// Structured view of a tagged reasoning trace.
///
/// When format_valid is true the segments tile the think span exactly:
/// concatenating their raw spans reproduces response[think_begin, think_end).
/// When it is false, segments and spans are best effort and only
/// `perceptions` (one entry per open-tag occurrence) is guaranteed complete.
struct ParsedTrace {
    std::string response;

    std::size_t think_begin = 0;  // content span; tags excluded
    std::size_t think_end = 0;
    std::size_t prefix_end = 0;    // response[0, prefix_end) precedes the open tag
    std::size_t suffix_begin = 0;  // response[suffix_begin, ...) follows the close tag
    bool has_think = false;
    bool think_closed = false;

    std::vector<Segment> segments;
    std::vector<PerceptionOccurrence> perceptions;
    std::optional<std::string> answer_text;

    bool format_valid = false;
    std::vector<ViolationCode> format_violations;

    bool has_violation(ViolationCode code) const;
    std::string_view think_text() const;
    std::string_view preceding_text(std::size_t perception_index) const;
    std::string_view suffix_text() const;
};

/// Parses a response into a ParsedTrace. Never fails: malformed input yields
/// format_valid=false with the offending violation codes recorded. An empty
/// response reports MissingThink.
ParsedTrace parse_trace(const RawTrace& raw, const TagConfig& tags = {});

/// Extracts the final answer: the content of the last `\boxed{...}` after the
/// think block, else the last one anywhere, else the trimmed post-think text,
/// else nothing. Brace scanning is balance-aware, so nested braces survive.
std::optional<std::string> extract_answer(const ParsedTrace& parsed);

/// Rebuilds the response text from the structured form. parse ∘ serialize is
/// the identity on bytes for every format-valid trace.
/// Throws Error(SerializeInvalid) if parsed.format_valid is false.
std::string serialize_trace(const ParsedTrace& parsed, const TagConfig& tags = {});

}  // namespace pivotal

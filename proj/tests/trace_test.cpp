#include "doctest.h"

#include <algorithm>
#include <string>

#include "pivotal/error.hpp"
#include "pivotal/trace.hpp"
#include "support/fixtures.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace pivotal;

TEST_CASE("minimal well-formed trace") {
    const ParsedTrace parsed = parse_trace(fixtures::make_trace(fixtures::kMinimalTrace));
    CHECK(parsed.format_valid);
    CHECK(parsed.perceptions.size() == 1);
    REQUIRE(parsed.segments.size() == 3);
    CHECK(parsed.segments[0].kind == SegmentKind::Reasoning);
    CHECK(parsed.segments[0].text == "A. ");
    CHECK(parsed.segments[1].kind == SegmentKind::Perception);
    CHECK(parsed.segments[1].text == "P1");
    CHECK(parsed.segments[2].text == " B.");
    REQUIRE(parsed.answer_text.has_value());
    CHECK(*parsed.answer_text == "B");
}

TEST_CASE("geometry fixture: three perceptions, valid, answer B") {
    const ParsedTrace parsed = parse_trace(fixtures::make_trace(fixtures::kGeometryTrace));
    CHECK(parsed.format_valid);
    CHECK(parsed.perceptions.size() == 3);
    long perception_segments = 0;
    for (const auto& segment : parsed.segments) {
        if (segment.kind == SegmentKind::Perception) {
            ++perception_segments;
        }
    }
    CHECK(perception_segments == 3);
    REQUIRE(parsed.answer_text.has_value());
    CHECK(*parsed.answer_text == "B");
}

TEST_CASE("segment raw spans tile the think span byte for byte") {
    const ParsedTrace parsed = parse_trace(fixtures::make_trace(fixtures::kGeometryTrace));
    std::size_t cursor = parsed.think_begin;
    std::string rebuilt;
    for (const auto& segment : parsed.segments) {
        CHECK(segment.start == cursor);
        CHECK(segment.start < segment.end);
        rebuilt += parsed.response.substr(segment.start, segment.end - segment.start);
        cursor = segment.end;
    }
    CHECK(cursor == parsed.think_end);
    CHECK(rebuilt == std::string(parsed.think_text()));
}

TEST_CASE("malformed traces report violation codes without failing") {
    SUBCASE("unclosed perception") {
        const auto parsed = parse_trace(fixtures::make_trace("<think>A <perception>P"));
        CHECK_FALSE(parsed.format_valid);
        CHECK(parsed.has_violation(ViolationCode::UnclosedTag));
    }
    SUBCASE("perception before think") {
        const auto parsed =
            parse_trace(fixtures::make_trace("<perception>P</perception><think>A</think>"));
        CHECK_FALSE(parsed.format_valid);
        CHECK(parsed.has_violation(ViolationCode::PerceptionOutsideThink));
    }
    SUBCASE("empty response") {
        const auto parsed = parse_trace(fixtures::make_trace(""));
        CHECK_FALSE(parsed.format_valid);
        CHECK(parsed.has_violation(ViolationCode::MissingThink));
    }
    SUBCASE("two think blocks") {
        const auto parsed =
            parse_trace(fixtures::make_trace("<think>A</think><think>B</think>"));
        CHECK_FALSE(parsed.format_valid);
        CHECK(parsed.has_violation(ViolationCode::MultipleThink));
    }
    SUBCASE("nested perception") {
        const auto parsed = parse_trace(fixtures::make_trace(
            "<think><perception>a<perception>b</perception></perception></think>"));
        CHECK_FALSE(parsed.format_valid);
        CHECK(parsed.has_violation(ViolationCode::NestedPerception));
        CHECK(parsed.perceptions.size() == 2);  // one per open tag occurrence
    }
    SUBCASE("tag after think close") {
        const auto parsed = parse_trace(
            fixtures::make_trace("<think>A</think><perception>p</perception>"));
        CHECK_FALSE(parsed.format_valid);
        CHECK(parsed.has_violation(ViolationCode::TagAfterThinkClose));
    }
    SUBCASE("zero perceptions is still valid") {
        const auto parsed = parse_trace(fixtures::make_trace("<think>Only text.</think>"));
        CHECK(parsed.format_valid);
        CHECK(parsed.perceptions.empty());
    }
    SUBCASE("plain text before the think block is allowed") {
        const auto parsed =
            parse_trace(fixtures::make_trace("Intro text. <think>Body.</think>\\boxed{A}"));
        CHECK(parsed.format_valid);
    }
}

TEST_CASE("tag-order permutations agree with the validity table") {
    // All orderings of the four tags around fixed fillers; only
    // think-open < perception-open < perception-close < think-close parses.
    const std::array<std::string, 4> tags = {"<think>", "</think>", "<perception>",
                                             "</perception>"};
    std::array<int, 4> order = {0, 1, 2, 3};
    std::sort(order.begin(), order.end());
    int checked = 0;
    do {
        std::string text = "s0 ";
        for (int i = 0; i < 4; ++i) {
            text += tags[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
            text += " s" + std::to_string(i + 1) + " ";
        }
        const bool expect_valid = order == std::array<int, 4>{0, 2, 3, 1};
        const auto parsed = parse_trace(fixtures::make_trace(text));
        CAPTURE(text);
        CHECK(parsed.format_valid == expect_valid);
        CHECK(parsed.format_valid == oracle::naive_format_valid(text));
        ++checked;
    } while (std::next_permutation(order.begin(), order.end()));
    CHECK(checked == 24);
}

TEST_CASE("inserting any single unmatched tag invalidates a valid trace") {
    // Insertion points that split an existing tag literal rewrite tokens
    // rather than adding one, so they are excluded.
    const std::string base = fixtures::kMinimalTrace;
    const std::array<std::string, 4> tags = {"<think>", "</think>", "<perception>",
                                             "</perception>"};
    std::vector<std::pair<std::size_t, std::size_t>> literal_spans;
    for (const auto& tag : tags) {
        std::size_t pos = 0;
        while ((pos = base.find(tag, pos)) != std::string::npos) {
            literal_spans.emplace_back(pos, pos + tag.size());
            pos += tag.size();
        }
    }
    auto splits_literal = [&literal_spans](std::size_t at) {
        for (const auto& [begin, end] : literal_spans) {
            if (at > begin && at < end) {
                return true;
            }
        }
        return false;
    };
    for (const auto& tag : tags) {
        for (std::size_t at = 0; at <= base.size(); ++at) {
            if (splits_literal(at)) {
                continue;
            }
            std::string mutated = base;
            mutated.insert(at, tag);
            const auto parsed = parse_trace(fixtures::make_trace(mutated));
            CAPTURE(tag);
            CAPTURE(at);
            CHECK_FALSE(parsed.format_valid);
        }
    }
}

TEST_CASE("extract_answer") {
    auto answer_of = [](const std::string& response) {
        return parse_trace(fixtures::make_trace(response)).answer_text;
    };
    SUBCASE("boxed after think") {
        CHECK(answer_of("<think>x.</think> \\boxed{B}") == std::string("B"));
    }
    SUBCASE("no boxed, no trailing text") {
        CHECK_FALSE(answer_of("<think>x.</think>").has_value());
    }
    SUBCASE("nested braces stay balanced") {
        CHECK(answer_of("<think>x.</think>\\boxed{\\frac{5}{2}}") ==
              std::string("\\frac{5}{2}"));
    }
    SUBCASE("last boxed wins") {
        CHECK(answer_of("<think>x.</think>\\boxed{A} then \\boxed{C}") == std::string("C"));
    }
    SUBCASE("in-think boxed used only when the suffix has none") {
        CHECK(answer_of("<think>so \\boxed{D}.</think> trailing words") == std::string("D"));
    }
    SUBCASE("trailing text fallback") {
        CHECK(answer_of("<think>x.</think>  B  ") == std::string("B"));
    }
    SUBCASE("unclosed boxed falls through to the trailing-text rule") {
        CHECK(answer_of("<think>x.</think>\\boxed{B") == std::string("\\boxed{B"));
        CHECK(answer_of("<think>\\boxed{B x.</think>") == std::nullopt);
    }
}

TEST_CASE("balanced-brace extraction agrees with a depth-counting oracle") {
    gen::TestRng rng(2024);
    for (int i = 0; i < 300; ++i) {
        // Random nested-brace content with depth <= 4.
        std::string content;
        int depth = 0;
        const int len = rng.range(0, 14);
        for (int k = 0; k < len; ++k) {
            const int move = rng.range(0, 3);
            if (move == 0 && depth < 4) {
                content += '{';
                ++depth;
            } else if (move == 1 && depth > 0) {
                content += '}';
                --depth;
            } else {
                content += static_cast<char>('a' + rng.range(0, 25));
            }
        }
        while (depth-- > 0) {
            content += '}';
        }
        const std::string response = "<think>x.</think>\\boxed{" + content + "}";
        const auto parsed = parse_trace(fixtures::make_trace(response));
        const auto expected = oracle::naive_boxed_content(response, 0);
        REQUIRE(expected.has_value());
        CHECK(parsed.answer_text == expected);
    }
}

TEST_CASE("serialize is a byte inverse of parse on valid traces") {
    SUBCASE("fixtures") {
        for (const std::string* response : {&fixtures::kMinimalTrace, &fixtures::kGeometryTrace}) {
            const auto parsed = parse_trace(fixtures::make_trace(*response));
            REQUIRE(parsed.format_valid);
            CHECK(serialize_trace(parsed) == *response);
        }
    }
    SUBCASE("random valid traces") {
        gen::TestRng rng(7);
        int validated = 0;
        while (validated < 1000) {
            const auto spec = gen::random_trace(rng, /*allow_mutation=*/false);
            const auto parsed = parse_trace(spec.raw);
            REQUIRE(parsed.format_valid);
            CHECK(serialize_trace(parsed) == spec.raw.response);
            ++validated;
        }
    }
    SUBCASE("invalid traces refuse to serialize") {
        const auto parsed = parse_trace(fixtures::make_trace("<think>A <perception>P"));
        CHECK_THROWS_WITH_AS(static_cast<void>(serialize_trace(parsed)),
                             doctest::Contains("SERIALIZE_INVALID"), Error);
    }
}

TEST_CASE("custom tag literals") {
    TagConfig tags;
    tags.think_open = "[[T]]";
    tags.think_close = "[[/T]]";
    tags.perception_open = "[[P]]";
    tags.perception_close = "[[/P]]";
    const std::string response = "[[T]]A. [[P]]see chart[[/P]] B.[[/T]]\\boxed{A}";
    const auto parsed = parse_trace(fixtures::make_trace(response), tags);
    CHECK(parsed.format_valid);
    CHECK(parsed.perceptions.size() == 1);
    CHECK(serialize_trace(parsed, tags) == response);
    // The default angle-bracket tags are now plain text.
    const auto with_default_tags =
        parse_trace(fixtures::make_trace("<think>A</think>"), tags);
    CHECK_FALSE(with_default_tags.format_valid);
    CHECK(with_default_tags.has_violation(ViolationCode::MissingThink));
}

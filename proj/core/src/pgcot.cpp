#include "pivotal/pgcot.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <thread>

#include "pivotal/error.hpp"
#include "pivotal/trace.hpp"
#include "text_util.hpp"

namespace pivotal {

namespace {

constexpr std::string_view kQuestionPlaceholder = "{Insert the original question here}";
constexpr std::string_view kCotPlaceholder = "{Insert the original CoT reasoning here}";
constexpr std::string_view kImagePlaceholder = "{Insert the image here or provide the image file}";
constexpr std::string_view kDescriptionPlaceholder =
    "{Insert the pre-generated image description here}";
constexpr std::string_view kSuggestionsPlaceholder =
    "{Insert the list of suggestions, including:\n"
    "  - Locations for inserting new perception segments and what to describe\n"
    "  - Locations of existing visual description sentences/phrases to be wrapped}";

constexpr const char* kStep1Template = R"PROMPT(Please provide an extremely detailed and comprehensive description of this image in English.

Requirements:
   1. Describe ALL visible text content(including titles, body text, numbers, formulas, labels, etc.)
  2. Describe ALL visual elements (shapes, charts, symbols, photos, illustrations, etc.),
     including their colors, positions, and size relationships
  3. Describe the spatial layout and arrangement of elements
  4. If there are tables, charts, or other structured information, describe their content
     in detail
  5. Be as thorough as possible so that a reader could understand the complete content of
     the image based solely on your description

Please start describing directly without using numbered points or specific formatting.
Use natural, flowing language to present all the information in the image comprehensively.)PROMPT";

constexpr const char* kStep2Template = R"PROMPT(You are an expert in multimodal reasoning and data annotation.
Your task is to review a text-only Chain-of-Thought (CoT) reasoning process for a question that
originally included an image. You need to:
  1. Suggest where perception segments (i.e., visual observations) could be inserted in the
     reasoning, and specify what type of visual information should be described in each segment.
   2. Identify any sentences or phrases within the reasoning that already describe visual information,
     and recommend wrapping these with <perception>...</perception> tags.

---
Original Question:
{Insert the original question here}

Thinking Content (MUST be preserved exactly as shown below):
{Insert the original CoT reasoning here}

Important Context:
The original question was accompanied by an image. The reasoning provided here is based only on
text, but in a multimodal setting, certain reasoning steps could be enhanced by directly grounding
them in visual evidence.

---
Core Instructions:
  1. Carefully read the entire CoT reasoning to understand its logic and structure.
  2. For each reasoning step, ask: "Would this step benefit from being grounded in visual
  evidence from the image?"
  3. Suggest specific points (only after punctuation marks) where a perception segment could be
  inserted to support or guide the reasoning.
   4. For each suggested perception segment, clearly specify what type of visual information should
  be described (e.g., chart data, labels, object attributes, spatial relationships,
  mathematical expressions, symbols, text, numbers, geometric shapes, etc.).
  5. Carefully examine the reasoning content and identify any sentences or phrases that already
  directly describe visual information from the image. For these, recommend wrapping them with
  <perception>...</perception> tags.
  6. Do NOT generate actual perception content—only indicate where and what should be described,
  and which existing segments should be wrapped, as if preparing instructions for a multimodal
  annotator.
  7. Your suggestions must be based entirely on the reasoning process and the original question.
  Do not invent or assume visual details that are not logically implied or necessary.
  8. Do NOT remove, rewrite, or summarize any part of the original reasoning. Your job is to annotate
  the reasoning process, not to improve or alter it.

---
Output Format:
- For each suggested insertion point, list:
  1. The exact location (e.g., after which sentence or phrase).
   2. The type of visual information that should be described in the perception segment (in clear,
   concise language).
- For each existing sentence or phrase that describes visual information, specify its location and
  recommend wrapping it with <perception>...</perception> tags.
- Maintain the order and structure of the original reasoning.
- When specifying the type of visual information, use the same language as the original content

---
Rules for Perception Segment Suggestions:
- Only suggest perception insertions after logical break points (punctuation marks, not in the
middle of sentences or formulas).
- The suggested visual information must be directly relevant to the reasoning step and necessary for
answering the main question.
- Do not suggest irrelevant or distracting visual observations.
- Distribute suggestions evenly throughout the reasoning trace, where they would add value.
- If a reasoning step does not require visual grounding, do not suggest a perception segment.
- Do not suggest insertions in the middle of mathematical formulas or equations.
- For existing visual description sentences, only recommend wrapping those that are directly and
factually describing the image.

---
Examples of CORRECT suggestions:
- After "We need to solve for the range."
  - Suggested perception: Describe the chart showing export data for four years.
- After "Looking at the chart data: 2004 shows $8.66 billion, 2005 shows $10.92 billion, 2006 shows
$13.41 billion, 2007 shows $16.7 billion."
  - Suggested perception: Describe the exact values and labels visible in the chart.
- Sentence: "The image shows a right triangle with sides labeled 3, 4, and 5."
  - Recommendation: Wrap this sentence with <perception>...</perception> tags.

Examples of INCORRECT suggestions:
- In the middle of a sentence or formula.
- After reasoning steps that do not rely on visual information.
- Suggesting perception segments that are not relevant to the question.
- Wrapping sentences that do not actually describe visual evidence.

---
Begin your output now:)PROMPT";

constexpr const char* kStep3Template = R"PROMPT(You are an expert in multimodal reasoning and data annotation.
Your task is to enhance a text-only Chain-of-Thought (CoT) reasoning for a question that originally
included an image.
You will use the provided suggestions to:
  1. Wrap existing sentences or phrases that directly describe visual information
   with <perception>...</perception> tags, according to the suggestions.
  2. Insert new perception segments at the recommended locations, following the suggestions on
   what type of visual information to describe.
   3. Ensure all perception segments are concise, factually accurate, and based only on what can be
   directly observed in the image.
   4. For each perception segment, cross-check with the provided image description for consistency,
   but rely primarily on your own observation of the image.
  5. If the suggested visual evidence is not present in the image, simply skip inserting that
   perception segment.

---
Original Question:
{Insert the original question here}

Original Image:
{Insert the image here or provide the image file}

Image Description:
{Insert the pre-generated image description here}

Thinking Content (MUST be preserved exactly as shown below):
{Insert the original CoT reasoning here}

Perception Suggestions:
{Insert the list of suggestions, including:
  - Locations for inserting new perception segments and what to describe
  - Locations of existing visual description sentences/phrases to be wrapped}

---
Core Instructions:
  1. Carefully observe the provided image to understand all visual elements present, including:
  natural images, photographs, charts, graphs, diagrams, mathematical expressions, formulas,
  text content, numbers, symbols, geometric shapes, and any other visible elements.
  2. Read the provided Chain-of-Thought reasoning and the perception suggestions.
  3. For each suggestion to wrap an existing sentence or phrase, locate it in the reasoning and
  wrap it with <perception>...</perception> tags.
  4. For each suggestion to insert a new perception segment, add a <perception>...</perception>
  block at the specified location (only after punctuation), describing the recommended type of
  visual information observed in the image.
  5. For each perception segment, cross-check with the image description for consistency, but base
  your final judgment on your own observation.
  6. If the suggested visual evidence is not present in the image, simply skip inserting that
  perception segment.
  7. Each perception segment must contain a single, concise, factually accurate sentence that is
  directly verifiable from the image.
  8. Do not invent or assume details not visible in the image. Base all perception content on direct
  observation.
  9. Do not remove, rewrite, or summarize any part of the original reasoning. Preserve the logical
  structure and meaning.
 10. Use the same language as the original reasoning when writing perception segments.
 11. Insert perception segments only at logical break points (after punctuation marks,
  never in the middle of sentences or formulas).

---
Output Format:
- Return the enhanced reasoning content, with <perception>...</perception> tags
correctly wrapped around existing visual description sentences/phrases, and new <perception>
segments inserted at the recommended locations.
- Each <perception> segment should be concise and directly describe what is observable in the image.

---
Examples of CORRECT placement:
"<perception>The image shows a right triangle with legs of length 3 and 4</perception>
According to the Pythagorean theorem, we need to calculate the hypotenuse length."
"<perception>The bar chart shows sales data for three different products, with Product A as blue
bars, Product B as red bars, and Product C as green bars</perception>We need to compare the sales
performance of these three products."

---
Begin your output now:)PROMPT";

std::string fill_placeholder(std::string text, std::string_view placeholder,
                             std::string_view value) {
    std::size_t pos = 0;
    while ((pos = text.find(placeholder, pos)) != std::string::npos) {
        text.replace(pos, placeholder.size(), value);
        pos += value.size();
    }
    return text;
}

void require_field(const std::string& value, const char* name) {
    if (value.empty()) {
        throw Error(ErrorCode::MissingUpstreamOutput, std::string(name) + " is empty");
    }
}

TeacherRequest make_request(const PgcotConfig& cfg, std::string content,
                            std::optional<std::string> image_ref) {
    TeacherRequest request;
    request.model_name = cfg.model_name;
    request.temperature = cfg.temperature;
    request.image_ref = std::move(image_ref);
    request.messages.push_back({"user", std::move(content)});
    return request;
}

// Placement legality: an open tag may follow (ignoring spaces and tabs) a
// sentence terminator, `:` or `;`, a perception close tag, a line break, or
// the start of the text.
bool legal_placement(std::string_view text, std::size_t open_pos, const TagConfig& tags) {
    std::size_t i = open_pos;
    while (i > 0) {
        const char c = text[i - 1];
        if (c == '\n') {
            return true;
        }
        if (detail::is_ascii_space(c)) {
            --i;
            continue;
        }
        break;
    }
    if (i == 0) {
        return true;
    }
    const auto& close = tags.perception_close;
    if (i >= close.size() && text.compare(i - close.size(), close.size(), close) == 0) {
        return true;
    }
    const char c = text[i - 1];
    if (c == '.' || c == '!' || c == '?' || c == ':' || c == ';') {
        return true;
    }
    if (i >= 3) {
        const auto cp = detail::decode_utf8(text, i - 3);
        if (cp.length == 3 && detail::is_terminator_cp(cp.value)) {
            return true;
        }
    }
    return false;
}

}  // namespace

TeacherRequest build_step1_prompt(const PgcotRecord& record, const PgcotConfig& cfg) {
    require_field(record.image_ref, "image_ref");
    return make_request(cfg, kStep1Template, record.image_ref);
}

TeacherRequest build_step2_prompt(const PgcotRecord& record, const PgcotConfig& cfg) {
    require_field(record.question, "question");
    require_field(record.original_cot, "original_cot");
    std::string content = fill_placeholder(kStep2Template, kQuestionPlaceholder, record.question);
    content = fill_placeholder(std::move(content), kCotPlaceholder, record.original_cot);
    return make_request(cfg, std::move(content), std::nullopt);
}

TeacherRequest build_step3_prompt(const PgcotRecord& record, const PgcotConfig& cfg) {
    require_field(record.question, "question");
    require_field(record.original_cot, "original_cot");
    require_field(record.description, "description (step-1 output)");
    require_field(record.suggestions, "suggestions (step-2 output)");
    std::string content = fill_placeholder(kStep3Template, kQuestionPlaceholder, record.question);
    content = fill_placeholder(std::move(content), kImagePlaceholder, record.image_ref);
    content = fill_placeholder(std::move(content), kDescriptionPlaceholder, record.description);
    content = fill_placeholder(std::move(content), kCotPlaceholder, record.original_cot);
    content = fill_placeholder(std::move(content), kSuggestionsPlaceholder, record.suggestions);
    return make_request(cfg, std::move(content), record.image_ref);
}

std::array<TeacherRequest, 3> build_prompts(const PgcotRecord& record, const PgcotConfig& cfg) {
    return {build_step1_prompt(record, cfg), build_step2_prompt(record, cfg),
            build_step3_prompt(record, cfg)};
}

std::string strip_perceptions(std::string_view enhanced_cot) {
    const TagConfig tags;
    std::string out;
    out.reserve(enhanced_cot.size());
    std::size_t pos = 0;
    while (pos < enhanced_cot.size()) {
        const std::size_t open = enhanced_cot.find(tags.perception_open, pos);
        if (open == std::string_view::npos) {
            out.append(enhanced_cot.substr(pos));
            break;
        }
        out.append(enhanced_cot.substr(pos, open - pos));
        const std::size_t close =
            enhanced_cot.find(tags.perception_close, open + tags.perception_open.size());
        if (close == std::string_view::npos) {
            // Unclosed open tag: drop the literal, keep the trailing text.
            pos = open + tags.perception_open.size();
            continue;
        }
        pos = close + tags.perception_close.size();
    }
    return out;
}

PgcotValidation validate_enhanced(std::string_view original_cot, std::string_view enhanced_cot) {
    const TagConfig tags;
    PgcotValidation result;
    result.unchecked_constraints = {kUncheckedFactualVerifiability, kUncheckedNecessity};

    auto add = [&result](const char* code) {
        for (const auto& existing : result.violations) {
            if (existing == code) return;
        }
        result.violations.emplace_back(code);
    };

    // (a) Structural well-formedness, checked by parsing a synthetic wrap.
    RawTrace wrap;
    wrap.id = "validator";
    wrap.response = tags.think_open + std::string(enhanced_cot) + tags.think_close;
    const ParsedTrace parsed = parse_trace(wrap, tags);
    if (!parsed.format_valid) {
        add(kViolationTagsMalformed);
    }

    // (b) Deleting perception spans must reproduce the original, modulo
    // whitespace reflow.
    const std::string stripped = strip_perceptions(enhanced_cot);
    if (detail::normalize_whitespace(stripped) != detail::normalize_whitespace(original_cot)) {
        add(kViolationPreservation);
    }

    // (c) + (d) Placement and non-empty bodies, per open tag.
    std::size_t pos = 0;
    while (pos < enhanced_cot.size()) {
        const std::size_t open = enhanced_cot.find(tags.perception_open, pos);
        if (open == std::string_view::npos) {
            break;
        }
        if (!legal_placement(enhanced_cot, open, tags)) {
            add(kViolationPlacement);
        }
        const std::size_t body_begin = open + tags.perception_open.size();
        const std::size_t close = enhanced_cot.find(tags.perception_close, body_begin);
        if (close != std::string_view::npos) {
            if (detail::trim(enhanced_cot.substr(body_begin, close - body_begin)).empty()) {
                add(kViolationEmptyPerception);
            }
            pos = close + tags.perception_close.size();
        } else {
            pos = body_begin;
        }
    }

    result.valid = result.violations.empty();
    return result;
}

namespace {

enum class StepOutcome { Ok, Failed };

StepOutcome run_step(PgcotRecord& record, TeacherClient& client, const PgcotConfig& cfg,
                     int step, std::string& output) {
    TeacherRequest request;
    try {
        switch (step) {
            case 1: request = build_step1_prompt(record, cfg); break;
            case 2: request = build_step2_prompt(record, cfg); break;
            default: request = build_step3_prompt(record, cfg); break;
        }
    } catch (const Error&) {
        record.violations.emplace_back(kViolationMissingInput);
        return StepOutcome::Failed;
    }

    const int max_attempts = 1 + std::max(0, cfg.max_retries);
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        const TeacherResponse response = client.complete(request);
        if (response.status == TeacherStatus::Ok) {
            output = response.content;
            return StepOutcome::Ok;
        }
        if (response.status == TeacherStatus::PermanentError) {
            break;
        }
        if (attempt + 1 < max_attempts && cfg.retry_backoff_ms > 0) {
            std::this_thread::sleep_for(
                std::chrono::milliseconds(static_cast<long>(cfg.retry_backoff_ms) << attempt));
        }
    }
    record.violations.emplace_back(kViolationTeacherFailure);
    return StepOutcome::Failed;
}

void process_record(PgcotRecord& record, TeacherClient& client, const PgcotConfig& cfg) {
    record.valid = false;
    record.violations.clear();
    record.unchecked_constraints.clear();

    if (run_step(record, client, cfg, 1, record.description) != StepOutcome::Ok) {
        return;
    }
    if (run_step(record, client, cfg, 2, record.suggestions) != StepOutcome::Ok) {
        return;
    }
    if (run_step(record, client, cfg, 3, record.enhanced_cot) != StepOutcome::Ok) {
        return;
    }

    PgcotValidation validation = validate_enhanced(record.original_cot, record.enhanced_cot);
    if (!validation.valid && cfg.retry_on_invalid) {
        for (int attempt = 0; attempt < cfg.max_retries && !validation.valid; ++attempt) {
            std::string regenerated;
            if (run_step(record, client, cfg, 3, regenerated) != StepOutcome::Ok) {
                return;
            }
            record.enhanced_cot = std::move(regenerated);
            validation = validate_enhanced(record.original_cot, record.enhanced_cot);
        }
    }
    record.valid = validation.valid;
    record.violations = std::move(validation.violations);
    record.unchecked_constraints = std::move(validation.unchecked_constraints);
}

}  // namespace

std::vector<PgcotRecord> run_pipeline(std::vector<PgcotRecord> records, TeacherClient& client,
                                      const PgcotConfig& cfg, PipelineStats* stats) {
    const std::size_t worker_count = static_cast<std::size_t>(
        std::max(1, std::min<int>(cfg.concurrency_limit, static_cast<int>(records.size()))));

    if (worker_count <= 1) {
        for (auto& record : records) {
            process_record(record, client, cfg);
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> workers;
        workers.reserve(worker_count);
        for (std::size_t w = 0; w < worker_count; ++w) {
            workers.emplace_back([&records, &client, &cfg, &next] {
                while (true) {
                    const std::size_t index = next.fetch_add(1);
                    if (index >= records.size()) {
                        return;
                    }
                    process_record(records[index], client, cfg);
                }
            });
        }
        for (auto& worker : workers) {
            worker.join();
        }
    }

    if (stats != nullptr) {
        const TagConfig tags;
        *stats = {};
        stats->total = records.size();
        std::size_t perception_total = 0;
        for (const auto& record : records) {
            if (record.valid) {
                ++stats->valid;
                std::size_t pos = 0;
                while ((pos = record.enhanced_cot.find(tags.perception_open, pos)) !=
                       std::string::npos) {
                    ++perception_total;
                    pos += tags.perception_open.size();
                }
            }
            for (const auto& violation : record.violations) {
                if (violation == kViolationTeacherFailure) {
                    ++stats->teacher_failures;
                    break;
                }
            }
        }
        stats->valid_rate =
            records.empty() ? 0.0
                            : static_cast<double>(stats->valid) / static_cast<double>(records.size());
        stats->mean_perceptions_per_valid =
            stats->valid == 0
                ? 0.0
                : static_cast<double>(perception_total) / static_cast<double>(stats->valid);
    }
    return records;
}

}  // namespace pivotal

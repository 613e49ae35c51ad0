#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "pivotal/teacher_client.hpp"

namespace pivotal {

/// One record flowing through the perception-grounding pipeline. Steps fill
/// description, suggestions and enhanced_cot in order; `valid` reflects the
/// structural checks on the final output.
struct PgcotRecord {
    std::string image_ref;  // opaque; images are never opened here
    std::string question;
    std::string original_cot;
    std::string description;   // step-1 output
    std::string suggestions;   // step-2 output
    std::string enhanced_cot;  // step-3 output
    bool valid = false;
    std::vector<std::string> violations;
    std::vector<std::string> unchecked_constraints;
};

struct PgcotConfig {
    std::string model_name = "teacher";
    double temperature = 0.0;
    int concurrency_limit = 4;
    int max_retries = 3;
    int retry_backoff_ms = 100;   // doubles per attempt
    bool retry_on_invalid = false;
};

// Violation codes reported by validate_enhanced.
inline constexpr const char* kViolationTagsMalformed = "TAGS_MALFORMED";
inline constexpr const char* kViolationPreservation = "PRESERVATION";
inline constexpr const char* kViolationPlacement = "PLACEMENT";
inline constexpr const char* kViolationEmptyPerception = "EMPTY_PERCEPTION";
inline constexpr const char* kViolationTeacherFailure = "TEACHER_FAILURE";
inline constexpr const char* kViolationMissingInput = "MISSING_UPSTREAM_OUTPUT";

// Constraints that cannot be checked without the image; always reported as
// unchecked rather than silently assumed.
inline constexpr const char* kUncheckedFactualVerifiability = "FACTUAL_VERIFIABILITY";
inline constexpr const char* kUncheckedNecessity = "NECESSITY";

/// Requests for the three pipeline steps: image description, perception
/// location recommendation, perception segment insertion. Each fills the
/// fixed template at its `{Insert ...}` placeholders.
/// Throws Error(MissingUpstreamOutput) when a required field is empty.
TeacherRequest build_step1_prompt(const PgcotRecord& record, const PgcotConfig& cfg);
TeacherRequest build_step2_prompt(const PgcotRecord& record, const PgcotConfig& cfg);
TeacherRequest build_step3_prompt(const PgcotRecord& record, const PgcotConfig& cfg);

/// All three at once; requires the upstream outputs to be present already.
std::array<TeacherRequest, 3> build_prompts(const PgcotRecord& record, const PgcotConfig& cfg);

struct PgcotValidation {
    bool valid = false;
    std::vector<std::string> violations;
    std::vector<std::string> unchecked_constraints;
};

/// Structural validation of an enhanced reasoning trace against its source:
///  - tags well-formed (perception tags paired, no think tags inside)
///  - PRESERVATION: deleting perception spans reproduces the original text
///    modulo whitespace
///  - PLACEMENT: every perception opens after a sentence terminator
///    (including `:` and `;`), a perception close tag, a line break, or at
///    the start of the text
///  - EMPTY_PERCEPTION: perception bodies must not be blank
/// Factual verifiability and necessity need the image and are reported as
/// unchecked constraints.
PgcotValidation validate_enhanced(std::string_view original_cot, std::string_view enhanced_cot);

/// Removes every <perception>...</perception> span.
std::string strip_perceptions(std::string_view enhanced_cot);

struct PipelineStats {
    std::size_t total = 0;
    std::size_t valid = 0;
    std::size_t teacher_failures = 0;
    double valid_rate = 0.0;
    double mean_perceptions_per_valid = 0.0;
};

/// Runs steps 1→2→3 for every record with a bounded number of in-flight
/// teacher calls. Transient errors retry with exponential backoff up to
/// max_retries; permanent errors mark the record TEACHER_FAILURE. The batch
/// never aborts and the output order equals the input order.
std::vector<PgcotRecord> run_pipeline(std::vector<PgcotRecord> records, TeacherClient& client,
                                      const PgcotConfig& cfg, PipelineStats* stats = nullptr);

}  // namespace pivotal

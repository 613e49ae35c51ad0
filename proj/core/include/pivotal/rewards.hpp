#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "pivotal/lexicon.hpp"
#include "pivotal/trace.hpp"

namespace pivotal {

/// Weights and thresholds for the composite trajectory reward.
struct RewardConfig {
    double lambda_acc = 1.0;
    double lambda_form = 0.5;
    double lambda_pivot = 0.5;
    double lambda_len = 0.5;

    double alpha_ratio = 0.5;  // maximum allowable coupling ratio, in [0, 1]
    double lambda_reg = 0.1;   // selectivity regularizer coefficient

    long l_gold = 2048;              // token budget before the length penalty
    double delta = 1.0;              // penalty curve intercept, in (0, 1]
    double lambda_len_slope = 0.001; // penalty per excess token

    double answer_tolerance = 1e-6;  // relative tolerance for numeric answers

    void validate() const;  // throws Error(ConfigError)
};

/// Counts tokens of a response; injectable so a model tokenizer can replace
/// the whitespace-delimited default.
using TokenCounter = std::function<long(std::string_view)>;

long whitespace_token_count(std::string_view text);

struct PivotalDiagnostics {
    long m = 0;          // number of perception segments
    long m_coupled = 0;  // perceptions whose preceding sentence has a keyword
    double m_excess = 0.0;
    double s_pivot = 0.0;
};

/// Per-trajectory reward record: the four components, the weighted total,
/// and the intermediate quantities they were computed from.
struct RewardBreakdown {
    double r_acc = 0.0;
    double r_form = 0.0;
    double r_pivot = 0.0;
    double r_len = 0.0;
    double r_total = 0.0;
    long m = 0;
    long m_coupled = 0;
    double m_excess = 0.0;
    double s_pivot = 0.0;
    long length_tokens = 0;
    long delta_l = 0;
};

/// Proportion of perceptions anchored to a preceding pivotal keyword, minus
/// the selectivity penalty on coupling beyond alpha_ratio, clipped at zero:
///   S = m_coupled / m            (0 when m = 0)
///   r = max(0, S - lambda_reg * max(0, m_coupled - alpha_ratio * m))
/// Computed for format-invalid traces too; every open-tag occurrence counts.
double pivotal_reward(const ParsedTrace& parsed, const PivotalLexicon& lex,
                      const RewardConfig& cfg, PivotalDiagnostics* diag = nullptr);

/// 1 when the trace follows the nested tag structure, else 0.
double format_reward(const ParsedTrace& parsed);

/// 1 when the extracted final answer equals the reference after
/// normalization (or numerically within answer_tolerance), else 0.
double accuracy_reward(const ParsedTrace& parsed, std::string_view ground_truth,
                       const RewardConfig& cfg);

/// Length reward: 0 when the answer is wrong; 1 when the response stays
/// within l_gold tokens; otherwise max(0, delta - lambda_len_slope * excess).
double length_reward(const ParsedTrace& parsed, double r_acc, const RewardConfig& cfg,
                     const TokenCounter& tokens = {});

/// All four components plus their weighted sum. Pure: identical inputs give
/// bit-identical outputs.
RewardBreakdown composite_reward(const ParsedTrace& parsed, std::string_view ground_truth,
                                 const PivotalLexicon& lex, const RewardConfig& cfg,
                                 const TokenCounter& tokens = {});

/// Answer normalization used by the accuracy reward: trims, strips outer
/// \boxed{...} and $...$, collapses whitespace, and uppercases a lone letter.
std::string normalize_answer(std::string_view answer);

/// Parses a normalized answer as a decimal or a/b rational.
std::optional<double> parse_numeric_answer(std::string_view normalized);

bool answers_equal(std::string_view answer, std::string_view ground_truth, double tolerance);

}  // namespace pivotal

#include "pivotal/rewards.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "pivotal/error.hpp"
#include "pivotal/segmenter.hpp"
#include "text_util.hpp"

namespace pivotal {

void RewardConfig::validate() const {
    auto check = [](bool ok, const char* what) {
        if (!ok) throw Error(ErrorCode::ConfigError, what);
    };
    check(std::isfinite(lambda_acc) && lambda_acc >= 0.0, "lambda_acc must be finite and >= 0");
    check(std::isfinite(lambda_form) && lambda_form >= 0.0, "lambda_form must be finite and >= 0");
    check(std::isfinite(lambda_pivot) && lambda_pivot >= 0.0, "lambda_pivot must be finite and >= 0");
    check(std::isfinite(lambda_len) && lambda_len >= 0.0, "lambda_len must be finite and >= 0");
    check(std::isfinite(alpha_ratio) && alpha_ratio >= 0.0 && alpha_ratio <= 1.0,
          "alpha_ratio must lie in [0, 1]");
    check(std::isfinite(lambda_reg) && lambda_reg >= 0.0, "lambda_reg must be finite and >= 0");
    check(l_gold > 0, "l_gold must be positive");
    check(std::isfinite(delta) && delta > 0.0 && delta <= 1.0, "delta must lie in (0, 1]");
    check(std::isfinite(lambda_len_slope) && lambda_len_slope >= 0.0,
          "lambda_len_slope must be finite and >= 0");
    check(std::isfinite(answer_tolerance) && answer_tolerance >= 0.0,
          "answer_tolerance must be finite and >= 0");
}

long whitespace_token_count(std::string_view text) {
    long count = 0;
    bool in_token = false;
    for (char c : text) {
        if (detail::is_ascii_space(c)) {
            in_token = false;
        } else if (!in_token) {
            in_token = true;
            ++count;
        }
    }
    return count;
}

double pivotal_reward(const ParsedTrace& parsed, const PivotalLexicon& lex,
                      const RewardConfig& cfg, PivotalDiagnostics* diag) {
    const long m = static_cast<long>(parsed.perceptions.size());
    long coupled = 0;
    for (std::size_t i = 0; i < parsed.perceptions.size(); ++i) {
        const auto sentence = preceding_sentence(parsed, i);
        if (sentence && contains_keyword(sentence->text, lex).matched) {
            ++coupled;
        }
    }
    const double s_pivot = m > 0 ? static_cast<double>(coupled) / static_cast<double>(m) : 0.0;
    const double m_excess =
        std::max(0.0, static_cast<double>(coupled) - cfg.alpha_ratio * static_cast<double>(m));
    const double reward = std::max(0.0, s_pivot - cfg.lambda_reg * m_excess);
    if (diag != nullptr) {
        diag->m = m;
        diag->m_coupled = coupled;
        diag->m_excess = m_excess;
        diag->s_pivot = s_pivot;
    }
    return reward;
}

double format_reward(const ParsedTrace& parsed) {
    return parsed.format_valid ? 1.0 : 0.0;
}

std::string normalize_answer(std::string_view answer) {
    std::string_view view = detail::trim(answer);
    // Peel outer \boxed{...} and $...$ wrappers until none remain.
    while (true) {
        if (view.size() >= 2 && view.front() == '$' && view.back() == '$') {
            view = detail::trim(view.substr(1, view.size() - 2));
            continue;
        }
        static constexpr std::string_view kBoxed = "\\boxed{";
        if (view.size() > kBoxed.size() && view.substr(0, kBoxed.size()) == kBoxed &&
            view.back() == '}') {
            // Only strip when the closing brace matches the opener.
            int depth = 1;
            bool wraps_all = true;
            for (std::size_t i = kBoxed.size(); i + 1 < view.size(); ++i) {
                if (view[i] == '{') ++depth;
                if (view[i] == '}') --depth;
                if (depth == 0) {
                    wraps_all = false;
                    break;
                }
            }
            if (wraps_all) {
                view = detail::trim(view.substr(kBoxed.size(), view.size() - kBoxed.size() - 1));
                continue;
            }
        }
        break;
    }
    std::string normalized = detail::normalize_whitespace(view);
    if (normalized.size() == 1 && normalized[0] >= 'a' && normalized[0] <= 'z') {
        normalized[0] = static_cast<char>(normalized[0] - ('a' - 'A'));
    }
    return normalized;
}

namespace {

std::optional<double> parse_plain_decimal(std::string_view text) {
    if (text.empty()) {
        return std::nullopt;
    }
    // Reject strtod extras (inf, nan, hex): require sign/digit/dot lead-in.
    const char first = text[0];
    if (first != '+' && first != '-' && first != '.' && !(first >= '0' && first <= '9')) {
        return std::nullopt;
    }
    std::string buffer(text);
    char* end = nullptr;
    const double value = std::strtod(buffer.c_str(), &end);
    if (end != buffer.c_str() + buffer.size()) {
        return std::nullopt;
    }
    if (!std::isfinite(value)) {
        return std::nullopt;
    }
    return value;
}

}  // namespace

std::optional<double> parse_numeric_answer(std::string_view normalized) {
    const std::size_t slash = normalized.find('/');
    if (slash != std::string_view::npos && slash > 0 && slash + 1 < normalized.size()) {
        const auto numerator = parse_plain_decimal(detail::trim(normalized.substr(0, slash)));
        const auto denominator = parse_plain_decimal(detail::trim(normalized.substr(slash + 1)));
        if (numerator && denominator && *denominator != 0.0) {
            return *numerator / *denominator;
        }
        return std::nullopt;
    }
    return parse_plain_decimal(normalized);
}

bool answers_equal(std::string_view answer, std::string_view ground_truth, double tolerance) {
    const std::string a = normalize_answer(answer);
    const std::string b = normalize_answer(ground_truth);
    if (a == b) {
        return true;
    }
    const auto av = parse_numeric_answer(a);
    const auto bv = parse_numeric_answer(b);
    if (av && bv) {
        return std::fabs(*av - *bv) <= tolerance * std::max(1.0, std::fabs(*bv));
    }
    return false;
}

double accuracy_reward(const ParsedTrace& parsed, std::string_view ground_truth,
                       const RewardConfig& cfg) {
    if (!parsed.answer_text) {
        return 0.0;
    }
    return answers_equal(*parsed.answer_text, ground_truth, cfg.answer_tolerance) ? 1.0 : 0.0;
}

double length_reward(const ParsedTrace& parsed, double r_acc, const RewardConfig& cfg,
                     const TokenCounter& tokens) {
    if (r_acc == 0.0) {
        return 0.0;
    }
    const long length = tokens ? tokens(parsed.response) : whitespace_token_count(parsed.response);
    const long delta_l = length - cfg.l_gold;
    if (delta_l <= 0) {
        return 1.0;
    }
    return std::max(0.0, cfg.delta - cfg.lambda_len_slope * static_cast<double>(delta_l));
}

RewardBreakdown composite_reward(const ParsedTrace& parsed, std::string_view ground_truth,
                                 const PivotalLexicon& lex, const RewardConfig& cfg,
                                 const TokenCounter& tokens) {
    RewardBreakdown out;
    PivotalDiagnostics diag;
    out.r_pivot = pivotal_reward(parsed, lex, cfg, &diag);
    out.m = diag.m;
    out.m_coupled = diag.m_coupled;
    out.m_excess = diag.m_excess;
    out.s_pivot = diag.s_pivot;

    out.r_form = format_reward(parsed);
    out.r_acc = accuracy_reward(parsed, ground_truth, cfg);
    out.r_len = length_reward(parsed, out.r_acc, cfg, tokens);

    out.length_tokens =
        tokens ? tokens(parsed.response) : whitespace_token_count(parsed.response);
    out.delta_l = out.length_tokens - cfg.l_gold;

    out.r_total = cfg.lambda_acc * out.r_acc + cfg.lambda_form * out.r_form +
                  cfg.lambda_pivot * out.r_pivot + cfg.lambda_len * out.r_len;
    return out;
}

}  // namespace pivotal

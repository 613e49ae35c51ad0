#pragma once

// Seeded random generators for property tests. Each generator documents
// exactly what it guarantees so the paired oracle can rely on it.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "pivotal/rewards.hpp"
#include "pivotal/trace.hpp"

namespace gen {

class TestRng {
  public:
    explicit TestRng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Inclusive bounds.
    int range(int lo, int hi) {
        return lo + static_cast<int>(uniform() * static_cast<double>(hi - lo + 1));
    }

    bool chance(double p) { return uniform() < p; }

    template <typename T>
    const T& pick(const std::vector<T>& items) {
        return items[static_cast<std::size_t>(range(0, static_cast<int>(items.size()) - 1))];
    }

    std::mt19937_64& engine() { return engine_; }

  private:
    std::mt19937_64 engine_;
};

// Sentence banks. Keyword sentences carry at least one lexicon phrase; plain
// sentences carry none (nouns chosen away from the lexicon's verbs and
// ordinals). None contain tag literals or backslashes.
inline const std::vector<std::string>& keyword_sentences() {
    static const std::vector<std::string> bank = {
        "Wait, is that right?",
        "Let me double-check the figure.",
        "First, note the given lengths.",
        "However, the angle might differ.",
        "Let me check again to be safe.",
        "Hold on, the label reads nine.",
        "Maybe the radius is larger.",
        "Next, add the two values.",
    };
    return bank;
}

inline const std::vector<std::string>& plain_sentences() {
    static const std::vector<std::string> bank = {
        "The triangle has three equal sides.",
        "Each radius measures one centimeter.",
        "The two segments share an endpoint.",
        "Angle ABC equals angle ACB.",
        "The circle passes through both points.",
        "The sum of the values equals nine.",
        "Both diagonals cross at the midpoint.",
    };
    return bank;
}

inline const std::vector<std::string>& observations() {
    static const std::vector<std::string> bank = {
        "The chart lists a value of nine",
        "The figure marks the segment as one centimeter",
        "The label under the axis reads twelve",
    };
    return bank;
}

struct TraceSpec {
    pivotal::RawTrace raw;
    bool mutated = false;  // a structural mutation was applied
};

// A structurally valid trace: optional plain prefix, a think block that
// interleaves sentences and perception segments (sometimes adjacent
// perceptions), and a suffix that may carry a boxed answer, a bare answer,
// or nothing. Ground truth is sometimes right, sometimes wrong, sometimes a
// numeric pair like 5/2 vs 2.5.
inline TraceSpec random_trace(TestRng& rng, bool allow_mutation) {
    TraceSpec spec;
    std::string body;
    const int blocks = rng.range(0, 6);
    for (int b = 0; b < blocks; ++b) {
        if (rng.chance(0.8)) {
            body += rng.chance(0.5) ? rng.pick(keyword_sentences()) : rng.pick(plain_sentences());
            body += ' ';
        }
        if (rng.chance(0.5)) {
            body += "<perception>";
            body += rng.pick(observations());
            body += "</perception> ";
        }
    }

    std::string prefix;
    if (rng.chance(0.2)) {
        prefix = "Answer follows. ";
    }

    const int answer_kind = rng.range(0, 5);
    std::string suffix;
    std::string truth;
    switch (answer_kind) {
        case 0:  // correct letter
            suffix = "\n\\boxed{B}";
            truth = "B";
            break;
        case 1:  // wrong letter
            suffix = "\n\\boxed{A}";
            truth = "B";
            break;
        case 2:  // numeric, equal through rational parsing
            suffix = "\n\\boxed{2.5}";
            truth = "5/2";
            break;
        case 3:  // bare trailing answer, no box
            suffix = "\n B";
            truth = "B";
            break;
        case 4:  // no answer at all
            suffix = "";
            truth = "B";
            break;
        default:  // nested braces
            suffix = "\n\\boxed{\\frac{5}{2}}";
            truth = "\\frac{5}{2}";
            break;
    }

    std::string response = prefix + "<think>" + body + "</think>" + suffix;

    if (allow_mutation && rng.chance(0.2)) {
        // One structural mutation: delete one tag occurrence or splice in a
        // stray tag at a random byte position.
        spec.mutated = true;
        static const std::vector<std::string> tags = {"<think>", "</think>", "<perception>",
                                                      "</perception>"};
        const std::string& tag = rng.pick(tags);
        if (rng.chance(0.5)) {
            const std::size_t at = response.find(tag);
            if (at != std::string::npos) {
                response.erase(at, tag.size());
            }
        } else {
            const auto at = static_cast<std::size_t>(
                rng.range(0, static_cast<int>(response.size())));
            response.insert(at, tag);
        }
    }

    spec.raw.id = "gen";
    spec.raw.prompt = "question";
    spec.raw.response = std::move(response);
    spec.raw.ground_truth = std::move(truth);
    return spec;
}

// Reward config with randomized thresholds so every branch of the length
// and regularizer formulas gets exercised.
inline pivotal::RewardConfig random_reward_config(TestRng& rng) {
    pivotal::RewardConfig cfg;
    cfg.lambda_acc = rng.uniform() * 2.0;
    cfg.lambda_form = rng.uniform();
    cfg.lambda_pivot = rng.uniform();
    cfg.lambda_len = rng.uniform();
    cfg.alpha_ratio = rng.uniform();
    cfg.lambda_reg = rng.uniform() * 0.5;
    cfg.l_gold = rng.range(5, 60);
    cfg.delta = 0.25 + 0.75 * rng.uniform();
    cfg.lambda_len_slope = rng.uniform() * 0.05;
    return cfg;
}

}  // namespace gen

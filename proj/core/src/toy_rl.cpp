#include "pivotal/toy_rl.hpp"

#include <cmath>
#include <cstdio>

#include "pivotal/error.hpp"
#include "text_util.hpp"

namespace pivotal {

double ToyRng::uniform() {
    // 53 random bits -> [0, 1); avoids distribution objects so the stream is
    // identical across standard libraries.
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::size_t ToyRng::uniform_index(std::size_t n) {
    if (n <= 1) {
        return 0;
    }
    const auto idx = static_cast<std::size_t>(uniform() * static_cast<double>(n));
    return idx < n ? idx : n - 1;
}

ToyEnvConfig ToyEnvConfig::defaults() {
    ToyEnvConfig env;
    env.num_slots = 6;
    env.keyword_sentence_pool = {
        "Wait, is that right?",
        "Let me double-check the figure.",
        "First, note the given lengths.",
        "However, the angle might differ.",
        "Let me check again to be safe.",
    };
    env.plain_sentence_pool = {
        "The triangle has three equal sides.",
        "Each radius measures one centimeter.",
        "The two segments share an endpoint.",
        "Angle ABC equals angle ACB.",
        "The circle passes through both points.",
    };
    env.perception_text = "The diagram labels the segment as one centimeter.";
    env.answer_alphabet = {"A", "B"};
    env.seed = 1;
    return env;
}

namespace {

bool ends_with_single_terminator(const std::string& sentence) {
    if (sentence.empty()) {
        return false;
    }
    std::size_t terminators = 0;
    std::size_t last_end = 0;
    std::size_t pos = 0;
    while (pos < sentence.size()) {
        const auto cp = detail::decode_utf8(sentence, pos);
        if (detail::is_terminator_cp(cp.value)) {
            ++terminators;
            last_end = pos + cp.length;
        }
        pos += cp.length;
    }
    return terminators == 1 && last_end == sentence.size();
}

void check_no_tags(const std::string& text, const char* what) {
    const TagConfig tags;
    for (const auto* literal : {&tags.think_open, &tags.think_close, &tags.perception_open,
                                &tags.perception_close}) {
        if (text.find(*literal) != std::string::npos) {
            throw Error(ErrorCode::ConfigError,
                        std::string(what) + " must not contain tag literals: '" + text + "'");
        }
    }
}

}  // namespace

void ToyEnvConfig::validate(const PivotalLexicon& lex) const {
    if (num_slots < 1) {
        throw Error(ErrorCode::ConfigError, "num_slots must be >= 1");
    }
    if (keyword_sentence_pool.empty() || plain_sentence_pool.empty()) {
        throw Error(ErrorCode::ConfigError, "sentence pools must be non-empty");
    }
    for (const auto& sentence : keyword_sentence_pool) {
        check_no_tags(sentence, "keyword pool sentence");
        if (!ends_with_single_terminator(sentence)) {
            throw Error(ErrorCode::ConfigError,
                        "pool sentences must end with exactly one terminator: '" + sentence + "'");
        }
        if (!contains_keyword(sentence, lex).matched) {
            throw Error(ErrorCode::ConfigError,
                        "keyword pool sentence has no pivotal keyword: '" + sentence + "'");
        }
    }
    for (const auto& sentence : plain_sentence_pool) {
        check_no_tags(sentence, "plain pool sentence");
        if (!ends_with_single_terminator(sentence)) {
            throw Error(ErrorCode::ConfigError,
                        "pool sentences must end with exactly one terminator: '" + sentence + "'");
        }
        const auto match = contains_keyword(sentence, lex);
        if (match.matched) {
            throw Error(ErrorCode::ConfigError, "plain pool sentence contains keyword '" +
                                                    match.phrases.front() + "': '" + sentence +
                                                    "'");
        }
    }
    check_no_tags(perception_text, "perception_text");
    if (detail::trim(perception_text).empty()) {
        throw Error(ErrorCode::ConfigError, "perception_text must not be blank");
    }
    if (answer_alphabet[0].empty() || answer_alphabet[1].empty() ||
        answer_alphabet[0] == answer_alphabet[1]) {
        throw Error(ErrorCode::ConfigError, "answer alphabet needs two distinct symbols");
    }
    for (const auto& symbol : answer_alphabet) {
        if (symbol == "Z") {
            throw Error(ErrorCode::ConfigError,
                        "answer symbol 'Z' is reserved for ungrounded episodes");
        }
    }
}

std::array<double, PolicyParams::dimension> PolicyParams::flatten() const {
    return {slot_type_logits[0],
            slot_type_logits[1],
            perceive_logits_given_keyword[0],
            perceive_logits_given_keyword[1],
            perceive_logits_given_plain[0],
            perceive_logits_given_plain[1],
            answer_logits[0],
            answer_logits[1]};
}

PolicyParams PolicyParams::unflatten(const std::array<double, dimension>& flat) {
    PolicyParams p;
    p.slot_type_logits = {flat[0], flat[1]};
    p.perceive_logits_given_keyword = {flat[2], flat[3]};
    p.perceive_logits_given_plain = {flat[4], flat[5]};
    p.answer_logits = {flat[6], flat[7]};
    return p;
}

namespace {

const std::array<double, 2>& head_logits(const PolicyParams& params, DecisionHead head) {
    switch (head) {
        case DecisionHead::SlotType: return params.slot_type_logits;
        case DecisionHead::PerceiveGivenKeyword: return params.perceive_logits_given_keyword;
        case DecisionHead::PerceiveGivenPlain: return params.perceive_logits_given_plain;
        case DecisionHead::Answer: return params.answer_logits;
    }
    return params.slot_type_logits;  // unreachable
}

std::size_t head_offset(DecisionHead head) {
    switch (head) {
        case DecisionHead::SlotType: return 0;
        case DecisionHead::PerceiveGivenKeyword: return 2;
        case DecisionHead::PerceiveGivenPlain: return 4;
        case DecisionHead::Answer: return 6;
    }
    return 0;
}

double logsumexp2(double a, double b) {
    const double hi = std::max(a, b);
    return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

// P(class 0) for a two-way softmax.
double prob0(const std::array<double, 2>& logits) {
    return 1.0 / (1.0 + std::exp(logits[1] - logits[0]));
}

double choice_logprob(const std::array<double, 2>& logits, int choice) {
    return logits[static_cast<std::size_t>(choice)] - logsumexp2(logits[0], logits[1]);
}

}  // namespace

ToyRollout rollout(const PolicyParams& params, const ToyEnvConfig& env, ToyRng& rng) {
    const TagConfig tags;
    ToyRollout out;
    std::string body;

    auto decide = [&](DecisionHead head) {
        const auto& logits = head_logits(params, head);
        const int choice = rng.uniform() < prob0(logits) ? 0 : 1;
        out.record.decisions.push_back({head, choice});
        out.logprobs.push_back(choice_logprob(logits, choice));
        return choice;
    };

    for (int slot = 0; slot < env.num_slots; ++slot) {
        const bool keyword_slot = decide(DecisionHead::SlotType) == 0;
        const auto& pool = keyword_slot ? env.keyword_sentence_pool : env.plain_sentence_pool;
        body += pool[rng.uniform_index(pool.size())];
        body += ' ';
        const bool perceive = decide(keyword_slot ? DecisionHead::PerceiveGivenKeyword
                                                  : DecisionHead::PerceiveGivenPlain) == 0;
        if (perceive) {
            body += tags.perception_open;
            body += env.perception_text;
            body += tags.perception_close;
            body += ' ';
            ++out.perception_count;
            if (keyword_slot) {
                ++out.coupled_count;
            }
        }
    }
    const int answer_choice = decide(DecisionHead::Answer);

    out.trace.id = "toy";
    out.trace.prompt = "toy-episode";
    out.trace.response = tags.think_open + body + tags.think_close + "\n\\boxed{" +
                         env.answer_alphabet[static_cast<std::size_t>(answer_choice)] + "}";
    // Grounding rule: correctness is unreachable without at least one
    // perception, so the accuracy reward alone demands visual grounding.
    out.trace.ground_truth = out.perception_count > 0 ? env.answer_alphabet[0] : "Z";
    return out;
}

std::vector<double> decision_logprobs(const PolicyParams& params, const DecisionRecord& record) {
    std::vector<double> out;
    out.reserve(record.decisions.size());
    for (const auto& decision : record.decisions) {
        out.push_back(choice_logprob(head_logits(params, decision.head), decision.choice));
    }
    return out;
}

std::vector<std::array<double, PolicyParams::dimension>> logprob_gradients(
    const PolicyParams& params, const DecisionRecord& record) {
    std::vector<std::array<double, PolicyParams::dimension>> rows;
    rows.reserve(record.decisions.size());
    for (const auto& decision : record.decisions) {
        std::array<double, PolicyParams::dimension> row{};
        const auto& logits = head_logits(params, decision.head);
        const double p0 = prob0(logits);
        const std::size_t offset = head_offset(decision.head);
        // d log p(c) / d logit_j = 1{j = c} - p_j
        row[offset] = (decision.choice == 0 ? 1.0 : 0.0) - p0;
        row[offset + 1] = (decision.choice == 1 ? 1.0 : 0.0) - (1.0 - p0);
        rows.push_back(row);
    }
    return rows;
}

DecisionRecord scripted_expert_record(const ToyEnvConfig& env, ToyRng& rng) {
    DecisionRecord record;
    for (int slot = 0; slot < env.num_slots; ++slot) {
        const bool keyword_slot = rng.uniform() < 0.5;
        record.decisions.push_back({DecisionHead::SlotType, keyword_slot ? 0 : 1});
        // Perceive exactly after keyword sentences.
        if (keyword_slot) {
            record.decisions.push_back({DecisionHead::PerceiveGivenKeyword, 0});
        } else {
            record.decisions.push_back({DecisionHead::PerceiveGivenPlain, 1});
        }
    }
    record.decisions.push_back({DecisionHead::Answer, 0});
    return record;
}

PolicyParams sft_warmup(PolicyParams params, const std::vector<DecisionRecord>& demonstrations,
                        int steps, double learning_rate, std::vector<double>* nll_curve) {
    std::size_t total_decisions = 0;
    for (const auto& record : demonstrations) {
        total_decisions += record.decisions.size();
    }
    if (total_decisions == 0) {
        throw Error(ErrorCode::EmptyDemos, "no demonstrated decisions to fit");
    }
    const double inv_d = 1.0 / static_cast<double>(total_decisions);

    auto mean_nll = [&](const PolicyParams& p) {
        double nll = 0.0;
        for (const auto& record : demonstrations) {
            for (double lp : decision_logprobs(p, record)) {
                nll -= lp;
            }
        }
        return nll * inv_d;
    };

    for (int step = 0; step < steps; ++step) {
        if (nll_curve != nullptr) {
            nll_curve->push_back(mean_nll(params));
        }
        std::array<double, PolicyParams::dimension> grad{};
        for (const auto& record : demonstrations) {
            const auto rows = logprob_gradients(params, record);
            for (const auto& row : rows) {
                for (std::size_t k = 0; k < grad.size(); ++k) {
                    grad[k] -= row[k];  // d(-lp)/d(theta)
                }
            }
        }
        auto flat = params.flatten();
        for (std::size_t k = 0; k < flat.size(); ++k) {
            flat[k] -= learning_rate * grad[k] * inv_d;
        }
        params = PolicyParams::unflatten(flat);
    }
    if (nll_curve != nullptr) {
        nll_curve->push_back(mean_nll(params));
    }
    return params;
}

TrainResult train(PolicyParams params, const ToyEnvConfig& env, const RewardConfig& reward_cfg,
                  const DapoConfig& dapo_cfg, const TrainConfig& train_cfg,
                  const PivotalLexicon& lex, ToyRng& rng) {
    env.validate(lex);
    reward_cfg.validate();
    dapo_cfg.validate();
    if (train_cfg.group_size < 2) {
        throw Error(ErrorCode::GroupTooSmall, "group_size must be >= 2");
    }

    TrainResult result;
    result.metrics.reserve(static_cast<std::size_t>(std::max(0, train_cfg.iterations)));
    const auto group_size = static_cast<std::size_t>(train_cfg.group_size);

    for (int iteration = 1; iteration <= train_cfg.iterations; ++iteration) {
        // Roll out one group under the current (old) policy and score it
        // through the full parse -> reward path.
        std::vector<ToyRollout> rollouts;
        rollouts.reserve(group_size);
        std::vector<RewardBreakdown> breakdowns;
        breakdowns.reserve(group_size);
        RolloutGroup group;
        group.query_id = "toy-" + std::to_string(iteration);

        for (std::size_t g = 0; g < group_size; ++g) {
            ToyRollout r = rollout(params, env, rng);
            r.trace.id = group.query_id + "-" + std::to_string(g);
            const ParsedTrace parsed = parse_trace(r.trace);
            breakdowns.push_back(composite_reward(parsed, r.trace.ground_truth, lex, reward_cfg));
            rollouts.push_back(std::move(r));
        }

        IterationMetrics metrics;
        metrics.iteration = iteration;
        long m_sum = 0;
        long coupled_sum = 0;
        for (std::size_t g = 0; g < group_size; ++g) {
            const auto& b = breakdowns[g];
            metrics.mean_reward += b.r_total;
            metrics.accuracy += b.r_acc;
            metrics.s_pivot += b.s_pivot;
            metrics.mean_m += static_cast<double>(b.m);
            metrics.grounded_rate += b.m >= 1 ? 1.0 : 0.0;
            m_sum += b.m;
            coupled_sum += b.m_coupled;
        }
        const double inv_g = 1.0 / static_cast<double>(group_size);
        metrics.mean_reward *= inv_g;
        metrics.accuracy *= inv_g;
        metrics.s_pivot *= inv_g;
        metrics.mean_m *= inv_g;
        metrics.grounded_rate *= inv_g;
        metrics.coupled_fraction =
            m_sum > 0 ? static_cast<double>(coupled_sum) / static_cast<double>(m_sum) : 0.0;

        std::vector<double> rewards(group_size);
        group.trajectories.resize(group_size);
        for (std::size_t g = 0; g < group_size; ++g) {
            rewards[g] = breakdowns[g].r_total;
            auto& traj = group.trajectories[g];
            traj.old_logprobs = rollouts[g].logprobs;
            traj.new_logprobs = decision_logprobs(params, rollouts[g].record);
            traj.reward = rewards[g];
            traj.correct = breakdowns[g].r_acc > 0.5;
        }

        if (!group_has_mixed_correctness(group)) {
            metrics.filtered = true;
            result.metrics.push_back(metrics);
            continue;
        }

        const auto advantages = group_advantages(rewards, dapo_cfg);
        std::vector<std::vector<std::array<double, PolicyParams::dimension>>> rows(group_size);
        for (std::size_t g = 0; g < group_size; ++g) {
            rows[g] = logprob_gradients(params, rollouts[g].record);
        }
        const auto grad = surrogate_gradient(
            group, advantages, dapo_cfg, PolicyParams::dimension,
            [&rows](std::size_t i, std::size_t t) {
                return std::vector<double>(rows[i][t].begin(), rows[i][t].end());
            });

        auto flat = params.flatten();
        for (std::size_t k = 0; k < flat.size(); ++k) {
            flat[k] += train_cfg.learning_rate * grad[k];  // gradient ascent
        }
        params = PolicyParams::unflatten(flat);
        result.metrics.push_back(metrics);
    }

    result.params = params;
    return result;
}

}  // namespace pivotal

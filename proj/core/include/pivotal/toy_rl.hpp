#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "pivotal/grpo.hpp"
#include "pivotal/lexicon.hpp"
#include "pivotal/rewards.hpp"
#include "pivotal/trace.hpp"

namespace pivotal {

/// Deterministic RNG wrapper. Draws are produced by hand so two runs of the
/// same binary with the same seed give bit-identical streams regardless of
/// standard-library distribution internals.
class ToyRng {
  public:
    explicit ToyRng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform double in [0, 1).
    double uniform();

    /// Uniform index in [0, n).
    std::size_t uniform_index(std::size_t n);

  private:
    std::mt19937_64 engine_;
};

/// Synthetic episode template. Every episode emits num_slots sentences; each
/// sentence comes from the keyword pool (contains at least one pivotal
/// keyword) or the plain pool (contains none), may be followed by a
/// perception segment, and the episode ends with a boxed answer letter.
struct ToyEnvConfig {
    int num_slots = 6;
    std::vector<std::string> keyword_sentence_pool;
    std::vector<std::string> plain_sentence_pool;
    std::string perception_text;
    std::array<std::string, 2> answer_alphabet{"A", "B"};
    std::uint64_t seed = 1;

    static ToyEnvConfig defaults();

    /// Checks pool membership against the lexicon: every keyword-pool
    /// sentence must match, no plain-pool sentence may. Throws
    /// Error(ConfigError) on violation.
    void validate(const PivotalLexicon& lex) const;
};

/// The policy's full parameter vector: three two-way softmax heads for the
/// per-slot decisions plus one for the answer. Dimension 8.
struct PolicyParams {
    std::array<double, 2> slot_type_logits{};              // {keyword, plain}
    std::array<double, 2> perceive_logits_given_keyword{}; // {perceive, skip}
    std::array<double, 2> perceive_logits_given_plain{};   // {perceive, skip}
    std::array<double, 2> answer_logits{};                 // {A, B}

    static constexpr std::size_t dimension = 8;

    std::array<double, dimension> flatten() const;
    static PolicyParams unflatten(const std::array<double, dimension>& flat);
};

enum class DecisionHead { SlotType, PerceiveGivenKeyword, PerceiveGivenPlain, Answer };

struct Decision {
    DecisionHead head = DecisionHead::SlotType;
    int choice = 0;  // index into the head's two classes
};

/// The sampled decisions of one episode; these are the "tokens" the
/// group-relative objective operates on.
struct DecisionRecord {
    std::vector<Decision> decisions;
};

struct ToyRollout {
    RawTrace trace;
    std::vector<double> logprobs;  // one entry per decision, sampling policy
    DecisionRecord record;
    int perception_count = 0;
    int coupled_count = 0;  // perceptions taken right after a keyword sentence
};

/// Samples one episode. Ground truth is "A" when the episode perceived at
/// least once and the unattainable "Z" otherwise, so correct answers require
/// grounding. The emitted trace is format-valid by construction.
ToyRollout rollout(const PolicyParams& params, const ToyEnvConfig& env, ToyRng& rng);

/// Log-probability of each recorded decision under `params`.
std::vector<double> decision_logprobs(const PolicyParams& params, const DecisionRecord& record);

/// Exact softmax score-function gradients, one row per decision, aligned
/// with decision_logprobs.
std::vector<std::array<double, PolicyParams::dimension>> logprob_gradients(
    const PolicyParams& params, const DecisionRecord& record);

/// Scripted demonstrator: random slot types, always perceives after keyword
/// sentences and never after plain ones, always answers A.
DecisionRecord scripted_expert_record(const ToyEnvConfig& env, ToyRng& rng);

/// Gradient descent on the mean negative log-likelihood of demonstrated
/// decisions. When nll_curve is given it receives the loss before each step
/// plus the final value (steps + 1 entries).
/// Throws Error(EmptyDemos) when there is nothing to fit.
PolicyParams sft_warmup(PolicyParams params, const std::vector<DecisionRecord>& demonstrations,
                        int steps, double learning_rate,
                        std::vector<double>* nll_curve = nullptr);

struct TrainConfig {
    int iterations = 2000;
    int group_size = 8;
    double learning_rate = 0.05;
};

/// Per-iteration training diagnostics. The first six fields are the CSV
/// columns emitted by the train command.
struct IterationMetrics {
    int iteration = 0;
    double mean_reward = 0.0;
    double accuracy = 0.0;
    double s_pivot = 0.0;
    double coupled_fraction = 0.0;  // sum(m_coupled) / sum(m) over the group
    double mean_m = 0.0;
    double grounded_rate = 0.0;  // fraction of episodes with >= 1 perception
    bool filtered = false;       // group rejected by the dynamic filter
};

struct TrainResult {
    PolicyParams params;
    std::vector<IterationMetrics> metrics;
};

/// Group-relative policy optimization on the toy environment: each iteration
/// rolls out a group under the current policy, scores it with the composite
/// reward, drops the group when correctness is uniform, and otherwise ascends
/// the clipped surrogate gradient. Deterministic given the RNG state.
TrainResult train(PolicyParams params, const ToyEnvConfig& env, const RewardConfig& reward_cfg,
                  const DapoConfig& dapo_cfg, const TrainConfig& train_cfg,
                  const PivotalLexicon& lex, ToyRng& rng);

}  // namespace pivotal

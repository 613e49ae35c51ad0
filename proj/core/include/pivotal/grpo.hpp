#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace pivotal {

/// One trajectory inside a rollout group. The log-prob lists are aligned
/// token-by-token: old under the behavior policy that sampled the
/// trajectory, new under the policy being optimized.
struct TrajectoryRollout {
    std::vector<double> old_logprobs;
    std::vector<double> new_logprobs;
    double reward = 0.0;
    bool correct = false;
};

/// G trajectories sampled for one query under the old policy.
struct RolloutGroup {
    std::string query_id;
    std::vector<TrajectoryRollout> trajectories;

    std::size_t total_tokens() const;
};

/// Clipping and normalization constants for the clipped surrogate objective.
struct DapoConfig {
    double eps_low = 0.2;      // lower clip: ratios below 1 - eps_low
    double eps_high = 0.28;    // upper clip: ratios above 1 + eps_high
    double std_epsilon = 1e-8; // added to the reward std when normalizing

    void validate() const;  // throws Error(ConfigError)
};

/// Group-relative advantages: (R_i - mean) / (std + std_epsilon), with the
/// population standard deviation. Every token of trajectory i carries the
/// same advantage. Throws Error(GroupTooSmall) when fewer than 2 rewards.
std::vector<double> group_advantages(const std::vector<double>& rewards, const DapoConfig& cfg);

bool group_has_mixed_correctness(const RolloutGroup& group);

/// Keeps only groups with at least one correct and at least one incorrect
/// trajectory; all-correct and all-incorrect groups carry no learning signal
/// under group-relative advantages.
std::vector<RolloutGroup> dynamic_filter(std::vector<RolloutGroup> groups);

/// Token-mean clipped surrogate:
///   J = (1/N) sum_i sum_t min(r A, clip(r, 1-eps_low, 1+eps_high) A)
/// with r = exp(new_lp - old_lp) and N the total token count of the group.
/// Throws Error(MisalignedLogprobs) when lists disagree in length.
double surrogate_objective(const RolloutGroup& group, const std::vector<double>& advantages,
                           const DapoConfig& cfg);

/// Supplies d(new_logprob[traj][token]) / d(theta) as a dense row.
using LogprobJacobian =
    std::function<std::vector<double>(std::size_t traj, std::size_t token)>;

/// Exact gradient of surrogate_objective with respect to the policy
/// parameters. Tokens where the clipped branch is active and binding
/// contribute nothing. Accumulation runs in fixed index order so results are
/// reproducible bit-for-bit.
std::vector<double> surrogate_gradient(const RolloutGroup& group,
                                       const std::vector<double>& advantages,
                                       const DapoConfig& cfg, std::size_t param_dim,
                                       const LogprobJacobian& jacobian);

}  // namespace pivotal

#include "pivotal/grpo.hpp"

#include <algorithm>
#include <cmath>

#include "pivotal/error.hpp"

namespace pivotal {

std::size_t RolloutGroup::total_tokens() const {
    std::size_t n = 0;
    for (const auto& traj : trajectories) {
        n += traj.old_logprobs.size();
    }
    return n;
}

void DapoConfig::validate() const {
    auto check = [](bool ok, const char* what) {
        if (!ok) throw Error(ErrorCode::ConfigError, what);
    };
    check(std::isfinite(eps_low) && eps_low > 0.0 && eps_low < 1.0, "eps_low must lie in (0, 1)");
    check(std::isfinite(eps_high) && eps_high > 0.0 && eps_high < 1.0,
          "eps_high must lie in (0, 1)");
    check(std::isfinite(std_epsilon) && std_epsilon >= 0.0, "std_epsilon must be >= 0");
}

std::vector<double> group_advantages(const std::vector<double>& rewards, const DapoConfig& cfg) {
    const std::size_t g = rewards.size();
    if (g < 2) {
        throw Error(ErrorCode::GroupTooSmall,
                    "need at least 2 rewards, got " + std::to_string(g));
    }
    double mean = 0.0;
    for (double r : rewards) {
        mean += r;
    }
    mean /= static_cast<double>(g);

    double variance = 0.0;
    for (double r : rewards) {
        const double d = r - mean;
        variance += d * d;
    }
    variance /= static_cast<double>(g);  // population variance
    const double denom = std::sqrt(variance) + cfg.std_epsilon;

    std::vector<double> advantages(g);
    for (std::size_t i = 0; i < g; ++i) {
        advantages[i] = (rewards[i] - mean) / denom;
    }
    return advantages;
}

bool group_has_mixed_correctness(const RolloutGroup& group) {
    bool any_correct = false;
    bool any_incorrect = false;
    for (const auto& traj : group.trajectories) {
        (traj.correct ? any_correct : any_incorrect) = true;
    }
    return any_correct && any_incorrect;
}

std::vector<RolloutGroup> dynamic_filter(std::vector<RolloutGroup> groups) {
    std::vector<RolloutGroup> kept;
    kept.reserve(groups.size());
    for (auto& group : groups) {
        if (group_has_mixed_correctness(group)) {
            kept.push_back(std::move(group));
        }
    }
    return kept;
}

namespace {

void check_alignment(const RolloutGroup& group, const std::vector<double>& advantages) {
    if (advantages.size() != group.trajectories.size()) {
        throw Error(ErrorCode::MisalignedLogprobs,
                    "advantages size " + std::to_string(advantages.size()) +
                        " != group size " + std::to_string(group.trajectories.size()));
    }
    for (const auto& traj : group.trajectories) {
        if (traj.old_logprobs.size() != traj.new_logprobs.size()) {
            throw Error(ErrorCode::MisalignedLogprobs,
                        "old/new log-prob lists differ in length");
        }
    }
}

inline double clip_ratio(double r, const DapoConfig& cfg) {
    return std::clamp(r, 1.0 - cfg.eps_low, 1.0 + cfg.eps_high);
}

}  // namespace

double surrogate_objective(const RolloutGroup& group, const std::vector<double>& advantages,
                           const DapoConfig& cfg) {
    check_alignment(group, advantages);
    const std::size_t n = group.total_tokens();
    if (n == 0) {
        return 0.0;
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < group.trajectories.size(); ++i) {
        const auto& traj = group.trajectories[i];
        const double adv = advantages[i];
        for (std::size_t t = 0; t < traj.old_logprobs.size(); ++t) {
            const double ratio = std::exp(traj.new_logprobs[t] - traj.old_logprobs[t]);
            sum += std::min(ratio * adv, clip_ratio(ratio, cfg) * adv);
        }
    }
    return sum / static_cast<double>(n);
}

std::vector<double> surrogate_gradient(const RolloutGroup& group,
                                       const std::vector<double>& advantages,
                                       const DapoConfig& cfg, std::size_t param_dim,
                                       const LogprobJacobian& jacobian) {
    check_alignment(group, advantages);
    std::vector<double> grad(param_dim, 0.0);
    const std::size_t n = group.total_tokens();
    if (n == 0) {
        return grad;
    }
    for (std::size_t i = 0; i < group.trajectories.size(); ++i) {
        const auto& traj = group.trajectories[i];
        const double adv = advantages[i];
        for (std::size_t t = 0; t < traj.old_logprobs.size(); ++t) {
            const double ratio = std::exp(traj.new_logprobs[t] - traj.old_logprobs[t]);
            // The min selects the clipped (constant) branch when it is
            // strictly smaller; those tokens contribute no gradient.
            if (ratio * adv > clip_ratio(ratio, cfg) * adv) {
                continue;
            }
            const double scale = adv * ratio;  // d(ratio)/d(lp_new) = ratio
            const auto row = jacobian(i, t);
            if (row.size() != param_dim) {
                throw Error(ErrorCode::MisalignedLogprobs,
                            "jacobian row has wrong dimension");
            }
            for (std::size_t k = 0; k < param_dim; ++k) {
                grad[k] += scale * row[k];
            }
        }
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    for (double& g : grad) {
        g *= inv_n;
    }
    return grad;
}

}  // namespace pivotal

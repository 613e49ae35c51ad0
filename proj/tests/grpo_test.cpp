#include "doctest.h"

#include <cmath>
#include <numeric>

#include "pivotal/error.hpp"
#include "pivotal/grpo.hpp"
#include "pivotal/toy_rl.hpp"
#include "support/generators.hpp"

using namespace pivotal;

namespace {

RolloutGroup group_from(const std::vector<std::vector<double>>& old_lps,
                        const std::vector<std::vector<double>>& new_lps,
                        const std::vector<bool>& correct) {
    RolloutGroup group;
    group.query_id = "q";
    for (std::size_t i = 0; i < old_lps.size(); ++i) {
        TrajectoryRollout traj;
        traj.old_logprobs = old_lps[i];
        traj.new_logprobs = new_lps[i];
        traj.correct = correct.empty() ? false : correct[i];
        group.trajectories.push_back(std::move(traj));
    }
    return group;
}

}  // namespace

TEST_CASE("group advantages") {
    DapoConfig cfg;
    SUBCASE("alternating rewards normalize to unit advantages") {
        cfg.std_epsilon = 0.0;
        const auto adv = group_advantages({1, 0, 1, 0}, cfg);
        REQUIRE(adv.size() == 4);
        CHECK(adv[0] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(adv[1] == doctest::Approx(-1.0).epsilon(1e-12));
        CHECK(adv[2] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(adv[3] == doctest::Approx(-1.0).epsilon(1e-12));
    }
    SUBCASE("zero-variance group gives zero advantages with the epsilon guard") {
        cfg.std_epsilon = 1e-8;
        for (const double adv : group_advantages({2.5, 2.5, 2.5}, cfg)) {
            CHECK(adv == 0.0);
        }
    }
    SUBCASE("groups of fewer than two rewards are rejected") {
        CHECK_THROWS_AS(static_cast<void>(group_advantages({1.0}, cfg)), Error);
        CHECK_THROWS_AS(static_cast<void>(group_advantages({}, cfg)), Error);
    }
    SUBCASE("random groups come out centered with unit spread") {
        cfg.std_epsilon = 0.0;
        gen::TestRng rng(31);
        for (int trial = 0; trial < 200; ++trial) {
            std::vector<double> rewards;
            const int g = rng.range(2, 12);
            for (int i = 0; i < g; ++i) {
                rewards.push_back(rng.uniform() * 4.0 - 2.0);
            }
            // Skip the measure-zero zero-variance draws.
            const double mean =
                std::accumulate(rewards.begin(), rewards.end(), 0.0) / rewards.size();
            double var = 0.0;
            for (const double r : rewards) {
                var += (r - mean) * (r - mean);
            }
            if (var == 0.0) {
                continue;
            }
            const auto adv = group_advantages(rewards, cfg);
            double adv_sum = 0.0, adv_sq = 0.0;
            for (const double a : adv) {
                adv_sum += a;
                adv_sq += a * a;
            }
            CHECK(std::fabs(adv_sum) <= 1e-9 * static_cast<double>(g));
            CHECK(std::sqrt(adv_sq / static_cast<double>(g)) ==
                  doctest::Approx(1.0).epsilon(1e-9));
        }
    }
    SUBCASE("shifting every reward by a constant leaves advantages unchanged") {
        cfg.std_epsilon = 1e-8;
        const std::vector<double> rewards = {0.3, 1.7, 0.9, 2.2};
        std::vector<double> shifted = rewards;
        for (double& r : shifted) {
            r += 5.0;
        }
        const auto a = group_advantages(rewards, cfg);
        const auto b = group_advantages(shifted, cfg);
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("dynamic filter") {
    auto flag_group = [](std::initializer_list<bool> flags) {
        RolloutGroup group;
        for (const bool f : flags) {
            TrajectoryRollout traj;
            traj.correct = f;
            group.trajectories.push_back(traj);
        }
        return group;
    };
    SUBCASE("fixtures") {
        CHECK_FALSE(group_has_mixed_correctness(flag_group({true, true, true, true})));
        CHECK(group_has_mixed_correctness(flag_group({true, false, false, false})));
        CHECK_FALSE(group_has_mixed_correctness(flag_group({false, false, false, false})));
    }
    SUBCASE("filter keeps only mixed groups and is idempotent") {
        std::vector<RolloutGroup> groups;
        groups.push_back(flag_group({true, true}));
        groups.push_back(flag_group({true, false}));
        groups.push_back(flag_group({false, false}));
        auto kept = dynamic_filter(groups);
        REQUIRE(kept.size() == 1);
        CHECK(group_has_mixed_correctness(kept[0]));
        auto again = dynamic_filter(kept);
        CHECK(again.size() == kept.size());
    }
    SUBCASE("kept fraction over fair coins matches 1 - 2^(1-G)") {
        gen::TestRng rng(37);
        const int g = 8;
        const int trials = 4000;
        int kept = 0;
        for (int t = 0; t < trials; ++t) {
            bool any_true = false, any_false = false;
            for (int i = 0; i < g; ++i) {
                (rng.chance(0.5) ? any_true : any_false) = true;
            }
            if (any_true && any_false) {
                ++kept;
            }
        }
        const double p = 1.0 - 2.0 * std::pow(0.5, g);
        const double sigma = std::sqrt(p * (1.0 - p) / trials);
        CHECK(std::fabs(static_cast<double>(kept) / trials - p) <= 3.0 * sigma);
    }
}

TEST_CASE("surrogate objective") {
    DapoConfig cfg;
    cfg.eps_low = 0.2;
    cfg.eps_high = 0.28;
    SUBCASE("positive advantage clips above") {
        // ratio 1.5 with advantage +1: the clipped branch (1.28) wins the min.
        const auto group = group_from({{0.0}}, {{std::log(1.5)}}, {});
        CHECK(surrogate_objective(group, {1.0, }, cfg) ==
              doctest::Approx(1.28).epsilon(1e-12));
    }
    SUBCASE("negative advantage leaves the unclipped branch active") {
        const auto group = group_from({{0.0}}, {{std::log(1.5)}}, {});
        CHECK(surrogate_objective(group, {-1.0}, cfg) ==
              doctest::Approx(-1.5).epsilon(1e-12));
    }
    SUBCASE("identical policies reduce to the token-mean advantage") {
        const auto group = group_from({{0.1, 0.2}, {0.3}}, {{0.1, 0.2}, {0.3}}, {});
        const std::vector<double> adv = {2.0, -1.0};
        // (2 + 2 - 1) / 3
        CHECK(surrogate_objective(group, adv, cfg) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("misaligned lists are rejected") {
        auto group = group_from({{0.1, 0.2}}, {{0.1}}, {});
        CHECK_THROWS_AS(static_cast<void>(surrogate_objective(group, {1.0}, cfg)), Error);
        auto ok_group = group_from({{0.1}}, {{0.1}}, {});
        CHECK_THROWS_AS(static_cast<void>(surrogate_objective(ok_group, {1.0, 2.0}, cfg)),
                        Error);
    }
}

TEST_CASE("surrogate gradient single-token branches") {
    DapoConfig cfg;
    cfg.eps_low = 0.2;
    cfg.eps_high = 0.28;
    auto jac = [](std::size_t, std::size_t) { return std::vector<double>{1.0, -1.0}; };
    SUBCASE("unclipped region: gradient is advantage * ratio * dlp") {
        const double ratio = 1.1;
        const auto group = group_from({{0.0}}, {{std::log(ratio)}}, {});
        const auto grad = surrogate_gradient(group, {2.0}, cfg, 2, jac);
        CHECK(grad[0] == doctest::Approx(2.0 * ratio).epsilon(1e-12));
        CHECK(grad[1] == doctest::Approx(-2.0 * ratio).epsilon(1e-12));
    }
    SUBCASE("clipped and binding: zero contribution") {
        const auto group = group_from({{0.0}}, {{std::log(1.5)}}, {});
        const auto grad = surrogate_gradient(group, {1.0}, cfg, 2, jac);
        CHECK(grad[0] == 0.0);
        CHECK(grad[1] == 0.0);
    }
    SUBCASE("negative advantage keeps gradient through large ratios") {
        const double ratio = 1.5;
        const auto group = group_from({{0.0}}, {{std::log(ratio)}}, {});
        const auto grad = surrogate_gradient(group, {-1.0}, cfg, 2, jac);
        CHECK(grad[0] == doctest::Approx(-ratio).epsilon(1e-12));
    }
}

TEST_CASE("surrogate gradient matches central finite differences on toy policies") {
    DapoConfig cfg;
    gen::TestRng rng(41);
    ToyEnvConfig env = ToyEnvConfig::defaults();
    env.num_slots = 3;
    const PivotalLexicon lexicon = load_default_lexicon();
    env.validate(lexicon);

    int accepted = 0;
    int attempts = 0;
    while (accepted < 20 && attempts < 200) {
        ++attempts;
        // Old policy samples the group; the new policy is a perturbation so
        // ratios leave 1.
        std::array<double, 8> old_flat{};
        std::array<double, 8> new_flat{};
        for (std::size_t k = 0; k < 8; ++k) {
            old_flat[k] = rng.uniform() * 2.0 - 1.0;
            new_flat[k] = old_flat[k] + (rng.uniform() * 0.4 - 0.2);
        }
        const PolicyParams old_params = PolicyParams::unflatten(old_flat);
        const PolicyParams new_params = PolicyParams::unflatten(new_flat);

        ToyRng env_rng(1000 + static_cast<std::uint64_t>(attempts));
        std::vector<DecisionRecord> records;
        RolloutGroup group;
        std::vector<double> rewards;
        for (int i = 0; i < 3; ++i) {
            const ToyRollout r = rollout(old_params, env, env_rng);
            TrajectoryRollout traj;
            traj.old_logprobs = r.logprobs;
            traj.new_logprobs = decision_logprobs(new_params, r.record);
            group.trajectories.push_back(std::move(traj));
            records.push_back(r.record);
            rewards.push_back(rng.uniform() * 2.0 - 1.0);
        }
        const auto advantages = group_advantages(rewards, cfg);

        // Reject draws with a token ratio at a clip boundary; the objective
        // is not differentiable there.
        bool near_boundary = false;
        for (std::size_t i = 0; i < group.trajectories.size(); ++i) {
            const auto& traj = group.trajectories[i];
            for (std::size_t t = 0; t < traj.old_logprobs.size(); ++t) {
                const double ratio = std::exp(traj.new_logprobs[t] - traj.old_logprobs[t]);
                if (std::fabs(ratio - (1.0 - cfg.eps_low)) < 1e-3 ||
                    std::fabs(ratio - (1.0 + cfg.eps_high)) < 1e-3) {
                    near_boundary = true;
                }
            }
        }
        if (near_boundary) {
            continue;
        }
        ++accepted;

        auto objective_at = [&](const std::array<double, 8>& flat) {
            const PolicyParams p = PolicyParams::unflatten(flat);
            RolloutGroup moved = group;
            for (std::size_t i = 0; i < moved.trajectories.size(); ++i) {
                moved.trajectories[i].new_logprobs = decision_logprobs(p, records[i]);
            }
            return surrogate_objective(moved, advantages, cfg);
        };

        std::vector<std::vector<std::array<double, 8>>> rows;
        for (const auto& record : records) {
            rows.push_back(logprob_gradients(new_params, record));
        }
        const auto analytic = surrogate_gradient(
            group, advantages, cfg, 8, [&rows](std::size_t i, std::size_t t) {
                return std::vector<double>(rows[i][t].begin(), rows[i][t].end());
            });

        const double h = 1e-4;
        for (std::size_t k = 0; k < 8; ++k) {
            auto plus = new_flat;
            auto minus = new_flat;
            plus[k] += h;
            minus[k] -= h;
            const double fd = (objective_at(plus) - objective_at(minus)) / (2.0 * h);
            const double scale = std::max(std::fabs(analytic[k]), std::fabs(fd));
            CAPTURE(k);
            if (scale >= 1e-3) {
                CHECK(std::fabs(analytic[k] - fd) / scale < 1e-5);
            } else {
                CHECK(std::fabs(analytic[k] - fd) < 1e-8);
            }
        }
    }
    CHECK(accepted >= 20);
}

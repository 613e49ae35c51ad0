#include "pivotal/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <map>
#include <memory>
#include <thread>

#include "json.hpp"

#include "pivotal/app_config.hpp"
#include "pivotal/behavior.hpp"
#include "pivotal/error.hpp"
#include "pivotal/grpo.hpp"
#include "pivotal/jsonl.hpp"
#include "pivotal/pgcot.hpp"
#include "pivotal/toy_rl.hpp"

namespace pivotal {

namespace {

int exit_code_for(const Error& error) {
    switch (error.code()) {
        case ErrorCode::IoError:
            return kExitIoError;
        default:
            return kExitConfigError;
    }
}

AppConfig load_config(const CommonOptions& options) {
    if (options.config_path.empty()) {
        return AppConfig::defaults();
    }
    return load_app_config(options.config_path);
}

bool is_stdout_path(const std::string& path) { return path.empty() || path == "-"; }

void emit_lines(const std::string& out_path, const std::vector<std::string>& lines) {
    if (is_stdout_path(out_path)) {
        for (const auto& line : lines) {
            std::cout << line << '\n';
        }
        return;
    }
    write_lines(out_path, lines);
}

// Summaries go to stdout unless the records themselves already occupy it.
std::ostream& summary_stream(const std::string& out_path) {
    return is_stdout_path(out_path) ? std::cerr : std::cout;
}

std::string format_double(double value) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.12g", value);
    return buffer;
}

std::string metrics_row_to_json(const IterationMetrics& m) {
    nlohmann::ordered_json row;
    row["iteration"] = m.iteration;
    row["mean_reward"] = m.mean_reward;
    row["accuracy"] = m.accuracy;
    row["s_pivot"] = m.s_pivot;
    row["coupled_fraction"] = m.coupled_fraction;
    row["mean_m"] = m.mean_m;
    return row.dump();
}

struct ScoredLineState {
    bool ok = false;
    std::string error;
    ScoredTrace scored;
    std::string group_id;
    bool correct = false;
};

}  // namespace

int cmd_score(const std::string& corpus_path, const std::string& out_path,
              const CommonOptions& options) {
    try {
        const AppConfig config = load_config(options);
        const PivotalLexicon lexicon = load_configured_lexicon(config);
        const auto lines = read_lines(corpus_path);

        std::vector<ScoredLineState> states(lines.size());
        auto score_line = [&](std::size_t index) {
            auto& state = states[index];
            TraceLineResult parsed_line = parse_trace_line(lines[index]);
            if (!parsed_line.trace) {
                state.error = parsed_line.error;
                return;
            }
            const RawTrace& raw = *parsed_line.trace;
            const ParsedTrace parsed = parse_trace(raw, config.tags);
            state.scored.id = raw.id;
            state.scored.breakdown =
                composite_reward(parsed, raw.ground_truth, lexicon, config.reward);
            state.group_id = raw.group_id;
            state.correct = state.scored.breakdown.r_acc > 0.5;
            state.ok = true;
        };

        const int jobs = std::max(1, options.jobs);
        if (jobs <= 1 || lines.size() < 2) {
            for (std::size_t i = 0; i < lines.size(); ++i) {
                score_line(i);
            }
        } else {
            std::atomic<std::size_t> next{0};
            std::vector<std::thread> workers;
            const std::size_t worker_count =
                std::min<std::size_t>(static_cast<std::size_t>(jobs), lines.size());
            for (std::size_t w = 0; w < worker_count; ++w) {
                workers.emplace_back([&] {
                    while (true) {
                        const std::size_t index = next.fetch_add(1);
                        if (index >= lines.size()) {
                            return;
                        }
                        score_line(index);
                    }
                });
            }
            for (auto& worker : workers) {
                worker.join();
            }
        }

        // Group-relative pass: records sharing a group_id get advantages over
        // the composite reward and the dynamic-filter verdict.
        std::map<std::string, std::vector<std::size_t>> groups;
        for (std::size_t i = 0; i < states.size(); ++i) {
            if (states[i].ok && !states[i].group_id.empty()) {
                groups[states[i].group_id].push_back(i);
            }
        }
        std::size_t groups_kept = 0;
        std::size_t groups_filtered = 0;
        for (const auto& [group_id, members] : groups) {
            if (members.size() < 2) {
                continue;
            }
            std::vector<double> rewards;
            rewards.reserve(members.size());
            bool any_correct = false;
            bool any_incorrect = false;
            for (const std::size_t i : members) {
                rewards.push_back(states[i].scored.breakdown.r_total);
                (states[i].correct ? any_correct : any_incorrect) = true;
            }
            const bool kept = any_correct && any_incorrect;
            kept ? ++groups_kept : ++groups_filtered;
            const auto advantages = group_advantages(rewards, config.dapo);
            for (std::size_t k = 0; k < members.size(); ++k) {
                states[members[k]].scored.advantage = advantages[k];
                states[members[k]].scored.group_kept = kept;
            }
        }

        std::vector<std::string> out_lines;
        out_lines.reserve(states.size());
        std::size_t scored_count = 0;
        std::size_t error_count = 0;
        double mean_acc = 0.0, mean_form = 0.0, mean_pivot = 0.0, mean_len = 0.0, mean_total = 0.0;
        for (std::size_t i = 0; i < states.size(); ++i) {
            if (!states[i].ok) {
                ++error_count;
                out_lines.push_back(error_record_to_json(i + 1, states[i].error));
                continue;
            }
            ++scored_count;
            const auto& b = states[i].scored.breakdown;
            mean_acc += b.r_acc;
            mean_form += b.r_form;
            mean_pivot += b.r_pivot;
            mean_len += b.r_len;
            mean_total += b.r_total;
            out_lines.push_back(scored_trace_to_json(states[i].scored));
        }
        emit_lines(out_path, out_lines);

        auto& summary = summary_stream(out_path);
        summary << "scored " << scored_count << " trace(s), " << error_count
                << " error line(s)\n";
        if (scored_count > 0) {
            const double inv = 1.0 / static_cast<double>(scored_count);
            summary << "mean r_acc=" << format_double(mean_acc * inv)
                    << " r_form=" << format_double(mean_form * inv)
                    << " r_pivot=" << format_double(mean_pivot * inv)
                    << " r_len=" << format_double(mean_len * inv)
                    << " r_total=" << format_double(mean_total * inv) << "\n";
        }
        if (!groups.empty()) {
            summary << "groups: " << groups_kept << " kept, " << groups_filtered
                    << " filtered\n";
        }
        return kExitOk;
    } catch (const Error& e) {
        std::cerr << "score: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "score: " << e.what() << "\n";
        return kExitIoError;
    }
}

int cmd_train(const std::string& out_metrics_path, const CommonOptions& options) {
    try {
        const AppConfig config = load_config(options);
        const PivotalLexicon lexicon = load_configured_lexicon(config);
        config.env.validate(lexicon);

        const std::uint64_t seed = options.seed.value_or(config.env.seed);
        ToyRng rng(seed);
        const TrainResult result = train(PolicyParams{}, config.env, config.reward, config.dapo,
                                         config.train, lexicon, rng);

        // CSV by default; a .jsonl suffix switches to JSON-lines.
        const bool jsonl = out_metrics_path.size() >= 6 &&
                           out_metrics_path.rfind(".jsonl") == out_metrics_path.size() - 6;
        std::vector<std::string> rows;
        rows.reserve(result.metrics.size() + 1);
        if (!jsonl) {
            rows.emplace_back("iteration,mean_reward,accuracy,s_pivot,coupled_fraction,mean_m");
        }
        for (const auto& m : result.metrics) {
            if (jsonl) {
                rows.push_back(metrics_row_to_json(m));
            } else {
                rows.push_back(std::to_string(m.iteration) + "," +
                               format_double(m.mean_reward) + "," + format_double(m.accuracy) +
                               "," + format_double(m.s_pivot) + "," +
                               format_double(m.coupled_fraction) + "," +
                               format_double(m.mean_m));
            }
        }
        emit_lines(out_metrics_path, rows);

        auto& summary = summary_stream(out_metrics_path);
        summary << "trained " << result.metrics.size() << " iteration(s) with seed " << seed
                << "\n";
        if (!result.metrics.empty()) {
            const std::size_t window = std::min<std::size_t>(100, result.metrics.size());
            double reward = 0.0, accuracy = 0.0, coupled = 0.0, grounded = 0.0;
            for (std::size_t i = result.metrics.size() - window; i < result.metrics.size(); ++i) {
                reward += result.metrics[i].mean_reward;
                accuracy += result.metrics[i].accuracy;
                coupled += result.metrics[i].coupled_fraction;
                grounded += result.metrics[i].grounded_rate;
            }
            const double inv = 1.0 / static_cast<double>(window);
            summary << "last-" << window << " means: reward=" << format_double(reward * inv)
                    << " accuracy=" << format_double(accuracy * inv)
                    << " coupled_fraction=" << format_double(coupled * inv)
                    << " grounded_rate=" << format_double(grounded * inv) << "\n";
        }
        return kExitOk;
    } catch (const Error& e) {
        std::cerr << "train: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "train: " << e.what() << "\n";
        return kExitIoError;
    }
}

int cmd_pgcot(const std::string& corpus_path, const std::string& out_path, bool mock_teacher,
              const CommonOptions& options) {
    try {
        const AppConfig config = load_config(options);
        const auto lines = read_lines(corpus_path);

        std::unique_ptr<TeacherClient> client;
        if (mock_teacher) {
            client = std::make_unique<MockTeacherClient>();
        } else {
            const char* endpoint = std::getenv("TEACHER_ENDPOINT");
            const char* api_key = std::getenv("TEACHER_API_KEY");
            if (endpoint == nullptr || *endpoint == '\0') {
                throw Error(ErrorCode::ConfigError,
                            "TEACHER_ENDPOINT is not set (or use --mock-teacher)");
            }
            if (api_key == nullptr || *api_key == '\0') {
                throw Error(ErrorCode::ConfigError,
                            "TEACHER_API_KEY is not set (or use --mock-teacher)");
            }
            HttpTeacherClient::Options http_options;
            http_options.endpoint = endpoint;
            http_options.api_key = api_key;
            client = std::make_unique<HttpTeacherClient>(http_options);
        }

        // Keep malformed lines in place as error records; run the pipeline
        // over the parseable subset only.
        std::vector<PgcotRecord> records;
        std::vector<std::ptrdiff_t> record_index(lines.size(), -1);
        std::vector<std::string> line_errors(lines.size());
        for (std::size_t i = 0; i < lines.size(); ++i) {
            PgcotLineResult parsed = parse_pgcot_line(lines[i]);
            if (parsed.record) {
                record_index[i] = static_cast<std::ptrdiff_t>(records.size());
                records.push_back(std::move(*parsed.record));
            } else {
                line_errors[i] = parsed.error;
            }
        }

        PipelineStats stats;
        records = run_pipeline(std::move(records), *client, config.pgcot, &stats);

        std::vector<std::string> out_lines;
        out_lines.reserve(lines.size());
        for (std::size_t i = 0; i < lines.size(); ++i) {
            if (record_index[i] >= 0) {
                out_lines.push_back(
                    pgcot_record_to_json(records[static_cast<std::size_t>(record_index[i])]));
            } else {
                out_lines.push_back(error_record_to_json(i + 1, line_errors[i]));
            }
        }
        emit_lines(out_path, out_lines);

        auto& summary = summary_stream(out_path);
        summary << "pgcot: " << stats.valid << "/" << stats.total
                << " valid (rate=" << format_double(stats.valid_rate)
                << "), mean_perceptions=" << format_double(stats.mean_perceptions_per_valid)
                << ", teacher_failures=" << stats.teacher_failures << "\n";
        return kExitOk;
    } catch (const Error& e) {
        std::cerr << "pgcot: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "pgcot: " << e.what() << "\n";
        return kExitIoError;
    }
}

int cmd_analyze(const std::string& corpus_path, const std::string& out_path,
                const CommonOptions& options) {
    try {
        const AppConfig config = load_config(options);
        BehaviorPatterns patterns = config.behavior_patterns_path.empty()
                                        ? default_behavior_patterns()
                                        : load_behavior_patterns_file(config.behavior_patterns_path);
        RuleBasedClassifier classifier(std::move(patterns));

        const auto lines = read_lines(corpus_path);
        std::vector<TraceBehaviorReport> reports;
        std::size_t error_count = 0;
        for (const auto& line : lines) {
            TraceLineResult parsed_line = parse_trace_line(line);
            if (!parsed_line.trace) {
                ++error_count;
                continue;
            }
            const ParsedTrace parsed = parse_trace(*parsed_line.trace, config.tags);
            reports.push_back(detect_behaviors(parsed, classifier, parsed_line.trace->id));
        }

        const EmergenceRatios ratios = emergence_ratio(reports);

        std::vector<std::string> rows;
        rows.emplace_back("behavior,ratio,flagged,classified,occurrences");
        for (const auto behavior : kAllBehaviors) {
            const auto index = static_cast<std::size_t>(behavior);
            rows.push_back(std::string(to_string(behavior)) + "," +
                           format_double(ratios.ratio[index]) + "," +
                           std::to_string(ratios.flagged[index]) + "," +
                           std::to_string(ratios.classified) + "," +
                           std::to_string(ratios.occurrences[index]));
        }
        emit_lines(out_path, rows);

        auto& summary = summary_stream(out_path);
        summary << "analyzed " << ratios.classified << " trace(s), " << ratios.unclassified
                << " unclassified, " << error_count << " error line(s)\n";
        return kExitOk;
    } catch (const Error& e) {
        std::cerr << "analyze: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "analyze: " << e.what() << "\n";
        return kExitIoError;
    }
}

int cmd_print_default_config(std::ostream& out) {
    out << app_config_to_json(AppConfig::defaults());
    return kExitOk;
}

}  // namespace pivotal

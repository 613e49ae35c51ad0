#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

namespace pivotal {

// Process exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitIoError = 2;
inline constexpr int kExitConfigError = 3;

struct CommonOptions {
    std::string config_path;              // empty = defaults
    std::optional<std::uint64_t> seed;    // overrides env.seed
    int jobs = 1;                         // worker threads for line scoring
};

/// score: reads a JSON-lines trace corpus, writes one reward breakdown per
/// line (order preserved; malformed lines become error records), and prints
/// per-component means. Records sharing a group_id additionally receive
/// group-relative advantages and the dynamic-filter verdict.
int cmd_score(const std::string& corpus_path, const std::string& out_path,
              const CommonOptions& options);

/// train: runs the toy policy-optimization loop and writes the metrics CSV.
/// Byte-identical output for identical seed and config.
int cmd_train(const std::string& out_metrics_path, const CommonOptions& options);

/// pgcot: runs the three-step grounding pipeline over a JSON-lines corpus.
/// With mock_teacher the deterministic mock replaces the HTTP client;
/// otherwise TEACHER_ENDPOINT and TEACHER_API_KEY must be set.
int cmd_pgcot(const std::string& corpus_path, const std::string& out_path, bool mock_teacher,
              const CommonOptions& options);

/// analyze: classifies cognitive behaviors per trace and writes one CSV row
/// per behavior with its emergence ratio.
int cmd_analyze(const std::string& corpus_path, const std::string& out_path,
                const CommonOptions& options);

int cmd_print_default_config(std::ostream& out);

}  // namespace pivotal

// pivotal: score tagged reasoning traces, run the toy perception-timing
// trainer, build perception-grounded reasoning corpora, and measure
// cognitive-behavior emergence.

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "pivotal/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"trajectory scoring and perception-timing policy optimization"};
    app.require_subcommand(0, 1);
    app.fallthrough();  // let --config/--seed/--jobs appear after the subcommand

    pivotal::CommonOptions options;
    std::uint64_t seed_value = 0;
    app.add_option("--config", options.config_path, "JSON config file (defaults when omitted)");
    auto* seed_flag = app.add_option("--seed", seed_value, "override the configured RNG seed");
    app.add_option("--jobs", options.jobs, "worker threads for line-oriented commands")
        ->check(CLI::PositiveNumber);

    std::string corpus_path;
    std::string out_path = "-";
    bool mock_teacher = false;

    auto* score = app.add_subcommand("score", "compute reward breakdowns for a trace corpus");
    score->add_option("corpus", corpus_path, "JSON-lines trace corpus")->required();
    score->add_option("-o,--out", out_path, "output path ('-' = stdout)");

    std::string metrics_path;
    auto* train = app.add_subcommand("train", "run the toy policy-optimization loop");
    train->add_option("-o,--out", metrics_path, "metrics CSV path ('-' = stdout)")->required();

    auto* pgcot = app.add_subcommand("pgcot", "run the perception-grounding pipeline");
    pgcot->add_option("corpus", corpus_path, "JSON-lines record corpus")->required();
    pgcot->add_option("-o,--out", out_path, "output path ('-' = stdout)");
    pgcot->add_flag("--mock-teacher", mock_teacher, "use the deterministic mock teacher");

    auto* analyze = app.add_subcommand("analyze", "measure cognitive-behavior emergence ratios");
    analyze->add_option("corpus", corpus_path, "JSON-lines trace corpus")->required();
    analyze->add_option("-o,--out", out_path, "output path ('-' = stdout)");

    auto* print_config =
        app.add_subcommand("print-default-config", "print the default configuration JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    if (seed_flag->count() > 0) {
        options.seed = seed_value;
    }

    if (score->parsed()) {
        return pivotal::cmd_score(corpus_path, out_path, options);
    }
    if (train->parsed()) {
        return pivotal::cmd_train(metrics_path, options);
    }
    if (pgcot->parsed()) {
        return pivotal::cmd_pgcot(corpus_path, out_path, mock_teacher, options);
    }
    if (analyze->parsed()) {
        return pivotal::cmd_analyze(corpus_path, out_path, options);
    }
    if (print_config->parsed()) {
        return pivotal::cmd_print_default_config(std::cout);
    }
    std::cout << app.help();
    return pivotal::kExitOk;
}

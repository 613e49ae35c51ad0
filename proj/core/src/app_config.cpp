#include "pivotal/app_config.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>

#include "json.hpp"
#include "pivotal/error.hpp"

namespace pivotal {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

void reject_unknown_keys(const json& object, const char* section,
                         std::initializer_list<const char*> known) {
    for (const auto& [key, value] : object.items()) {
        bool ok = false;
        for (const char* k : known) {
            if (key == k) {
                ok = true;
                break;
            }
        }
        if (!ok) {
            throw Error(ErrorCode::ConfigError,
                        std::string("unknown key '") + key + "' in section '" + section + "'");
        }
    }
}

template <typename T>
void read_field(const json& object, const char* key, T& target) {
    if (!object.contains(key)) {
        return;
    }
    try {
        target = object.at(key).get<T>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ConfigError, std::string("bad value for '") + key + "': " + e.what());
    }
}

void parse_reward(const json& object, RewardConfig& cfg) {
    reject_unknown_keys(object, "reward",
                        {"lambda_acc", "lambda_form", "lambda_pivot", "lambda_len", "alpha_ratio",
                         "lambda_reg", "l_gold", "delta", "lambda_len_slope", "answer_tolerance"});
    read_field(object, "lambda_acc", cfg.lambda_acc);
    read_field(object, "lambda_form", cfg.lambda_form);
    read_field(object, "lambda_pivot", cfg.lambda_pivot);
    read_field(object, "lambda_len", cfg.lambda_len);
    read_field(object, "alpha_ratio", cfg.alpha_ratio);
    read_field(object, "lambda_reg", cfg.lambda_reg);
    read_field(object, "l_gold", cfg.l_gold);
    read_field(object, "delta", cfg.delta);
    read_field(object, "lambda_len_slope", cfg.lambda_len_slope);
    read_field(object, "answer_tolerance", cfg.answer_tolerance);
}

void parse_dapo(const json& object, DapoConfig& cfg) {
    reject_unknown_keys(object, "dapo", {"eps_low", "eps_high", "std_epsilon"});
    read_field(object, "eps_low", cfg.eps_low);
    read_field(object, "eps_high", cfg.eps_high);
    read_field(object, "std_epsilon", cfg.std_epsilon);
}

void parse_env(const json& object, ToyEnvConfig& cfg) {
    reject_unknown_keys(object, "env",
                        {"num_slots", "keyword_sentence_pool", "plain_sentence_pool",
                         "perception_text", "answer_alphabet", "seed"});
    read_field(object, "num_slots", cfg.num_slots);
    read_field(object, "keyword_sentence_pool", cfg.keyword_sentence_pool);
    read_field(object, "plain_sentence_pool", cfg.plain_sentence_pool);
    read_field(object, "perception_text", cfg.perception_text);
    read_field(object, "seed", cfg.seed);
    if (object.contains("answer_alphabet")) {
        std::vector<std::string> alphabet;
        read_field(object, "answer_alphabet", alphabet);
        if (alphabet.size() != 2) {
            throw Error(ErrorCode::ConfigError, "answer_alphabet must have exactly 2 symbols");
        }
        cfg.answer_alphabet = {alphabet[0], alphabet[1]};
    }
}

void parse_train(const json& object, TrainConfig& cfg) {
    reject_unknown_keys(object, "train", {"iterations", "group_size", "learning_rate"});
    read_field(object, "iterations", cfg.iterations);
    read_field(object, "group_size", cfg.group_size);
    read_field(object, "learning_rate", cfg.learning_rate);
}

void parse_tags(const json& object, TagConfig& cfg) {
    reject_unknown_keys(object, "tags",
                        {"think_open", "think_close", "perception_open", "perception_close"});
    read_field(object, "think_open", cfg.think_open);
    read_field(object, "think_close", cfg.think_close);
    read_field(object, "perception_open", cfg.perception_open);
    read_field(object, "perception_close", cfg.perception_close);
}

void parse_pgcot(const json& object, PgcotConfig& cfg) {
    reject_unknown_keys(object, "pgcot",
                        {"model_name", "temperature", "concurrency_limit", "max_retries",
                         "retry_backoff_ms", "retry_on_invalid"});
    read_field(object, "model_name", cfg.model_name);
    read_field(object, "temperature", cfg.temperature);
    read_field(object, "concurrency_limit", cfg.concurrency_limit);
    read_field(object, "max_retries", cfg.max_retries);
    read_field(object, "retry_backoff_ms", cfg.retry_backoff_ms);
    read_field(object, "retry_on_invalid", cfg.retry_on_invalid);
}

}  // namespace

AppConfig AppConfig::defaults() {
    AppConfig config;
    config.env = ToyEnvConfig::defaults();
    return config;
}

void AppConfig::validate() const {
    reward.validate();
    dapo.validate();
    if (train.iterations < 0) {
        throw Error(ErrorCode::ConfigError, "train.iterations must be >= 0");
    }
    if (train.group_size < 2) {
        throw Error(ErrorCode::ConfigError, "train.group_size must be >= 2");
    }
    if (!(train.learning_rate > 0.0)) {
        throw Error(ErrorCode::ConfigError, "train.learning_rate must be > 0");
    }
    const std::string* tag_literals[] = {&tags.think_open, &tags.think_close,
                                         &tags.perception_open, &tags.perception_close};
    for (const auto* tag : tag_literals) {
        if (tag->empty()) {
            throw Error(ErrorCode::ConfigError, "tag literals must be non-empty");
        }
    }
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = i + 1; j < 4; ++j) {
            if (*tag_literals[i] == *tag_literals[j]) {
                throw Error(ErrorCode::ConfigError, "tag literals must be pairwise distinct");
            }
        }
    }
    if (pgcot.concurrency_limit < 1) {
        throw Error(ErrorCode::ConfigError, "pgcot.concurrency_limit must be >= 1");
    }
    if (pgcot.max_retries < 0) {
        throw Error(ErrorCode::ConfigError, "pgcot.max_retries must be >= 0");
    }
    if (pgcot.retry_backoff_ms < 0) {
        throw Error(ErrorCode::ConfigError, "pgcot.retry_backoff_ms must be >= 0");
    }
    // Pool contents are validated against the lexicon at load time by
    // load_configured_lexicon callers; structural checks happen here.
    if (env.num_slots < 1) {
        throw Error(ErrorCode::ConfigError, "env.num_slots must be >= 1");
    }
}

AppConfig parse_app_config(const std::string& json_text) {
    json parsed;
    try {
        parsed = json::parse(json_text);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ConfigError, std::string("config is not valid JSON: ") + e.what());
    }
    if (!parsed.is_object()) {
        throw Error(ErrorCode::ConfigError, "config root must be a JSON object");
    }
    reject_unknown_keys(parsed, "(root)",
                        {"reward", "dapo", "env", "train", "tags", "pgcot", "lexicon_path",
                         "behavior_patterns_path"});

    AppConfig config = AppConfig::defaults();
    if (parsed.contains("reward")) parse_reward(parsed.at("reward"), config.reward);
    if (parsed.contains("dapo")) parse_dapo(parsed.at("dapo"), config.dapo);
    if (parsed.contains("env")) parse_env(parsed.at("env"), config.env);
    if (parsed.contains("train")) parse_train(parsed.at("train"), config.train);
    if (parsed.contains("tags")) parse_tags(parsed.at("tags"), config.tags);
    if (parsed.contains("pgcot")) parse_pgcot(parsed.at("pgcot"), config.pgcot);
    read_field(parsed, "lexicon_path", config.lexicon_path);
    read_field(parsed, "behavior_patterns_path", config.behavior_patterns_path);

    config.validate();
    return config;
}

AppConfig load_app_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::ConfigError, "cannot read config file: " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_app_config(buffer.str());
}

std::string app_config_to_json(const AppConfig& config) {
    ordered_json out;
    out["reward"] = {{"lambda_acc", config.reward.lambda_acc},
                     {"lambda_form", config.reward.lambda_form},
                     {"lambda_pivot", config.reward.lambda_pivot},
                     {"lambda_len", config.reward.lambda_len},
                     {"alpha_ratio", config.reward.alpha_ratio},
                     {"lambda_reg", config.reward.lambda_reg},
                     {"l_gold", config.reward.l_gold},
                     {"delta", config.reward.delta},
                     {"lambda_len_slope", config.reward.lambda_len_slope},
                     {"answer_tolerance", config.reward.answer_tolerance}};
    out["dapo"] = {{"eps_low", config.dapo.eps_low},
                   {"eps_high", config.dapo.eps_high},
                   {"std_epsilon", config.dapo.std_epsilon}};
    out["env"] = {{"num_slots", config.env.num_slots},
                  {"keyword_sentence_pool", config.env.keyword_sentence_pool},
                  {"plain_sentence_pool", config.env.plain_sentence_pool},
                  {"perception_text", config.env.perception_text},
                  {"answer_alphabet",
                   std::vector<std::string>{config.env.answer_alphabet[0],
                                            config.env.answer_alphabet[1]}},
                  {"seed", config.env.seed}};
    out["train"] = {{"iterations", config.train.iterations},
                    {"group_size", config.train.group_size},
                    {"learning_rate", config.train.learning_rate}};
    out["tags"] = {{"think_open", config.tags.think_open},
                   {"think_close", config.tags.think_close},
                   {"perception_open", config.tags.perception_open},
                   {"perception_close", config.tags.perception_close}};
    out["pgcot"] = {{"model_name", config.pgcot.model_name},
                    {"temperature", config.pgcot.temperature},
                    {"concurrency_limit", config.pgcot.concurrency_limit},
                    {"max_retries", config.pgcot.max_retries},
                    {"retry_backoff_ms", config.pgcot.retry_backoff_ms},
                    {"retry_on_invalid", config.pgcot.retry_on_invalid}};
    out["lexicon_path"] = config.lexicon_path;
    out["behavior_patterns_path"] = config.behavior_patterns_path;
    return out.dump(2) + "\n";
}

PivotalLexicon load_configured_lexicon(const AppConfig& config) {
    if (config.lexicon_path.empty()) {
        return load_default_lexicon();
    }
    return load_lexicon_file(config.lexicon_path);
}

}  // namespace pivotal

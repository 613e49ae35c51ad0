#include "pivotal/behavior.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "pivotal/error.hpp"
#include "pivotal/lexicon.hpp"

namespace pivotal {

namespace detail {
extern const char* const kDefaultBehaviorPatternsTsv;  // generated embedded data
}  // namespace detail

const char* to_string(CognitiveBehavior behavior) {
    switch (behavior) {
        case CognitiveBehavior::Verification: return "verification";
        case CognitiveBehavior::Backtracking: return "backtracking";
        case CognitiveBehavior::SubgoalSetting: return "subgoal_setting";
        case CognitiveBehavior::BackwardChaining: return "backward_chaining";
    }
    return "unknown";
}

BehaviorPatterns parse_behavior_patterns_tsv(std::string_view text) {
    BehaviorPatterns patterns;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t eol = text.find('\n', pos);
        std::string_view line =
            text.substr(pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        if (line.empty() || line.front() == '#') {
            continue;
        }
        const std::size_t tab = line.find('\t');
        if (tab == std::string_view::npos) {
            throw Error(ErrorCode::ConfigError, "behavior patterns line " +
                                                    std::to_string(line_no) +
                                                    ": expected behavior<TAB>phrase");
        }
        const std::string_view name = line.substr(0, tab);
        const std::string phrase(line.substr(tab + 1));
        if (phrase.empty()) {
            throw Error(ErrorCode::ConfigError,
                        "behavior patterns line " + std::to_string(line_no) + ": empty phrase");
        }
        bool known = false;
        for (const auto behavior : kAllBehaviors) {
            if (name == to_string(behavior)) {
                patterns.phrases[static_cast<std::size_t>(behavior)].push_back(phrase);
                known = true;
                break;
            }
        }
        if (!known) {
            throw Error(ErrorCode::ConfigError, "behavior patterns line " +
                                                    std::to_string(line_no) +
                                                    ": unknown behavior '" + std::string(name) +
                                                    "'");
        }
    }
    return patterns;
}

BehaviorPatterns default_behavior_patterns() {
    return parse_behavior_patterns_tsv(detail::kDefaultBehaviorPatternsTsv);
}

BehaviorPatterns load_behavior_patterns_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot read behavior patterns: " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_behavior_patterns_tsv(buffer.str());
}

RuleBasedClassifier::RuleBasedClassifier() : patterns_(default_behavior_patterns()) {}

RuleBasedClassifier::RuleBasedClassifier(BehaviorPatterns patterns)
    : patterns_(std::move(patterns)) {}

std::optional<BehaviorClassification> RuleBasedClassifier::classify(std::string_view think_text) {
    BehaviorClassification result;
    for (const auto behavior : kAllBehaviors) {
        const auto index = static_cast<std::size_t>(behavior);
        const MatchResult match = match_phrases(think_text, patterns_.phrases[index]);
        result.occurrences[index] = match.occurrences;
        if (behavior == CognitiveBehavior::SubgoalSetting) {
            // Planning needs more than a lone marker word.
            result.flags[behavior] =
                static_cast<int>(match.phrases.size()) >= patterns_.subgoal_min_distinct;
        } else {
            result.flags[behavior] = match.matched;
        }
    }
    return result;
}

ClientBackedClassifier::ClientBackedClassifier(TeacherClient& client, std::string model_name)
    : client_(&client), model_name_(std::move(model_name)) {}

std::optional<BehaviorClassification> ClientBackedClassifier::classify(
    std::string_view think_text) {
    TeacherRequest request;
    request.model_name = model_name_;
    request.temperature = 0.0;
    request.messages.push_back(
        {"system",
         "You classify reasoning traces. Answer with one JSON object containing exactly the "
         "boolean keys \"verification\", \"backtracking\", \"subgoal_setting\" and "
         "\"backward_chaining\"."});
    request.messages.push_back({"user", std::string(think_text)});

    const TeacherResponse response = client_->complete(request);
    if (response.status != TeacherStatus::Ok) {
        return std::nullopt;
    }
    const std::size_t begin = response.content.find('{');
    const std::size_t end = response.content.rfind('}');
    if (begin == std::string::npos || end == std::string::npos || end <= begin) {
        return std::nullopt;
    }
    try {
        const auto parsed = nlohmann::json::parse(response.content.substr(begin, end - begin + 1));
        BehaviorClassification result;
        for (const auto behavior : kAllBehaviors) {
            const auto index = static_cast<std::size_t>(behavior);
            const bool flag = parsed.at(to_string(behavior)).get<bool>();
            result.flags[behavior] = flag;
            result.occurrences[index] = flag ? 1 : 0;
        }
        return result;
    } catch (const nlohmann::json::exception&) {
        return std::nullopt;
    }
}

TraceBehaviorReport detect_behaviors(const ParsedTrace& parsed, BehaviorClassifier& classifier,
                                     std::string trace_id) {
    TraceBehaviorReport report;
    report.trace_id = std::move(trace_id);
    const auto classification = classifier.classify(parsed.think_text());
    if (!classification) {
        report.classified = false;
        return report;
    }
    report.classified = true;
    report.flags = classification->flags;
    report.occurrences = classification->occurrences;
    return report;
}

EmergenceRatios emergence_ratio(const std::vector<TraceBehaviorReport>& reports) {
    EmergenceRatios out;
    for (const auto& report : reports) {
        if (!report.classified) {
            ++out.unclassified;
            continue;
        }
        ++out.classified;
        for (const auto behavior : kAllBehaviors) {
            const auto index = static_cast<std::size_t>(behavior);
            if (report.flags[behavior]) {
                ++out.flagged[index];
            }
            out.occurrences[index] += report.occurrences[index];
        }
    }
    if (out.classified == 0) {
        throw Error(ErrorCode::EmptyCorpus, "no classified traces");
    }
    for (std::size_t i = 0; i < out.ratio.size(); ++i) {
        out.ratio[i] = static_cast<double>(out.flagged[i]) / static_cast<double>(out.classified);
    }
    return out;
}

}  // namespace pivotal

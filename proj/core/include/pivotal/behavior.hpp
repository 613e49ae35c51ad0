#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pivotal/teacher_client.hpp"
#include "pivotal/trace.hpp"

namespace pivotal {

enum class CognitiveBehavior { Verification = 0, Backtracking, SubgoalSetting, BackwardChaining };

inline constexpr std::array<CognitiveBehavior, 4> kAllBehaviors = {
    CognitiveBehavior::Verification,
    CognitiveBehavior::Backtracking,
    CognitiveBehavior::SubgoalSetting,
    CognitiveBehavior::BackwardChaining,
};

const char* to_string(CognitiveBehavior behavior);

struct BehaviorFlags {
    std::array<bool, 4> value{};

    bool& operator[](CognitiveBehavior b) { return value[static_cast<std::size_t>(b)]; }
    bool operator[](CognitiveBehavior b) const { return value[static_cast<std::size_t>(b)]; }
};

struct BehaviorClassification {
    BehaviorFlags flags;
    std::array<int, 4> occurrences{};  // match counts; at most 1 for external judges
};

/// Decides which cognitive behaviors a think-block text exhibits. Returns
/// nothing when classification fails; such traces are reported as
/// unclassified and excluded from ratio denominators.
class BehaviorClassifier {
  public:
    virtual ~BehaviorClassifier() = default;
    virtual std::optional<BehaviorClassification> classify(std::string_view think_text) = 0;
};

/// Editable phrase lists backing the rule-based classifier. Subgoal setting
/// additionally requires at least `subgoal_min_distinct` distinct phrase
/// matches, so a lone "first" does not count as planning.
struct BehaviorPatterns {
    std::array<std::vector<std::string>, 4> phrases;
    int subgoal_min_distinct = 2;
};

BehaviorPatterns default_behavior_patterns();

/// `behavior<TAB>phrase` lines; behaviors: verification, backtracking,
/// subgoal_setting, backward_chaining. `#` starts a comment.
BehaviorPatterns parse_behavior_patterns_tsv(std::string_view text);

BehaviorPatterns load_behavior_patterns_file(const std::filesystem::path& path);

/// Deterministic keyword-based proxy classifier. Boundary-aware matching via
/// the lexicon matcher; no claim of parity with an LLM judge.
class RuleBasedClassifier : public BehaviorClassifier {
  public:
    RuleBasedClassifier();
    explicit RuleBasedClassifier(BehaviorPatterns patterns);

    std::optional<BehaviorClassification> classify(std::string_view think_text) override;

  private:
    BehaviorPatterns patterns_;
};

/// External judge speaking through a TeacherClient. The model is asked for a
/// strict JSON verdict; anything unparsable yields an unclassified trace.
class ClientBackedClassifier : public BehaviorClassifier {
  public:
    ClientBackedClassifier(TeacherClient& client, std::string model_name);

    std::optional<BehaviorClassification> classify(std::string_view think_text) override;

  private:
    TeacherClient* client_;
    std::string model_name_;
};

struct TraceBehaviorReport {
    std::string trace_id;
    bool classified = false;
    BehaviorFlags flags;
    std::array<int, 4> occurrences{};
};

TraceBehaviorReport detect_behaviors(const ParsedTrace& parsed, BehaviorClassifier& classifier,
                                     std::string trace_id = {});

struct EmergenceRatios {
    std::array<double, 4> ratio{};
    std::array<long, 4> flagged{};
    std::array<long, 4> occurrences{};
    long classified = 0;
    long unclassified = 0;
};

/// Per-behavior emergence ratio: traces exhibiting the behavior over
/// classified traces. Throws Error(EmptyCorpus) when nothing was classified.
EmergenceRatios emergence_ratio(const std::vector<TraceBehaviorReport>& reports);

}  // namespace pivotal

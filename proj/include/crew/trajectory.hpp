// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crew/backend.hpp"
#include "crew/core.hpp"
#include "crew/orchestrator.hpp"
#include "crew/prompts.hpp"

namespace crew {

enum class DatasetKind { hotpotqa, wikitablequestions, math, infinity_mm, custom };
enum class EvalMetric { ExactMatch, CosineSim, Judge };

std::string to_string(DatasetKind d);
std::string to_string(EvalMetric m);
DatasetKind dataset_kind_from_string(const std::string& s);
EvalMetric eval_metric_from_string(const std::string& s);

/// Default evaluation metric per dataset: accuracy for HotpotQA and
/// WikiTableQuestions, text cosine similarity for Infinity-MM, judge for
/// math; custom datasets default to exact match.
EvalMetric default_metric(DatasetKind d);

struct EvalOutcome {
    EvalMetric metric = EvalMetric::ExactMatch;
    double score = 0.0; // in [0,1]
    bool passed = false;

    bool operator==(const EvalOutcome&) const = default;
};

/// Failure-mode annotation vocabulary.
enum class ErrorTag {
    PlannerIncorrectPlan,
    PlannerSubtaskAmbiguity,
    WorkerToolSelection,
    ToolWebFailure,
    ToolDocumentFailure,
    ToolMultimodalFailure,
    ResponseFormat,
    ReasoningError,
    QuestionAmbiguity,
    Hallucination,
    ContextExceed,
    LimitedCoding,
};

inline constexpr int kErrorTagCount = 12;
std::string to_string(ErrorTag t);
ErrorTag error_tag_from_string(const std::string& s);
std::span<const ErrorTag> all_error_tags();

struct Trajectory {
    RunRecord run;
    DatasetKind dataset = DatasetKind::custom;
    std::optional<std::string> gold_answer;
    std::optional<EvalOutcome> eval;
    std::optional<ErrorTag> error_label;
};

Json to_json(const Trajectory& v);
Trajectory trajectory_from_json(const Json& j);

struct PreferencePair {
    std::string planner_prompt;
    std::string chosen_plan;   // raw planner reply of a passing rollout
    std::string rejected_plan; // raw planner reply of a failing rollout
    std::string source_question_id;

    bool operator==(const PreferencePair&) const = default;
};

Json to_json(const PreferencePair& v);
PreferencePair preference_pair_from_json(const Json& j);

/// Term-frequency cosine over lowercased tokens split on Unicode whitespace.
/// Empty vs empty is 1.0; empty vs non-empty is 0.0.
double cosine_similarity(std::string_view a, std::string_view b);

inline constexpr double kCosineThreshold = 0.7;

/// Threshold rule shared by SFT filtering and DPO labeling: strictly greater
/// than the threshold passes; ExactMatch/Judge pass on score 1.
bool threshold_passed(EvalMetric metric, double score, double threshold = kCosineThreshold);

struct EvalConfig {
    EvalMetric metric = EvalMetric::ExactMatch;
    double cosine_threshold = kCosineThreshold;
    BackendPtr judge;                   // required for Judge
    const PromptTemplates* templates = nullptr; // defaults used when null
};

/// Scores the trajectory's final answer against gold. Judge verdicts get one
/// retry; an unparseable verdict raises EvalError so the caller can exclude
/// and log the trajectory.
EvalOutcome evaluate(const Trajectory& trajectory, const std::string& gold,
                     const EvalConfig& cfg);

struct SftFilterResult {
    std::vector<Trajectory> retained; // input order preserved
    // dataset -> (retained, total)
    std::map<DatasetKind, std::pair<int, int>> counts;
};

/// Keeps exactly the passing trajectories. Every input must be evaluated;
/// otherwise PreconditionError names the offender.
SftFilterResult filter_sft(const std::vector<Trajectory>& trajectories);

struct PairPolicy {
    // 0 = unlimited; otherwise cap per question after dedup.
    std::size_t max_pairs_per_question = 0;
};

/// Full bipartite passed x failed pairs over rollouts of one question,
/// deduplicated on identical (chosen, rejected) plan text. All rollouts must
/// be evaluated and share a task id.
std::vector<PreferencePair> build_dpo_pairs(const std::vector<Trajectory>& rollouts,
                                            const PairPolicy& policy = {});

struct DatasetStats {
    int count = 0;
    double avg_subtasks = 0.0; // subtasks in the final plan
    double avg_steps = 0.0;    // total steps across posted results
};

struct StatsReport {
    std::map<DatasetKind, DatasetStats> per_dataset;
    DatasetStats total;

    std::string to_table() const; // two-decimal rows, one per dataset
};

StatsReport dataset_stats(const std::vector<Trajectory>& trajectories);

} // namespace crew

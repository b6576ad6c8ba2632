// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crew/agents.hpp"
#include "crew/channel.hpp"
#include "crew/core.hpp"

namespace crew {

enum class TerminationKind { AllSubtasksDone, BudgetExhausted, Aborted };

std::string to_string(TerminationKind k);
TerminationKind termination_kind_from_string(const std::string& s);

/// One planner exchange, kept verbatim for the training-data pipeline.
struct PlannerInteraction {
    int plan_index = 0;
    std::string kind; // "decompose" | "replan" | "synthesize"
    std::string prompt;
    std::string raw_reply;
    int format_retries = 0;

    bool operator==(const PlannerInteraction&) const = default;
};

struct SubtaskTurns {
    std::string subtask_id;
    std::vector<WorkerTurn> turns;
};

/// Full record of one run. failure_count stays <= max_replans when the last
/// plan completed; it equals max_replans + 1 exactly when the budget ran out.
struct RunRecord {
    std::string task_id;
    std::vector<Plan> plans;
    std::vector<ChannelMessage> channel_log;
    std::vector<SubtaskResult> results; // successful results, in post order
    int failure_count = 0;
    std::string final_answer;
    TerminationKind terminated_by = TerminationKind::AllSubtasksDone;
    std::vector<std::string> annotations; // e.g. CoordinatorFallback events
    std::vector<PlannerInteraction> planner_interactions;
    std::vector<SubtaskTurns> worker_turns; // tool transcripts, per subtask
    std::optional<std::string> abort_reason;

    bool aborted() const { return terminated_by == TerminationKind::Aborted; }
};

Json to_json(const RunRecord& v);
RunRecord run_record_from_json(const Json& j);

struct AgentSet {
    Planner& planner;
    Coordinator& coordinator;
    WorkerProvider& workers;
};

/// Bounded replanning loop: plan, assign, execute and collect until the plan
/// completes or the replanning budget (cfg.max_replans) is spent, then
/// synthesize a final answer over whatever results were collected. A backend
/// failure outside the worker loop aborts the run with a partial record.
RunRecord run(const TaskSpec& task, std::span<const WorkerDescriptor> registry,
              AgentSet agents, const RunConfig& cfg);

} // namespace crew

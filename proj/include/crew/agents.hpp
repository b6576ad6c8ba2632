// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "crew/backend.hpp"
#include "crew/channel.hpp"
#include "crew/core.hpp"
#include "crew/prompts.hpp"
#include "crew/toolkit.hpp"

namespace crew {

inline constexpr const char* kFailureSentinel = "TASK_FAILED:";
inline constexpr int kPlannerFormatRetries = 2;

// --- strict output parsing -----------------------------------------------

/// Total parsers: they return a value or a typed error, never throw.
struct TaskListParse {
    enum class Error { None, NoTasksBlock, EmptyBlock };
    std::vector<std::string> tasks;
    Error error = Error::None;
    std::string raw_text;

    bool ok() const { return error == Error::None; }
};

/// Extracts the first well-formed <tasks>...</tasks> block, tolerating prose
/// around the block and whitespace inside the tags.
TaskListParse parse_task_list(std::string_view text);

struct AssigneeParse {
    enum class Error { None, NotFound, WrongType };
    std::string assignee_id;
    Error error = Error::None;

    bool ok() const { return error == Error::None; }
};

/// Finds the first JSON object containing the key "assignee_id" anywhere in
/// the text (fenced or inline) and returns its value.
AssigneeParse parse_assignee(std::string_view text);

// --- agent interfaces -----------------------------------------------------

struct PlanOutcome {
    Plan plan;
    std::string prompt;    // rendered prompt that produced the plan
    std::string raw_reply; // verbatim model reply
    int format_retries = 0;
};

class Planner {
public:
    virtual ~Planner() = default;
    virtual PlanOutcome decompose(const TaskSpec& task,
                                  std::span<const WorkerDescriptor> registry) = 0;
    /// prior_plans supplies the descriptions behind the failure entries; the
    /// new plan gets index prior_plans.size().
    virtual PlanOutcome replan(const TaskSpec& task,
                               std::span<const WorkerDescriptor> registry,
                               const FailureInfo& failures,
                               std::span<const Plan> prior_plans) = 0;
    virtual std::string synthesize(const TaskSpec& task, std::span<const Plan> plans,
                                   std::span<const SubtaskResult> results) = 0;
};

struct AssignOutcome {
    WorkerDescriptor worker;
    int reasks = 0;
    bool fallback = false;
    std::string prompt;
    std::string raw_reply;
};

class Coordinator {
public:
    virtual ~Coordinator() = default;
    virtual AssignOutcome find_assignee(const Subtask& subtask,
                                        std::span<const WorkerDescriptor> registry,
                                        const TaskSpec& task) = 0;
};

struct WorkerTurn {
    int step_index = 0;
    enum class Kind { ToolCall, FinalResult, SelfReportedFailure } kind = Kind::FinalResult;
    std::optional<std::string> tool_name;
    std::optional<std::string> arguments;
    std::optional<std::string> observation;
};

std::string to_string(WorkerTurn::Kind k);
WorkerTurn::Kind worker_turn_kind_from_string(const std::string& s);
Json to_json(const WorkerTurn& v);
WorkerTurn worker_turn_from_json(const Json& j);

struct ProcessOutcome {
    SubtaskResult result;
    // Non-empty iff result.outcome == Failure; the orchestrator records it
    // on the Subtask.
    std::string failure_reason;
    std::vector<WorkerTurn> turns;
    std::string rendered_prompt; // the worker user prompt, for isolation checks
};

class Worker {
public:
    virtual ~Worker() = default;
    virtual ProcessOutcome process_task(const Subtask& subtask, const DependencyContext& ctx,
                                        const TaskSpec& overall_task, const RunConfig& cfg) = 0;
};

/// Maps a registry entry to the worker that executes its subtasks.
class WorkerProvider {
public:
    virtual ~WorkerProvider() = default;
    virtual Worker& worker_for(const WorkerDescriptor& descriptor) = 0;
};

// --- prompt rendering helpers ---------------------------------------------

/// "<ID>:<description>:<tools: a, b>" lines, one per worker.
std::string format_worker_list(std::span<const WorkerDescriptor> registry);
std::string format_failures(const FailureInfo& failures,
                            std::span<const Plan> plans);
std::string format_dependency_results(const DependencyContext& ctx);

/// Description/result pairs in plan order regardless of result input order.
std::string format_subtask_results(std::span<const Plan> plans,
                                   std::span<const SubtaskResult> results);

// --- model-backed agents ----------------------------------------------------

/// Planner that renders the decomposition/replanning prompts, asks the
/// backend, and parses the <tasks> block; malformed replies are re-asked up
/// to kPlannerFormatRetries times with a format reminder before
/// PlannerFormatError is raised. Subtasks get ids "p{plan}.s{i}" and, by
/// default, depend on every earlier subtask of their plan.
class ModelPlanner : public Planner {
public:
    ModelPlanner(BackendPtr backend, PromptTemplates templates);

    PlanOutcome decompose(const TaskSpec& task,
                          std::span<const WorkerDescriptor> registry) override;
    PlanOutcome replan(const TaskSpec& task, std::span<const WorkerDescriptor> registry,
                       const FailureInfo& failures, std::span<const Plan> prior_plans) override;
    std::string synthesize(const TaskSpec& task, std::span<const Plan> plans,
                           std::span<const SubtaskResult> results) override;

private:
    PlanOutcome plan_from_prompt(const std::string& user_prompt, int plan_index);

    BackendPtr backend_;
    PromptTemplates templates_;
};

/// Coordinator that asks the backend for {"assignee_id": ...}; an unknown id
/// (or unparseable reply) is re-asked once with the valid id list; a second
/// failure falls back to the first registered worker.
class ModelCoordinator : public Coordinator {
public:
    ModelCoordinator(BackendPtr backend, PromptTemplates templates);

    AssignOutcome find_assignee(const Subtask& subtask,
                                std::span<const WorkerDescriptor> registry,
                                const TaskSpec& task) override;

private:
    BackendPtr backend_;
    PromptTemplates templates_;
};

/// Tool-calling worker loop. Each backend call is one step; the loop runs
/// while the model keeps requesting tools and steps stay under
/// max_steps_per_subtask. Failure outcomes: a final message starting with
/// TASK_FAILED:, an exhausted step budget, a ToolFatalError from a tool, or
/// a backend error.
class ToolLoopWorker : public Worker {
public:
    ToolLoopWorker(WorkerDescriptor descriptor, BackendPtr backend,
                   const ToolRegistry& registry, PromptTemplates templates,
                   ToolContext tool_ctx);

    ProcessOutcome process_task(const Subtask& subtask, const DependencyContext& ctx,
                                const TaskSpec& overall_task, const RunConfig& cfg) override;

private:
    WorkerDescriptor descriptor_;
    BackendPtr backend_;
    const ToolRegistry& registry_;
    PromptTemplates templates_;
    ToolContext tool_ctx_;
};

/// Builds one ToolLoopWorker per registry entry, lazily.
class WorkerPool : public WorkerProvider {
public:
    WorkerPool(BackendPtr backend, const ToolRegistry& registry, PromptTemplates templates,
               ToolContext tool_ctx);

    Worker& worker_for(const WorkerDescriptor& descriptor) override;

private:
    BackendPtr backend_;
    const ToolRegistry& registry_;
    PromptTemplates templates_;
    ToolContext tool_ctx_;
    std::map<std::string, std::unique_ptr<ToolLoopWorker>> workers_;
};

// --- synthetic agents (benchmark sweeps, property tests) -------------------

/// Emits a fixed-size plan without any model call.
class FixedPlanner : public Planner {
public:
    explicit FixedPlanner(int subtask_count) : subtask_count_(subtask_count) {}

    PlanOutcome decompose(const TaskSpec& task,
                          std::span<const WorkerDescriptor> registry) override;
    PlanOutcome replan(const TaskSpec& task, std::span<const WorkerDescriptor> registry,
                       const FailureInfo& failures, std::span<const Plan> prior_plans) override;
    std::string synthesize(const TaskSpec& task, std::span<const Plan> plans,
                           std::span<const SubtaskResult> results) override;

private:
    int subtask_count_;
};

/// Always assigns the first registered worker.
class FirstWorkerCoordinator : public Coordinator {
public:
    AssignOutcome find_assignee(const Subtask& subtask,
                                std::span<const WorkerDescriptor> registry,
                                const TaskSpec& task) override;
};

/// Succeeds with probability p per subtask, from a deterministic seeded
/// stream. The draw uses the top 53 bits of the engine output so results are
/// identical across standard libraries.
class StochasticWorker : public Worker, public WorkerProvider {
public:
    StochasticWorker(double success_probability, std::uint64_t seed);

    ProcessOutcome process_task(const Subtask& subtask, const DependencyContext& ctx,
                                const TaskSpec& overall_task, const RunConfig& cfg) override;
    Worker& worker_for(const WorkerDescriptor&) override { return *this; }

private:
    double p_;
    std::mt19937_64 rng_;
};

} // namespace crew

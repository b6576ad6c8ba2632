// SPDX-License-Identifier: Apache-2.0
#include "crew/agents.hpp"

#include "crew/errors.hpp"

#include <algorithm>
#include <sstream>

namespace crew {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

} // namespace

TaskListParse parse_task_list(std::string_view text) {
    TaskListParse out;
    out.raw_text = std::string{text};

    bool saw_block = false;
    size_t cursor = 0;
    while (true) {
        const auto open = text.find("<tasks>", cursor);
        if (open == std::string_view::npos) break;
        const auto close = text.find("</tasks>", open + 7);
        if (close == std::string_view::npos) break;
        saw_block = true;

        const auto block = text.substr(open + 7, close - open - 7);
        std::vector<std::string> tasks;
        size_t at = 0;
        while (true) {
            const auto task_open = block.find("<task>", at);
            if (task_open == std::string_view::npos) break;
            const auto task_close = block.find("</task>", task_open + 6);
            if (task_close == std::string_view::npos) break;
            tasks.emplace_back(trim(block.substr(task_open + 6, task_close - task_open - 6)));
            at = task_close + 7;
        }
        if (!tasks.empty()) {
            out.tasks = std::move(tasks);
            return out;
        }
        cursor = close + 8; // empty block; keep looking for a populated one
    }
    out.error = saw_block ? TaskListParse::Error::EmptyBlock : TaskListParse::Error::NoTasksBlock;
    return out;
}

namespace {

// Span of the balanced JSON object starting at text[open] ('{'), honoring
// string literals and escapes; npos when unterminated.
size_t balanced_object_end(std::string_view text, size_t open) {
    int depth = 0;
    bool in_string = false;
    for (size_t i = open; i < text.size(); ++i) {
        const char c = text[i];
        if (in_string) {
            if (c == '\\') ++i;
            else if (c == '"') in_string = false;
            continue;
        }
        if (c == '"') in_string = true;
        else if (c == '{') ++depth;
        else if (c == '}') {
            if (--depth == 0) return i;
        }
    }
    return std::string_view::npos;
}

} // namespace

AssigneeParse parse_assignee(std::string_view text) {
    AssigneeParse out;
    if (text.find("assignee_id") == std::string_view::npos) {
        out.error = AssigneeParse::Error::NotFound;
        return out;
    }
    for (size_t open = text.find('{'); open != std::string_view::npos;
         open = text.find('{', open + 1)) {
        const auto close = balanced_object_end(text, open);
        if (close == std::string_view::npos) continue;
        const auto candidate = text.substr(open, close - open + 1);
        if (candidate.find("assignee_id") == std::string_view::npos) continue;
        Json parsed = Json::parse(candidate, nullptr, false);
        if (parsed.is_discarded() || !parsed.is_object()) continue;
        if (!parsed.contains("assignee_id")) continue;
        const auto& value = parsed.at("assignee_id");
        if (!value.is_string()) {
            out.error = AssigneeParse::Error::WrongType;
            return out;
        }
        out.assignee_id = value.get<std::string>();
        return out;
    }
    out.error = AssigneeParse::Error::NotFound;
    return out;
}

std::string to_string(WorkerTurn::Kind k) {
    switch (k) {
        case WorkerTurn::Kind::ToolCall: return "ToolCall";
        case WorkerTurn::Kind::FinalResult: return "FinalResult";
        case WorkerTurn::Kind::SelfReportedFailure: return "SelfReportedFailure";
    }
    return "FinalResult";
}

WorkerTurn::Kind worker_turn_kind_from_string(const std::string& s) {
    if (s == "ToolCall") return WorkerTurn::Kind::ToolCall;
    if (s == "FinalResult") return WorkerTurn::Kind::FinalResult;
    if (s == "SelfReportedFailure") return WorkerTurn::Kind::SelfReportedFailure;
    throw ConfigError("unknown worker turn kind: " + s);
}

Json to_json(const WorkerTurn& v) {
    Json j;
    j["step_index"] = v.step_index;
    j["kind"] = to_string(v.kind);
    if (v.tool_name) j["tool_name"] = *v.tool_name;
    if (v.arguments) j["arguments"] = *v.arguments;
    if (v.observation) j["observation"] = *v.observation;
    return j;
}

WorkerTurn worker_turn_from_json(const Json& j) {
    WorkerTurn v;
    v.step_index = j.at("step_index").get<int>();
    v.kind = worker_turn_kind_from_string(j.at("kind").get<std::string>());
    if (j.contains("tool_name")) v.tool_name = j.at("tool_name").get<std::string>();
    if (j.contains("arguments")) v.arguments = j.at("arguments").get<std::string>();
    if (j.contains("observation")) v.observation = j.at("observation").get<std::string>();
    return v;
}

std::string format_worker_list(std::span<const WorkerDescriptor> registry) {
    std::ostringstream out;
    bool first = true;
    for (const auto& w : registry) {
        if (!first) out << "\n";
        first = false;
        out << "<" << w.worker_id << ">:<" << w.description << ">:<tools: ";
        for (size_t i = 0; i < w.tool_names.size(); ++i) {
            if (i) out << ", ";
            out << w.tool_names[i];
        }
        out << ">";
    }
    return out.str();
}

namespace {

const Subtask* find_subtask(std::span<const Plan> plans, const std::string& id) {
    for (const auto& plan : plans)
        for (const auto& s : plan.subtasks)
            if (s.subtask_id == id) return &s;
    return nullptr;
}

} // namespace

std::string format_failures(const FailureInfo& failures, std::span<const Plan> plans) {
    std::ostringstream out;
    int n = 0;
    for (const auto& entry : failures.entries) {
        if (n++) out << "\n";
        const auto* subtask = find_subtask(plans, entry.subtask_id);
        out << n << ". <" << (subtask ? subtask->description : entry.subtask_id)
            << ">: " << entry.reason;
    }
    return out.str();
}

std::string format_dependency_results(const DependencyContext& ctx) {
    std::ostringstream out;
    bool first = true;
    for (const auto& entry : ctx.entries) {
        if (!first) out << "\n\n";
        first = false;
        out << entry.result_text;
    }
    return out.str();
}

std::string format_subtask_results(std::span<const Plan> plans,
                                   std::span<const SubtaskResult> results) {
    std::vector<const SubtaskResult*> ordered;
    std::vector<bool> used(results.size(), false);
    for (const auto& plan : plans) {
        for (const auto& s : plan.subtasks) {
            for (size_t i = 0; i < results.size(); ++i) {
                if (!used[i] && results[i].subtask_id == s.subtask_id) {
                    ordered.push_back(&results[i]);
                    used[i] = true;
                }
            }
        }
    }
    for (size_t i = 0; i < results.size(); ++i)
        if (!used[i]) ordered.push_back(&results[i]);

    if (ordered.empty()) return "(no subtask results were collected)";
    std::ostringstream out;
    for (size_t i = 0; i < ordered.size(); ++i) {
        const auto* subtask = find_subtask(plans, ordered[i]->subtask_id);
        if (i) out << "\n\n";
        out << (i + 1) << ". "
            << (subtask ? subtask->description : ordered[i]->subtask_id)
            << "\nResult: " << ordered[i]->result_text;
    }
    return out.str();
}

// --- ModelPlanner -----------------------------------------------------------

ModelPlanner::ModelPlanner(BackendPtr backend, PromptTemplates templates)
    : backend_(std::move(backend)), templates_(std::move(templates)) {}

PlanOutcome ModelPlanner::plan_from_prompt(const std::string& user_prompt, int plan_index) {
    ModelRequest request;
    request.messages.push_back({Role::System, templates_.planner_system, {}, {}});
    request.messages.push_back({Role::User, user_prompt, {}, {}});

    int retries = 0;
    std::string raw;
    while (true) {
        const auto response = backend_->complete(request);
        raw = response.content.value_or("");
        auto parsed = parse_task_list(raw);
        if (parsed.ok()) {
            Plan plan;
            plan.plan_index = plan_index;
            int ordinal = 1;
            std::vector<std::string> earlier;
            for (auto& description : parsed.tasks) {
                Subtask s;
                s.subtask_id = make_subtask_id(plan_index, ordinal++);
                s.description = std::move(description);
                s.depends_on = earlier; // default: depend on all prior subtasks
                earlier.push_back(s.subtask_id);
                plan.subtasks.push_back(std::move(s));
            }
            return {std::move(plan), user_prompt, raw, retries};
        }
        if (retries >= kPlannerFormatRetries)
            throw PlannerFormatError(
                "planner reply lacked a usable <tasks> block after " +
                    std::to_string(retries) + " format retries",
                raw);
        request.messages.push_back({Role::Assistant, raw, {}, {}});
        request.messages.push_back({Role::User, templates_.format_reminder, {}, {}});
        ++retries;
    }
}

PlanOutcome ModelPlanner::decompose(const TaskSpec& task,
                                    std::span<const WorkerDescriptor> registry) {
    if (registry.empty())
        throw PreconditionError("decompose requires a non-empty worker registry");
    const auto prompt = render_template(
        templates_.decompose_user,
        {{"task_content", task.content},
         {"additional_info", task.additional_info.value_or("None")},
         {"worker_list", format_worker_list(registry)}});
    return plan_from_prompt(prompt, 0);
}

PlanOutcome ModelPlanner::replan(const TaskSpec& task,
                                 std::span<const WorkerDescriptor> registry,
                                 const FailureInfo& failures,
                                 std::span<const Plan> prior_plans) {
    if (registry.empty())
        throw PreconditionError("replan requires a non-empty worker registry");
    if (failures.empty())
        throw PreconditionError("replan requires at least one failure entry");
    const auto prompt = render_template(
        templates_.replan_user,
        {{"task_content", task.content},
         {"additional_info", task.additional_info.value_or("None")},
         {"worker_list", format_worker_list(registry)},
         {"failures", format_failures(failures, prior_plans)}});
    return plan_from_prompt(prompt, static_cast<int>(prior_plans.size()));
}

std::string ModelPlanner::synthesize(const TaskSpec& task, std::span<const Plan> plans,
                                     std::span<const SubtaskResult> results) {
    const auto prompt = render_template(
        templates_.synthesize_user,
        {{"task_content", task.content},
         {"additional_info", task.additional_info.value_or("None")},
         {"subtask_results", format_subtask_results(plans, results)}});
    ModelRequest request;
    request.messages.push_back({Role::System, templates_.planner_system, {}, {}});
    request.messages.push_back({Role::User, prompt, {}, {}});
    return backend_->complete(request).content.value_or("");
}

// --- ModelCoordinator --------------------------------------------------------

ModelCoordinator::ModelCoordinator(BackendPtr backend, PromptTemplates templates)
    : backend_(std::move(backend)), templates_(std::move(templates)) {}

AssignOutcome ModelCoordinator::find_assignee(const Subtask& subtask,
                                              std::span<const WorkerDescriptor> registry,
                                              const TaskSpec& task) {
    if (registry.empty())
        throw PreconditionError("find_assignee requires a non-empty worker registry");
    const auto prompt = render_template(
        templates_.coordinator_user,
        {{"subtask", subtask.description},
         {"additional_info", task.additional_info.value_or("None")},
         {"worker_list", format_worker_list(registry)}});

    ModelRequest request;
    request.messages.push_back({Role::System, templates_.coordinator_system, {}, {}});
    request.messages.push_back({Role::User, prompt, {}, {}});

    auto resolve = [&](const std::string& reply) -> const WorkerDescriptor* {
        const auto parsed = parse_assignee(reply);
        if (!parsed.ok()) return nullptr;
        auto it = std::find_if(registry.begin(), registry.end(), [&](const auto& w) {
            return w.worker_id == parsed.assignee_id;
        });
        return it == registry.end() ? nullptr : &*it;
    };

    auto response = backend_->complete(request);
    std::string raw = response.content.value_or("");
    if (const auto* worker = resolve(raw))
        return {*worker, 0, false, prompt, raw};

    // One re-ask carrying the valid id list.
    std::string id_list;
    for (size_t i = 0; i < registry.size(); ++i) {
        if (i) id_list += ", ";
        id_list += registry[i].worker_id;
    }
    request.messages.push_back({Role::Assistant, raw, {}, {}});
    request.messages.push_back(
        {Role::User,
         "That worker id does not exist. Valid worker ids are: " + id_list +
             ". Return your decision as a JSON object of the form {\"assignee_id\": \"<ID>\"}.",
         {},
         {}});
    response = backend_->complete(request);
    raw = response.content.value_or("");
    if (const auto* worker = resolve(raw))
        return {*worker, 1, false, prompt, raw};

    return {registry.front(), 1, true, prompt, raw};
}

// --- ToolLoopWorker -----------------------------------------------------------

ToolLoopWorker::ToolLoopWorker(WorkerDescriptor descriptor, BackendPtr backend,
                               const ToolRegistry& registry, PromptTemplates templates,
                               ToolContext tool_ctx)
    : descriptor_(std::move(descriptor)),
      backend_(std::move(backend)),
      registry_(registry),
      templates_(std::move(templates)),
      tool_ctx_(std::move(tool_ctx)) {}

ProcessOutcome ToolLoopWorker::process_task(const Subtask& subtask,
                                            const DependencyContext& ctx,
                                            const TaskSpec& overall_task,
                                            const RunConfig& cfg) {
    ProcessOutcome out;
    out.result.subtask_id = subtask.subtask_id;
    out.rendered_prompt = render_template(
        templates_.worker_user,
        {{"subtask", subtask.description},
         {"overall_task", overall_task.content},
         {"dependency_results", format_dependency_results(ctx)},
         {"additional_info", overall_task.additional_info.value_or("None")}});

    ModelRequest request;
    request.messages.push_back(
        {Role::System, descriptor_.description + "\n\n" + templates_.worker_failure_instruction,
         {}, {}});
    request.messages.push_back({Role::User, out.rendered_prompt, {}, {}});
    request.tools = registry_.request_specs(descriptor_.tool_names);

    auto fail = [&](std::string reason, std::string result_text) {
        out.result.outcome = SubtaskOutcome::Failure;
        out.result.result_text = std::move(result_text);
        out.failure_reason = std::move(reason);
        return out;
    };

    int steps = 0;
    while (steps < cfg.max_steps_per_subtask) {
        ModelResponse response;
        try {
            response = backend_->complete(request);
        } catch (const BackendError& e) {
            out.result.steps_used = steps;
            return fail(e.what(), "");
        }
        out.result.steps_used = ++steps;

        if (response.finish_kind == FinishKind::ToolCalls) {
            request.messages.push_back(
                {Role::Assistant, response.content.value_or(""), response.tool_calls, {}});
            for (const auto& call : response.tool_calls) {
                ToolResult tool_result;
                try {
                    tool_result = registry_.invoke(call.tool_name, call.arguments, tool_ctx_);
                } catch (const ToolFatalError& e) {
                    return fail("tool '" + call.tool_name + "' failed unrecoverably: " + e.what(),
                                "");
                }
                const std::string observation =
                    tool_result.ok
                        ? tool_result.output
                        : "tool error (" + to_string(*tool_result.error_kind) + "): " +
                              tool_result.output;
                WorkerTurn turn;
                turn.step_index = steps - 1;
                turn.kind = WorkerTurn::Kind::ToolCall;
                turn.tool_name = call.tool_name;
                turn.arguments = call.arguments;
                turn.observation = observation;
                out.turns.push_back(std::move(turn));
                request.messages.push_back({Role::Tool, observation, {}, call.call_id});
            }
            continue;
        }

        const std::string text = response.content.value_or("");
        if (text.rfind(kFailureSentinel, 0) == 0) {
            auto reason = text.substr(std::string_view{kFailureSentinel}.size());
            if (const auto eol = reason.find('\n'); eol != std::string::npos)
                reason = reason.substr(0, eol);
            reason = std::string{trim(reason)};
            if (reason.empty()) reason = "unspecified failure";
            out.turns.push_back({steps - 1, WorkerTurn::Kind::SelfReportedFailure, {}, {}, {}});
            return fail(std::move(reason), text);
        }
        out.turns.push_back({steps - 1, WorkerTurn::Kind::FinalResult, {}, {}, {}});
        out.result.outcome = SubtaskOutcome::Success;
        out.result.result_text = text;
        return out;
    }

    out.result.steps_used = steps;
    return fail("step budget exceeded", "");
}

// --- WorkerPool ----------------------------------------------------------------

WorkerPool::WorkerPool(BackendPtr backend, const ToolRegistry& registry,
                       PromptTemplates templates, ToolContext tool_ctx)
    : backend_(std::move(backend)),
      registry_(registry),
      templates_(std::move(templates)),
      tool_ctx_(std::move(tool_ctx)) {}

Worker& WorkerPool::worker_for(const WorkerDescriptor& descriptor) {
    auto it = workers_.find(descriptor.worker_id);
    if (it == workers_.end()) {
        it = workers_
                 .emplace(descriptor.worker_id,
                          std::make_unique<ToolLoopWorker>(descriptor, backend_, registry_,
                                                           templates_, tool_ctx_))
                 .first;
    }
    return *it->second;
}

// --- synthetic agents -------------------------------------------------------------

PlanOutcome FixedPlanner::decompose(const TaskSpec&, std::span<const WorkerDescriptor>) {
    Plan plan;
    plan.plan_index = 0;
    std::vector<std::string> earlier;
    for (int i = 1; i <= subtask_count_; ++i) {
        Subtask s;
        s.subtask_id = make_subtask_id(0, i);
        s.description = "step " + std::to_string(i);
        s.depends_on = earlier;
        earlier.push_back(s.subtask_id);
        plan.subtasks.push_back(std::move(s));
    }
    return {std::move(plan), "", "", 0};
}

PlanOutcome FixedPlanner::replan(const TaskSpec& task, std::span<const WorkerDescriptor> registry,
                                 const FailureInfo& failures,
                                 std::span<const Plan> prior_plans) {
    if (failures.empty())
        throw PreconditionError("replan requires at least one failure entry");
    auto outcome = decompose(task, registry);
    const int plan_index = static_cast<int>(prior_plans.size());
    outcome.plan.plan_index = plan_index;
    std::vector<std::string> earlier;
    for (size_t i = 0; i < outcome.plan.subtasks.size(); ++i) {
        auto& s = outcome.plan.subtasks[i];
        s.subtask_id = make_subtask_id(plan_index, static_cast<int>(i) + 1);
        s.depends_on = earlier;
        earlier.push_back(s.subtask_id);
    }
    return outcome;
}

std::string FixedPlanner::synthesize(const TaskSpec&, std::span<const Plan>,
                                     std::span<const SubtaskResult> results) {
    return results.empty() ? "no results"
                           : "done (" + std::to_string(results.size()) + " results)";
}

AssignOutcome FirstWorkerCoordinator::find_assignee(const Subtask&,
                                                    std::span<const WorkerDescriptor> registry,
                                                    const TaskSpec&) {
    if (registry.empty())
        throw PreconditionError("find_assignee requires a non-empty worker registry");
    return {registry.front(), 0, false, "", ""};
}

StochasticWorker::StochasticWorker(double success_probability, std::uint64_t seed)
    : p_(success_probability), rng_(seed) {}

ProcessOutcome StochasticWorker::process_task(const Subtask& subtask, const DependencyContext&,
                                              const TaskSpec&, const RunConfig&) {
    ProcessOutcome out;
    out.result.subtask_id = subtask.subtask_id;
    out.result.steps_used = 1;
    const double draw = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    if (draw < p_) {
        out.result.outcome = SubtaskOutcome::Success;
        out.result.result_text = "ok";
    } else {
        out.result.outcome = SubtaskOutcome::Failure;
        out.failure_reason = "synthetic failure";
    }
    return out;
}

} // namespace crew

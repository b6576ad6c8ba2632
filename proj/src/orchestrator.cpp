// SPDX-License-Identifier: Apache-2.0
#include "crew/orchestrator.hpp"

#include "crew/errors.hpp"

namespace crew {

std::string to_string(TerminationKind k) {
    switch (k) {
        case TerminationKind::AllSubtasksDone: return "AllSubtasksDone";
        case TerminationKind::BudgetExhausted: return "BudgetExhausted";
        case TerminationKind::Aborted: return "Aborted";
    }
    return "AllSubtasksDone";
}

TerminationKind termination_kind_from_string(const std::string& s) {
    if (s == "AllSubtasksDone") return TerminationKind::AllSubtasksDone;
    if (s == "BudgetExhausted") return TerminationKind::BudgetExhausted;
    if (s == "Aborted") return TerminationKind::Aborted;
    throw ConfigError("unknown termination kind: " + s);
}

Json to_json(const RunRecord& v) {
    Json j;
    j["format_version"] = kFormatVersion;
    j["task_id"] = v.task_id;
    Json plans = Json::array();
    for (const auto& p : v.plans) plans.push_back(to_json(p));
    j["plans"] = std::move(plans);
    Json channel = Json::array();
    for (const auto& m : v.channel_log) channel.push_back(to_json(m));
    j["channel"] = std::move(channel);
    Json results = Json::array();
    for (const auto& r : v.results) results.push_back(to_json(r));
    j["results"] = std::move(results);
    j["failure_count"] = v.failure_count;
    j["final_answer"] = v.final_answer;
    j["terminated_by"] = to_string(v.terminated_by);
    j["annotations"] = v.annotations;
    Json interactions = Json::array();
    for (const auto& pi : v.planner_interactions) {
        Json ji;
        ji["plan_index"] = pi.plan_index;
        ji["kind"] = pi.kind;
        ji["prompt"] = pi.prompt;
        ji["raw_reply"] = pi.raw_reply;
        ji["format_retries"] = pi.format_retries;
        interactions.push_back(std::move(ji));
    }
    j["planner_interactions"] = std::move(interactions);
    Json turns = Json::array();
    for (const auto& st : v.worker_turns) {
        Json jt;
        jt["subtask_id"] = st.subtask_id;
        Json list = Json::array();
        for (const auto& t : st.turns) list.push_back(to_json(t));
        jt["turns"] = std::move(list);
        turns.push_back(std::move(jt));
    }
    j["worker_turns"] = std::move(turns);
    if (v.abort_reason) j["abort_reason"] = *v.abort_reason;
    return j;
}

RunRecord run_record_from_json(const Json& j) {
    RunRecord v;
    v.task_id = j.at("task_id").get<std::string>();
    for (const auto& p : j.at("plans")) v.plans.push_back(plan_from_json(p));
    for (const auto& m : j.at("channel")) v.channel_log.push_back(channel_message_from_json(m));
    for (const auto& r : j.at("results")) v.results.push_back(subtask_result_from_json(r));
    v.failure_count = j.at("failure_count").get<int>();
    v.final_answer = j.at("final_answer").get<std::string>();
    v.terminated_by = termination_kind_from_string(j.at("terminated_by").get<std::string>());
    if (j.contains("annotations"))
        v.annotations = j.at("annotations").get<std::vector<std::string>>();
    if (j.contains("planner_interactions")) {
        for (const auto& ji : j.at("planner_interactions")) {
            PlannerInteraction pi;
            pi.plan_index = ji.at("plan_index").get<int>();
            pi.kind = ji.at("kind").get<std::string>();
            pi.prompt = ji.at("prompt").get<std::string>();
            pi.raw_reply = ji.at("raw_reply").get<std::string>();
            pi.format_retries = ji.at("format_retries").get<int>();
            v.planner_interactions.push_back(std::move(pi));
        }
    }
    if (j.contains("worker_turns")) {
        for (const auto& jt : j.at("worker_turns")) {
            SubtaskTurns st;
            st.subtask_id = jt.at("subtask_id").get<std::string>();
            for (const auto& t : jt.at("turns")) st.turns.push_back(worker_turn_from_json(t));
            v.worker_turns.push_back(std::move(st));
        }
    }
    if (j.contains("abort_reason")) v.abort_reason = j.at("abort_reason").get<std::string>();
    return v;
}

RunRecord run(const TaskSpec& task, std::span<const WorkerDescriptor> registry,
              AgentSet agents, const RunConfig& cfg) {
    if (registry.empty()) throw PreconditionError("run requires a non-empty worker registry");
    if (task.content.empty()) throw PreconditionError("run requires a non-empty task content");

    RunRecord rec;
    rec.task_id = task.task_id;

    TaskChannel channel;
    FailureInfo failure_info;
    std::vector<SubtaskResult> collected; // Algorithm's growing result set
    int failure_count = 0;
    bool plan_failed = false;

    channel.post({0, MessageKind::TaskPosted, std::nullopt, std::nullopt, task.content});

    auto abort_with = [&](const std::string& reason) {
        rec.terminated_by = TerminationKind::Aborted;
        rec.abort_reason = reason;
        rec.failure_count = failure_count;
        rec.results = collected;
        rec.channel_log = channel.log();
        return rec;
    };

    while (failure_count <= cfg.max_replans) {
        plan_failed = false; // reset per iteration so a later plan can succeed

        try {
            PlanOutcome planned =
                failure_info.empty()
                    ? agents.planner.decompose(task, registry)
                    : (channel.post({0, MessageKind::ReplanTriggered, std::nullopt, std::nullopt,
                                     "replan " + std::to_string(static_cast<int>(rec.plans.size())) +
                                         " after " + std::to_string(failure_count) + " failure(s)"}),
                       agents.planner.replan(task, registry, failure_info, rec.plans));
            rec.planner_interactions.push_back({planned.plan.plan_index,
                                                failure_info.empty() ? "decompose" : "replan",
                                                planned.prompt, planned.raw_reply,
                                                planned.format_retries});
            rec.plans.push_back(std::move(planned.plan));
        } catch (const Error& e) {
            return abort_with(std::string{"planning failed: "} + e.what());
        }

        Plan& plan = rec.plans.back();
        for (auto& subtask : plan.subtasks) {
            AssignOutcome assignment;
            try {
                assignment = agents.coordinator.find_assignee(subtask, registry, task);
            } catch (const Error& e) {
                return abort_with(std::string{"coordination failed: "} + e.what());
            }
            if (assignment.fallback)
                rec.annotations.push_back("CoordinatorFallback: subtask " + subtask.subtask_id +
                                          " defaulted to worker " + assignment.worker.worker_id);

            channel.post({0, MessageKind::Assigned, subtask.subtask_id,
                          assignment.worker.worker_id, subtask.description});
            subtask.status = SubtaskStatus::Assigned;

            DependencyContext ctx;
            try {
                ctx = channel.context_for(subtask);
            } catch (const Error& e) {
                return abort_with(std::string{"dependency context failed: "} + e.what());
            }

            auto outcome =
                agents.workers.worker_for(assignment.worker).process_task(subtask, ctx, task, cfg);
            rec.worker_turns.push_back({subtask.subtask_id, std::move(outcome.turns)});

            if (outcome.result.outcome == SubtaskOutcome::Failure) {
                const std::string reason = outcome.failure_reason.empty()
                                               ? "unspecified failure"
                                               : outcome.failure_reason;
                subtask.status = SubtaskStatus::Failed;
                subtask.failure_reason = reason;
                channel.post({0, MessageKind::FailurePosted, subtask.subtask_id, std::nullopt,
                              TaskChannel::encode_failure_payload(plan.plan_index, reason)});
                plan_failed = true;
                failure_info.entries.push_back({plan.plan_index, subtask.subtask_id, reason});
                break;
            }

            subtask.status = SubtaskStatus::Done;
            collected.push_back(outcome.result);
            channel.post({0, MessageKind::ResultPosted, subtask.subtask_id, std::nullopt,
                          outcome.result.result_text});
        }

        if (!plan_failed) break;
        ++failure_count;
    }

    rec.failure_count = failure_count;
    rec.results = collected;
    rec.channel_log = channel.log();

    try {
        rec.final_answer = agents.planner.synthesize(task, rec.plans, collected);
        rec.planner_interactions.push_back(
            {static_cast<int>(rec.plans.size()) - 1, "synthesize", "", rec.final_answer, 0});
    } catch (const Error& e) {
        return abort_with(std::string{"synthesis failed: "} + e.what());
    }

    rec.terminated_by =
        plan_failed ? TerminationKind::BudgetExhausted : TerminationKind::AllSubtasksDone;
    return rec;
}

} // namespace crew

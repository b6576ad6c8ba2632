// SPDX-License-Identifier: Apache-2.0
#include "crew/core.hpp"

#include "crew/errors.hpp"

#include <algorithm>
#include <charconv>
#include <unordered_set>

namespace crew {

std::string make_subtask_id(int plan_index, int ordinal) {
    return "p" + std::to_string(plan_index) + ".s" + std::to_string(ordinal);
}

std::optional<int> subtask_plan_index(std::string_view id) {
    if (id.size() < 4 || id.front() != 'p') return std::nullopt;
    auto dot = id.find(".s");
    if (dot == std::string_view::npos || dot == 1) return std::nullopt;
    int plan = 0;
    auto [ptr, ec] = std::from_chars(id.data() + 1, id.data() + dot, plan);
    if (ec != std::errc{} || ptr != id.data() + dot) return std::nullopt;
    // the ordinal part must be numeric too
    auto ord = id.substr(dot + 2);
    if (ord.empty()) return std::nullopt;
    int ordinal = 0;
    auto [p2, ec2] = std::from_chars(ord.data(), ord.data() + ord.size(), ordinal);
    if (ec2 != std::errc{} || p2 != ord.data() + ord.size()) return std::nullopt;
    return plan;
}

ValidationReport validate_plan(const Plan& plan,
                               std::span<const WorkerDescriptor> registry) {
    ValidationReport report;
    auto add = [&](std::string code, std::string id, std::string detail) {
        report.issues.push_back({std::move(code), std::move(id), std::move(detail)});
    };

    std::unordered_set<std::string> seen;
    for (const auto& s : plan.subtasks) {
        if (!seen.insert(s.subtask_id).second)
            add("duplicate_id", s.subtask_id, "subtask id appears more than once");
        if (s.description.empty())
            add("empty_description", s.subtask_id, "subtask has an empty description");
    }

    // depends_on may reference only subtasks earlier in the same plan, so a
    // plan is acyclic exactly when the given order is already topological.
    std::unordered_set<std::string> earlier;
    for (const auto& s : plan.subtasks) {
        for (const auto& dep : s.depends_on) {
            if (earlier.contains(dep)) continue;
            if (seen.contains(dep))
                add("forward_dependency", s.subtask_id,
                    "depends on '" + dep + "' which is not earlier in the plan");
            else
                add("dangling_dependency", s.subtask_id,
                    "depends on unknown subtask '" + dep + "'");
        }
        earlier.insert(s.subtask_id);
    }

    std::unordered_set<std::string> worker_ids;
    for (const auto& w : registry) {
        if (!worker_ids.insert(w.worker_id).second)
            add("duplicate_worker_id", w.worker_id,
                "worker id appears more than once in the registry");
    }
    return report;
}

std::string to_string(SubtaskStatus s) {
    switch (s) {
        case SubtaskStatus::Pending: return "Pending";
        case SubtaskStatus::Assigned: return "Assigned";
        case SubtaskStatus::Done: return "Done";
        case SubtaskStatus::Failed: return "Failed";
    }
    return "Pending";
}

std::string to_string(SubtaskOutcome o) {
    return o == SubtaskOutcome::Success ? "Success" : "Failure";
}

SubtaskStatus subtask_status_from_string(const std::string& s) {
    if (s == "Pending") return SubtaskStatus::Pending;
    if (s == "Assigned") return SubtaskStatus::Assigned;
    if (s == "Done") return SubtaskStatus::Done;
    if (s == "Failed") return SubtaskStatus::Failed;
    throw ConfigError("unknown subtask status: " + s);
}

SubtaskOutcome subtask_outcome_from_string(const std::string& s) {
    if (s == "Success") return SubtaskOutcome::Success;
    if (s == "Failure") return SubtaskOutcome::Failure;
    throw ConfigError("unknown subtask outcome: " + s);
}

namespace {

void put_optional(Json& j, const char* key, const std::optional<std::string>& v) {
    if (v) j[key] = *v;
}

std::optional<std::string> opt_string(const Json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<std::string>();
}

} // namespace

Json to_json(const TaskSpec& v) {
    Json j;
    j["task_id"] = v.task_id;
    j["content"] = v.content;
    put_optional(j, "additional_info", v.additional_info);
    j["attachments"] = v.attachments;
    put_optional(j, "gold_answer", v.gold_answer);
    if (v.level) j["level"] = *v.level;
    return j;
}

TaskSpec task_spec_from_json(const Json& j) {
    TaskSpec v;
    v.task_id = j.value("task_id", std::string{});
    v.content = j.at("content").get<std::string>();
    v.additional_info = opt_string(j, "additional_info");
    if (j.contains("attachments")) v.attachments = j.at("attachments").get<std::vector<std::string>>();
    v.gold_answer = opt_string(j, "gold_answer");
    if (j.contains("level") && !j.at("level").is_null()) v.level = j.at("level").get<int>();
    if (v.content.empty()) throw ConfigError("task content must be non-empty");
    if (v.level && (*v.level < 1 || *v.level > 3))
        throw ConfigError("task level must be 1, 2 or 3");
    return v;
}

Json to_json(const WorkerDescriptor& v) {
    Json j;
    j["worker_id"] = v.worker_id;
    j["description"] = v.description;
    j["tool_names"] = v.tool_names;
    return j;
}

WorkerDescriptor worker_descriptor_from_json(const Json& j) {
    WorkerDescriptor v;
    v.worker_id = j.at("worker_id").get<std::string>();
    v.description = j.at("description").get<std::string>();
    if (j.contains("tool_names")) v.tool_names = j.at("tool_names").get<std::vector<std::string>>();
    return v;
}

Json to_json(const Subtask& v) {
    Json j;
    j["subtask_id"] = v.subtask_id;
    j["description"] = v.description;
    j["depends_on"] = v.depends_on;
    j["status"] = to_string(v.status);
    put_optional(j, "failure_reason", v.failure_reason);
    return j;
}

Subtask subtask_from_json(const Json& j) {
    Subtask v;
    v.subtask_id = j.at("subtask_id").get<std::string>();
    v.description = j.at("description").get<std::string>();
    if (j.contains("depends_on")) v.depends_on = j.at("depends_on").get<std::vector<std::string>>();
    v.status = subtask_status_from_string(j.value("status", "Pending"));
    v.failure_reason = opt_string(j, "failure_reason");
    return v;
}

Json to_json(const Plan& v) {
    Json j;
    j["plan_index"] = v.plan_index;
    Json subtasks = Json::array();
    for (const auto& s : v.subtasks) subtasks.push_back(to_json(s));
    j["subtasks"] = std::move(subtasks);
    return j;
}

Plan plan_from_json(const Json& j) {
    Plan v;
    v.plan_index = j.at("plan_index").get<int>();
    for (const auto& s : j.at("subtasks")) v.subtasks.push_back(subtask_from_json(s));
    return v;
}

Json to_json(const SubtaskResult& v) {
    Json j;
    j["subtask_id"] = v.subtask_id;
    j["outcome"] = to_string(v.outcome);
    j["result_text"] = v.result_text;
    j["steps_used"] = v.steps_used;
    return j;
}

SubtaskResult subtask_result_from_json(const Json& j) {
    SubtaskResult v;
    v.subtask_id = j.at("subtask_id").get<std::string>();
    v.outcome = subtask_outcome_from_string(j.at("outcome").get<std::string>());
    v.result_text = j.at("result_text").get<std::string>();
    v.steps_used = j.at("steps_used").get<int>();
    return v;
}

Json to_json(const FailureEntry& v) {
    Json j;
    j["plan_index"] = v.plan_index;
    j["subtask_id"] = v.subtask_id;
    j["reason"] = v.reason;
    return j;
}

FailureEntry failure_entry_from_json(const Json& j) {
    FailureEntry v;
    v.plan_index = j.at("plan_index").get<int>();
    v.subtask_id = j.at("subtask_id").get<std::string>();
    v.reason = j.at("reason").get<std::string>();
    return v;
}

Json to_json(const FailureInfo& v) {
    Json j;
    Json entries = Json::array();
    for (const auto& e : v.entries) entries.push_back(to_json(e));
    j["entries"] = std::move(entries);
    return j;
}

FailureInfo failure_info_from_json(const Json& j) {
    FailureInfo v;
    for (const auto& e : j.at("entries")) v.entries.push_back(failure_entry_from_json(e));
    return v;
}

Json to_json(const RunConfig& v) {
    Json j;
    j["max_replans"] = v.max_replans;
    j["max_steps_per_subtask"] = v.max_steps_per_subtask;
    j["pass_k"] = v.pass_k;
    j["decode_mode"] = v.decode_mode;
    j["workspace_dir"] = v.workspace_dir;
    j["blocklist"] = v.blocklist;
    return j;
}

RunConfig run_config_from_json(const Json& j) {
    RunConfig v;
    v.max_replans = j.value("max_replans", 2);
    v.max_steps_per_subtask = j.value("max_steps_per_subtask", 25);
    v.pass_k = j.value("pass_k", 1);
    v.decode_mode = j.value("decode_mode", std::string{"greedy"});
    v.workspace_dir = j.value("workspace_dir", std::string{});
    if (j.contains("blocklist")) v.blocklist = j.at("blocklist").get<std::vector<std::string>>();
    if (v.max_replans < 0) throw ConfigError("max_replans must be >= 0");
    if (v.max_steps_per_subtask < 1) throw ConfigError("max_steps_per_subtask must be >= 1");
    if (v.pass_k < 1) throw ConfigError("pass_k must be >= 1");
    if (v.decode_mode != "greedy") throw ConfigError("decode_mode must be \"greedy\" in v1");
    return v;
}

} // namespace crew

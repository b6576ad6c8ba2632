// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace crew {

// Canonical persisted encoding is UTF-8 JSON with fields in declaration
// order, so rerunning a command yields byte-identical files.
using Json = nlohmann::ordered_json;

inline constexpr int kFormatVersion = 1;

/// The overall task handed to a run.
struct TaskSpec {
    std::string task_id;
    std::string content;
    std::optional<std::string> additional_info;
    std::vector<std::string> attachments;
    std::optional<std::string> gold_answer;
    std::optional<int> level; // 1..3 when present

    bool operator==(const TaskSpec&) const = default;
};

/// Registry entry describing one worker node and its toolkit.
struct WorkerDescriptor {
    std::string worker_id;
    std::string description;
    std::vector<std::string> tool_names;

    bool operator==(const WorkerDescriptor&) const = default;
};

enum class SubtaskStatus { Pending, Assigned, Done, Failed };

struct Subtask {
    std::string subtask_id;
    std::string description;
    std::vector<std::string> depends_on; // earlier subtasks of the same plan
    SubtaskStatus status = SubtaskStatus::Pending;
    std::optional<std::string> failure_reason; // present iff status == Failed

    bool operator==(const Subtask&) const = default;
};

struct Plan {
    int plan_index = 0; // 0 = initial decomposition, >=1 = replans
    std::vector<Subtask> subtasks;

    bool operator==(const Plan&) const = default;
};

enum class SubtaskOutcome { Success, Failure };

struct SubtaskResult {
    std::string subtask_id;
    SubtaskOutcome outcome = SubtaskOutcome::Success;
    std::string result_text;
    int steps_used = 0;

    bool operator==(const SubtaskResult&) const = default;
};

struct FailureEntry {
    int plan_index = 0;
    std::string subtask_id;
    std::string reason;

    bool operator==(const FailureEntry&) const = default;
};

/// Append-only set of failure feedback carried into replanning.
struct FailureInfo {
    std::vector<FailureEntry> entries;

    bool empty() const { return entries.empty(); }
    bool operator==(const FailureInfo&) const = default;
};

struct RunConfig {
    int max_replans = 2;          // K
    int max_steps_per_subtask = 25;
    int pass_k = 1;
    std::string decode_mode = "greedy"; // fixed in v1
    std::string workspace_dir;
    std::vector<std::string> blocklist;

    bool operator==(const RunConfig&) const = default;
};

/// One structural problem found in a plan.
struct ValidationIssue {
    std::string code;       // duplicate_id | dangling_dependency |
                            // forward_dependency | empty_description |
                            // duplicate_worker_id
    std::string subtask_id; // offending subtask (or worker) id
    std::string detail;

    bool operator==(const ValidationIssue&) const = default;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;

    bool ok() const { return issues.empty(); }
};

/// Reports every invariant violation in the plan; never throws.
ValidationReport validate_plan(const Plan& plan,
                               std::span<const WorkerDescriptor> registry);

/// Generated subtask ids follow "p{plan_index}.s{ordinal}" (ordinal from 1).
std::string make_subtask_id(int plan_index, int ordinal);

/// Plan index encoded in a generated subtask id, absent for foreign ids.
std::optional<int> subtask_plan_index(std::string_view subtask_id);

// Enum <-> canonical token helpers.
std::string to_string(SubtaskStatus s);
std::string to_string(SubtaskOutcome o);
SubtaskStatus subtask_status_from_string(const std::string& s);
SubtaskOutcome subtask_outcome_from_string(const std::string& s);

// Canonical JSON codecs. Optional fields are omitted when absent so
// decode(encode(x)) round-trips bit-exactly.
Json to_json(const TaskSpec& v);
Json to_json(const WorkerDescriptor& v);
Json to_json(const Subtask& v);
Json to_json(const Plan& v);
Json to_json(const SubtaskResult& v);
Json to_json(const FailureEntry& v);
Json to_json(const FailureInfo& v);
Json to_json(const RunConfig& v);

TaskSpec task_spec_from_json(const Json& j);
WorkerDescriptor worker_descriptor_from_json(const Json& j);
Subtask subtask_from_json(const Json& j);
Plan plan_from_json(const Json& j);
SubtaskResult subtask_result_from_json(const Json& j);
FailureEntry failure_entry_from_json(const Json& j);
FailureInfo failure_info_from_json(const Json& j);
RunConfig run_config_from_json(const Json& j);

} // namespace crew

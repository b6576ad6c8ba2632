// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "crew/core.hpp"

namespace crew {

enum class MessageKind {
    TaskPosted,
    Assigned,
    ResultPosted,
    FailurePosted,
    ReplanTriggered,
};

std::string to_string(MessageKind k);
MessageKind message_kind_from_string(const std::string& s);

struct ChannelMessage {
    std::int64_t seq = 0;
    MessageKind kind = MessageKind::TaskPosted;
    std::optional<std::string> subtask_id;
    std::optional<std::string> worker_id;
    std::string payload;

    bool operator==(const ChannelMessage&) const = default;
};

Json to_json(const ChannelMessage& v);
ChannelMessage channel_message_from_json(const Json& j);

/// Ordered final results a worker may consult: (subtask_id, description,
/// result_text). Holds only posted result texts, never tool transcripts.
struct DependencyContext {
    struct Entry {
        std::string subtask_id;
        std::string description;
        std::string result_text;

        bool operator==(const Entry&) const = default;
    };
    std::vector<Entry> entries;

    bool operator==(const DependencyContext&) const = default;
};

struct ContextOptions {
    // Results completed before a failure stay visible to replanned subtasks.
    bool include_prior_plan_results = true;
    // Failure payloads from abandoned plans are omitted unless asked for.
    bool include_prior_plan_failures = false;
};

/// Append-only shared task channel; the only inter-agent communication path.
/// Single writer per run, snapshot readers.
class TaskChannel {
public:
    /// Appends the message with the next seq. Throws ChannelError naming the
    /// missing field when a kind-specific field is absent.
    std::int64_t post(ChannelMessage message);

    /// Dependency results for exactly subtask.depends_on, in plan order,
    /// optionally preceded by results retained from earlier (abandoned)
    /// plans. Throws UnsatisfiedDependencyError when a dependency has no
    /// ResultPosted message.
    DependencyContext context_for(const Subtask& subtask,
                                  const ContextOptions& opts = {}) const;

    /// Highest-seq FailurePosted decoded to (plan_index, subtask_id, reason).
    std::optional<FailureEntry> latest_failure() const;

    const std::vector<ChannelMessage>& log() const { return log_; }

    /// FailurePosted payloads carry the plan index alongside the reason so
    /// latest_failure can decode them from the fixed message fields.
    static std::string encode_failure_payload(int plan_index, const std::string& reason);
    static std::pair<int, std::string> decode_failure_payload(const std::string& payload);

private:
    std::vector<ChannelMessage> log_;
};

} // namespace crew

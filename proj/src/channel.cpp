// SPDX-License-Identifier: Apache-2.0
#include "crew/channel.hpp"

#include "crew/errors.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

namespace crew {

std::string to_string(MessageKind k) {
    switch (k) {
        case MessageKind::TaskPosted: return "TaskPosted";
        case MessageKind::Assigned: return "Assigned";
        case MessageKind::ResultPosted: return "ResultPosted";
        case MessageKind::FailurePosted: return "FailurePosted";
        case MessageKind::ReplanTriggered: return "ReplanTriggered";
    }
    return "TaskPosted";
}

MessageKind message_kind_from_string(const std::string& s) {
    if (s == "TaskPosted") return MessageKind::TaskPosted;
    if (s == "Assigned") return MessageKind::Assigned;
    if (s == "ResultPosted") return MessageKind::ResultPosted;
    if (s == "FailurePosted") return MessageKind::FailurePosted;
    if (s == "ReplanTriggered") return MessageKind::ReplanTriggered;
    throw ConfigError("unknown channel message kind: " + s);
}

Json to_json(const ChannelMessage& v) {
    Json j;
    j["seq"] = v.seq;
    j["kind"] = to_string(v.kind);
    if (v.subtask_id) j["subtask_id"] = *v.subtask_id;
    if (v.worker_id) j["worker_id"] = *v.worker_id;
    j["payload"] = v.payload;
    return j;
}

ChannelMessage channel_message_from_json(const Json& j) {
    ChannelMessage v;
    v.seq = j.at("seq").get<std::int64_t>();
    v.kind = message_kind_from_string(j.at("kind").get<std::string>());
    if (j.contains("subtask_id") && !j.at("subtask_id").is_null())
        v.subtask_id = j.at("subtask_id").get<std::string>();
    if (j.contains("worker_id") && !j.at("worker_id").is_null())
        v.worker_id = j.at("worker_id").get<std::string>();
    v.payload = j.value("payload", std::string{});
    return v;
}

std::int64_t TaskChannel::post(ChannelMessage message) {
    auto require = [&](const std::optional<std::string>& field, const char* name) {
        if (!field || field->empty())
            throw ChannelError(std::string{"channel message of kind "} +
                                   to_string(message.kind) + " requires field '" + name + "'",
                               name);
    };
    switch (message.kind) {
        case MessageKind::Assigned:
            require(message.subtask_id, "subtask_id");
            require(message.worker_id, "worker_id");
            break;
        case MessageKind::ResultPosted:
        case MessageKind::FailurePosted:
            require(message.subtask_id, "subtask_id");
            break;
        case MessageKind::TaskPosted:
        case MessageKind::ReplanTriggered:
            break;
    }
    message.seq = static_cast<std::int64_t>(log_.size());
    log_.push_back(std::move(message));
    return log_.back().seq;
}

DependencyContext TaskChannel::context_for(const Subtask& subtask,
                                           const ContextOptions& opts) const {
    // Latest posted result / assignment description per subtask id.
    std::unordered_map<std::string, const ChannelMessage*> results;
    std::unordered_map<std::string, std::string> descriptions;
    for (const auto& m : log_) {
        if (m.kind == MessageKind::ResultPosted)
            results[*m.subtask_id] = &m;
        else if (m.kind == MessageKind::Assigned)
            descriptions[*m.subtask_id] = m.payload;
    }

    DependencyContext ctx;
    std::unordered_set<std::string> direct(subtask.depends_on.begin(),
                                           subtask.depends_on.end());
    const auto own_plan = subtask_plan_index(subtask.subtask_id);

    if (own_plan && *own_plan > 0 && opts.include_prior_plan_results) {
        for (const auto& m : log_) {
            if (m.kind != MessageKind::ResultPosted) continue;
            const auto plan = subtask_plan_index(*m.subtask_id);
            if (!plan || *plan >= *own_plan) continue;
            if (direct.contains(*m.subtask_id)) continue;
            ctx.entries.push_back({*m.subtask_id, descriptions[*m.subtask_id], m.payload});
        }
    }
    if (own_plan && *own_plan > 0 && opts.include_prior_plan_failures) {
        for (const auto& m : log_) {
            if (m.kind != MessageKind::FailurePosted) continue;
            const auto plan = subtask_plan_index(*m.subtask_id);
            if (!plan || *plan >= *own_plan) continue;
            auto [_, reason] = decode_failure_payload(m.payload);
            ctx.entries.push_back({*m.subtask_id, descriptions[*m.subtask_id],
                                   "FAILED: " + reason});
        }
    }

    // depends_on is kept in plan order by construction, so entry order
    // follows plan order.
    for (const auto& dep : subtask.depends_on) {
        auto it = results.find(dep);
        if (it == results.end())
            throw UnsatisfiedDependencyError(
                "subtask '" + subtask.subtask_id + "' depends on '" + dep +
                    "' which has no posted result",
                dep);
        ctx.entries.push_back({dep, descriptions[dep], it->second->payload});
    }
    return ctx;
}

std::optional<FailureEntry> TaskChannel::latest_failure() const {
    for (auto it = log_.rbegin(); it != log_.rend(); ++it) {
        if (it->kind != MessageKind::FailurePosted) continue;
        auto [plan_index, reason] = decode_failure_payload(it->payload);
        return FailureEntry{plan_index, *it->subtask_id, reason};
    }
    return std::nullopt;
}

std::string TaskChannel::encode_failure_payload(int plan_index, const std::string& reason) {
    Json j;
    j["plan_index"] = plan_index;
    j["reason"] = reason;
    return j.dump();
}

std::pair<int, std::string> TaskChannel::decode_failure_payload(const std::string& payload) {
    auto j = Json::parse(payload, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object())
        return {0, payload}; // tolerate plain-text failure payloads
    return {j.value("plan_index", 0), j.value("reason", payload)};
}

} // namespace crew

// SPDX-License-Identifier: Apache-2.0
#include "crew/backend.hpp"

#include "crew/errors.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <thread>

#ifdef CREW_HAVE_OPENSSL
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

namespace crew {

std::string to_string(Role r) {
    switch (r) {
        case Role::System: return "system";
        case Role::User: return "user";
        case Role::Assistant: return "assistant";
        case Role::Tool: return "tool";
    }
    return "user";
}

Role role_from_string(const std::string& s) {
    if (s == "system") return Role::System;
    if (s == "user") return Role::User;
    if (s == "assistant") return Role::Assistant;
    if (s == "tool") return Role::Tool;
    throw ConfigError("unknown message role: " + s);
}

std::string request_text(const ModelRequest& request) {
    std::string out;
    for (const auto& m : request.messages) {
        out += "[" + to_string(m.role) + "] " + m.content;
        for (const auto& c : m.tool_calls)
            out += "\n[tool_call] " + c.tool_name + " " + c.arguments;
        out += "\n";
    }
    return out;
}

namespace {

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

} // namespace

std::string request_digest(const ModelRequest& request) {
    const auto text = request_text(request);
    std::string excerpt;
    if (!request.messages.empty()) {
        excerpt = request.messages.back().content.substr(0, 96);
        for (auto& c : excerpt)
            if (c == '\n') c = ' ';
    }
    return hex64(fnv1a64(text)) + " \"" + excerpt + "\"";
}

ScriptedBackend::ScriptedBackend(const Json& script) {
    if (!script.is_array())
        throw ConfigError("scripted backend expects a JSON array of entries");
    for (const auto& e : script) {
        Entry entry;
        if (e.contains("match")) {
            const auto& m = e.at("match");
            if (m.contains("substring"))
                entry.match_substring = m.at("substring").get<std::string>();
            else if (m.contains("index"))
                entry.match_index = m.at("index").get<int>();
            else
                throw ConfigError("script entry match must hold \"substring\" or \"index\"");
        }
        const auto& reply = e.at("reply");
        if (reply.contains("content")) {
            entry.reply.content = reply.at("content").get<std::string>();
            entry.reply.finish_kind = FinishKind::Text;
        } else if (reply.contains("tool_calls")) {
            int i = 0;
            for (const auto& c : reply.at("tool_calls")) {
                ToolCallRecord rec;
                rec.tool_name = c.at("name").get<std::string>();
                const auto& args = c.at("arguments");
                rec.arguments = args.is_string() ? args.get<std::string>() : args.dump();
                rec.call_id = c.value("id", "call_" + std::to_string(i));
                entry.reply.tool_calls.push_back(std::move(rec));
                ++i;
            }
            entry.reply.finish_kind = FinishKind::ToolCalls;
        } else {
            throw ConfigError("script entry reply must hold \"content\" or \"tool_calls\"");
        }
        if (e.contains("uses")) {
            const auto& u = e.at("uses");
            entry.uses_left = u.is_string() ? -1 : u.get<long>();
        }
        entries_.push_back(std::move(entry));
    }
}

std::shared_ptr<ScriptedBackend> ScriptedBackend::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open script file: " + path);
    Json script = Json::parse(in, nullptr, true, /*ignore_comments=*/true);
    return std::make_shared<ScriptedBackend>(script);
}

ModelResponse ScriptedBackend::complete(const ModelRequest& request) {
    std::lock_guard lock(mutex_);
    const auto text = request_text(request);
    const int call_index = calls_++;
    for (auto& entry : entries_) {
        if (entry.uses_left == 0) continue;
        if (entry.match_substring && text.find(*entry.match_substring) == std::string::npos)
            continue;
        if (entry.match_index && *entry.match_index != call_index) continue;
        if (entry.uses_left > 0) --entry.uses_left;
        return entry.reply;
    }
    throw ScriptExhaustedError(
        "no script entry matches request #" + std::to_string(call_index) + " (" +
            request_digest(request) + ")",
        request_digest(request));
}

Json WireBackend::encode_request(const ModelRequest& request, const std::string& model) {
    Json j;
    j["model"] = model;
    Json msgs = Json::array();
    for (const auto& m : request.messages) {
        Json jm;
        jm["role"] = to_string(m.role);
        jm["content"] = m.content;
        if (!m.tool_calls.empty()) {
            Json calls = Json::array();
            for (const auto& c : m.tool_calls) {
                Json jc;
                jc["id"] = c.call_id;
                jc["type"] = "function";
                jc["function"] = Json{{"name", c.tool_name}, {"arguments", c.arguments}};
                calls.push_back(std::move(jc));
            }
            jm["tool_calls"] = std::move(calls);
        }
        if (m.tool_call_id) jm["tool_call_id"] = *m.tool_call_id;
        msgs.push_back(std::move(jm));
    }
    j["messages"] = std::move(msgs);
    if (!request.tools.empty()) {
        Json tools = Json::array();
        for (const auto& t : request.tools) {
            Json jt;
            jt["type"] = "function";
            jt["function"] =
                Json{{"name", t.name}, {"description", t.description}, {"parameters", t.parameters}};
            tools.push_back(std::move(jt));
        }
        j["tools"] = std::move(tools);
    }
    j["temperature"] = request.temperature;
    return j;
}

ModelResponse WireBackend::decode_response(const Json& body) {
    ModelResponse out;
    const auto& message = body.at("choices").at(0).at("message");
    if (message.contains("tool_calls") && !message.at("tool_calls").empty()) {
        for (const auto& c : message.at("tool_calls")) {
            ToolCallRecord rec;
            rec.call_id = c.value("id", "");
            rec.tool_name = c.at("function").at("name").get<std::string>();
            const auto& args = c.at("function").at("arguments");
            rec.arguments = args.is_string() ? args.get<std::string>() : args.dump();
            out.tool_calls.push_back(std::move(rec));
        }
        out.finish_kind = FinishKind::ToolCalls;
        if (message.contains("content") && message.at("content").is_string())
            out.content = message.at("content").get<std::string>();
    } else {
        if (!message.contains("content") || !message.at("content").is_string())
            throw TransportError("chat completion reply carries neither content nor tool_calls", 0);
        out.content = message.at("content").get<std::string>();
        out.finish_kind = FinishKind::Text;
    }
    return out;
}

WireBackend::WireBackend(WireConfig config, TraceFn trace)
    : config_(std::move(config)), trace_(std::move(trace)) {}

ModelResponse WireBackend::complete(const ModelRequest& request) {
    const Json payload = encode_request(request, config_.model);
    const std::string body = payload.dump();

    std::string api_key;
    if (!config_.api_key_env.empty()) {
        if (const char* v = std::getenv(config_.api_key_env.c_str())) api_key = v;
    }

    std::string last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(250) * (1 << (attempt - 1)));
        }
        httplib::Client client(config_.base_url);
        client.set_read_timeout(config_.timeout_seconds, 0);
        client.set_connection_timeout(config_.timeout_seconds, 0);
        httplib::Headers headers;
        if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);

        if (trace_) trace_("wire request: " + body);
        auto res = client.Post(config_.path, headers, body, "application/json");
        if (!res) {
            last_error = "transport failure: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status < 200 || res->status >= 300) {
            last_error = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200);
            continue;
        }
        if (trace_) trace_("wire response: " + res->body);
        Json parsed = Json::parse(res->body, nullptr, false);
        if (parsed.is_discarded()) {
            last_error = "malformed response body";
            continue;
        }
        try {
            return decode_response(parsed);
        } catch (const Json::exception& e) {
            last_error = std::string{"unexpected response shape: "} + e.what();
            continue;
        }
    }
    throw TransportError("chat completion failed after " +
                             std::to_string(config_.max_retries) + " retries (" + last_error + ")",
                         config_.max_retries);
}

ModelResponse RecordingBackend::complete(const ModelRequest& request) {
    auto response = inner_->complete(request);
    std::lock_guard lock(mutex_);
    exchanges_.push_back({request, response});
    return response;
}

} // namespace crew

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "crew/core.hpp"

namespace crew {

enum class Role { System, User, Assistant, Tool };

std::string to_string(Role r);
Role role_from_string(const std::string& s);

struct ToolCallRecord {
    std::string call_id;
    std::string tool_name;
    std::string arguments; // JSON text, passed through verbatim

    bool operator==(const ToolCallRecord&) const = default;
};

/// Tool schema as exported into a request ("tools" entry).
struct ToolSpec {
    std::string name;
    std::string description;
    Json parameters;
};

struct ChatMessage {
    Role role = Role::User;
    std::string content;
    std::vector<ToolCallRecord> tool_calls;   // assistant messages only
    std::optional<std::string> tool_call_id;  // tool messages only
};

struct ModelRequest {
    std::vector<ChatMessage> messages;
    std::vector<ToolSpec> tools;
    double temperature = 0.0; // greedy decoding, always 0 in v1
};

enum class FinishKind { Text, ToolCalls };

struct ModelResponse {
    std::optional<std::string> content;
    std::vector<ToolCallRecord> tool_calls;
    FinishKind finish_kind = FinishKind::Text;
};

class Backend {
public:
    virtual ~Backend() = default;
    virtual ModelResponse complete(const ModelRequest& request) = 0;
};

using BackendPtr = std::shared_ptr<Backend>;

/// Flattened view of a request used for script matching and trace logs.
std::string request_text(const ModelRequest& request);

/// Short stable fingerprint of a request (hash + excerpt of last message).
std::string request_digest(const ModelRequest& request);

/// Deterministic replay backend driven by a JSON script:
///   [{"match": {"substring": "..."} | {"index": N},
///     "reply": {"content": "..."} | {"tool_calls": [{"name", "arguments", "id"?}]},
///     "uses": 1 | "unlimited"}]
/// Entries are single-use unless "uses" says otherwise. complete() picks the
/// first entry, in script order, that still has uses left and whose matcher
/// fits the request; no match raises ScriptExhaustedError with the request
/// digest. Cursor updates are serialized, so the backend can be shared.
class ScriptedBackend : public Backend {
public:
    explicit ScriptedBackend(const Json& script);
    static std::shared_ptr<ScriptedBackend> from_file(const std::string& path);

    ModelResponse complete(const ModelRequest& request) override;

private:
    struct Entry {
        std::optional<std::string> match_substring;
        std::optional<int> match_index;
        ModelResponse reply;
        long uses_left = 1; // -1 = unlimited
    };
    std::vector<Entry> entries_;
    int calls_ = 0;
    std::mutex mutex_;
};

using TraceFn = std::function<void(std::string_view line)>;

struct WireConfig {
    std::string base_url;    // e.g. "http://localhost:8000"
    std::string path = "/v1/chat/completions";
    std::string model;
    std::string api_key_env; // name of the env var holding the key
    int max_retries = 3;
    int timeout_seconds = 60;
};

/// OpenAI-compatible chat-completions client. Requests are pure so retries
/// (exponential backoff, at most max_retries) are safe; failures surface as
/// TransportError carrying the retry count. The API key never reaches traces.
class WireBackend : public Backend {
public:
    explicit WireBackend(WireConfig config, TraceFn trace = {});

    ModelResponse complete(const ModelRequest& request) override;

    static Json encode_request(const ModelRequest& request, const std::string& model);
    static ModelResponse decode_response(const Json& body);

private:
    WireConfig config_;
    TraceFn trace_;
};

/// Decorator that records every request/response pair passing through.
class RecordingBackend : public Backend {
public:
    explicit RecordingBackend(BackendPtr inner) : inner_(std::move(inner)) {}

    ModelResponse complete(const ModelRequest& request) override;

    struct Exchange {
        ModelRequest request;
        ModelResponse response;
    };
    const std::vector<Exchange>& exchanges() const { return exchanges_; }
    int calls() const { return static_cast<int>(exchanges_.size()); }

private:
    BackendPtr inner_;
    std::vector<Exchange> exchanges_;
    std::mutex mutex_;
};

} // namespace crew

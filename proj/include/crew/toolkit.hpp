// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "crew/backend.hpp"
#include "crew/core.hpp"

namespace crew {

struct ToolSchema {
    std::string name; // must match /^[a-z0-9_]+$/
    std::string description;
    Json parameters;  // JSON-schema-style parameter description
};

enum class ToolErrorKind { BadArguments, Blocked, NotFound, ExecutionError };

std::string to_string(ToolErrorKind k);

struct ToolResult {
    bool ok = false;
    std::string output;
    std::optional<ToolErrorKind> error_kind; // present iff !ok

    static ToolResult success(std::string output);
    static ToolResult failure(ToolErrorKind kind, std::string message);
};

struct ToolContext {
    std::filesystem::path workspace_dir;
    std::filesystem::path corpus_dir;
    std::vector<std::string> blocklist;
};

using ToolHandler = std::function<ToolResult(const Json& args, const ToolContext& ctx)>;

/// Tool registry: immutable after startup, handlers reused sequentially.
class ToolRegistry {
public:
    /// Throws ConfigError on a duplicate or ill-formed name.
    void register_tool(ToolSchema schema, ToolHandler handler);

    bool contains(const std::string& name) const;
    const ToolSchema* find(const std::string& name) const;
    std::vector<std::string> names() const;

    /// Schemas for the given tool names in chat-completions "tools" shape.
    /// Throws ConfigError when a name does not resolve.
    std::vector<ToolSpec> request_specs(const std::vector<std::string>& tool_names) const;

    /// Decodes arguments_text and runs the handler confined to the context.
    /// Total apart from ToolFatalError, which callers must treat as
    /// unrecoverable; every other handler exception becomes ExecutionError.
    ToolResult invoke(const std::string& name, const std::string& arguments_text,
                      const ToolContext& ctx) const;

private:
    struct Registered {
        ToolSchema schema;
        ToolHandler handler;
    };
    std::map<std::string, Registered> tools_;
};

/// Canned output table for the offline code-execution stand-in. Keys are
/// FNV-1a digests of the exact code text.
struct ScriptedExecutorConfig {
    std::map<std::string, std::string> outputs_by_digest;
};

std::string code_digest(std::string_view code);

/// Registers the offline built-ins: calc, read_local_document,
/// search_local_corpus and scripted_executor.
void register_builtins(ToolRegistry& registry, const ScriptedExecutorConfig& exec = {});

/// Arithmetic evaluator behind the calc tool. Throws ConfigError on any
/// non-arithmetic token or on division by zero.
double eval_arithmetic(std::string_view expression);

/// Reserved integration point for live toolkits (web search, browser
/// simulation, multimodal analysis). Adapters bind their own schemas and
/// may hold up to two backends (action execution vs navigation planning);
/// none ship in v1 — tests and benchmarks run offline built-ins only.
class LiveToolAdapter {
public:
    virtual ~LiveToolAdapter() = default;
    virtual void bind(ToolRegistry& registry, BackendPtr action_backend,
                      BackendPtr planning_backend) = 0;
};

} // namespace crew

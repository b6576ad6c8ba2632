// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <vector>

#include "crew/agents.hpp"
#include "crew/backend.hpp"
#include "crew/core.hpp"
#include "crew/harness.hpp"
#include "crew/orchestrator.hpp"
#include "crew/prompts.hpp"
#include "crew/toolkit.hpp"

namespace crew {

struct BackendSpec {
    enum class Kind { Scripted, Wire };
    Kind kind = Kind::Scripted;
    std::string script_path; // Scripted
    WireConfig wire;         // Wire
};

/// Application configuration (JSON file). Relative paths resolve against the
/// config file's directory; referenced script and corpus paths must exist at
/// load time.
struct AppConfig {
    std::map<std::string, BackendSpec> backends; // planner/coordinator/worker/judge/default
    std::vector<WorkerDescriptor> workers;
    RunConfig run;
    struct Paths {
        std::string workspace;
        std::string corpus;
        std::string output = "out";
    } paths;
    std::string prompts_dir;
    ScriptedExecutorConfig scripted_executor;
};

AppConfig load_config(const std::string& path);
AppConfig app_config_from_json(const Json& j, const std::string& base_dir);

/// Bound runtime for one config: tool registry, templates and backend
/// factories. run_task_once builds fresh agents (and fresh scripted-backend
/// cursors) per call, so concurrent runs stay independent and replayable.
class Session {
public:
    explicit Session(AppConfig cfg, TraceFn trace = {});

    const AppConfig& config() const { return cfg_; }
    const PromptTemplates& templates() const { return templates_; }
    const ToolRegistry& tools() const { return registry_; }

    /// Throws ConfigError when the role (or a "default" fallback) is absent.
    BackendPtr make_backend(const std::string& role) const;
    bool has_backend(const std::string& role) const;

    RunRecord run_task_once(const TaskSpec& task) const;

private:
    AppConfig cfg_;
    TraceFn trace_;
    PromptTemplates templates_;
    ToolRegistry registry_;
    ToolContext tool_ctx_;
    std::map<std::string, Json> scripts_; // parsed once, replayed per run
};

/// TaskRunner over a Session, for run_benchmark.
class SessionTaskRunner : public TaskRunner {
public:
    explicit SessionTaskRunner(const Session& session) : session_(session) {}
    RunRecord run_task(const TaskSpec& task, int sample_index) override;

private:
    const Session& session_;
};

} // namespace crew

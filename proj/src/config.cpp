// SPDX-License-Identifier: Apache-2.0
#include "crew/config.hpp"

#include "crew/errors.hpp"

#include <filesystem>
#include <fstream>

namespace crew {

namespace fs = std::filesystem;

namespace {

std::string resolve(const std::string& base_dir, const std::string& path) {
    if (path.empty() || fs::path(path).is_absolute()) return path;
    return (fs::path(base_dir) / path).lexically_normal().string();
}

BackendSpec backend_spec_from_json(const Json& j, const std::string& base_dir,
                                   const std::string& role) {
    BackendSpec spec;
    if (j.contains("scripted")) {
        spec.kind = BackendSpec::Kind::Scripted;
        spec.script_path = resolve(base_dir, j.at("scripted").get<std::string>());
        if (!fs::exists(spec.script_path))
            throw ConfigError("backends." + role + ".scripted: script file does not exist: " +
                              spec.script_path);
    } else if (j.contains("wire")) {
        spec.kind = BackendSpec::Kind::Wire;
        const auto& w = j.at("wire");
        spec.wire.base_url = w.at("base_url").get<std::string>();
        spec.wire.model = w.at("model").get<std::string>();
        spec.wire.api_key_env = w.value("api_key_env", std::string{});
        spec.wire.path = w.value("path", std::string{"/v1/chat/completions"});
        spec.wire.max_retries = w.value("max_retries", 3);
        spec.wire.timeout_seconds = w.value("timeout_seconds", 60);
    } else {
        throw ConfigError("backends." + role + ": expected a \"scripted\" or \"wire\" spec");
    }
    return spec;
}

} // namespace

AppConfig app_config_from_json(const Json& j, const std::string& base_dir) {
    AppConfig cfg;

    if (!j.contains("backends") || !j.at("backends").is_object())
        throw ConfigError("config requires a \"backends\" object");
    for (const auto& [role, spec] : j.at("backends").items())
        cfg.backends.emplace(role, backend_spec_from_json(spec, base_dir, role));

    if (!j.contains("workers") || j.at("workers").empty())
        throw ConfigError("config requires a non-empty \"workers\" list");
    for (const auto& w : j.at("workers"))
        cfg.workers.push_back(worker_descriptor_from_json(w));

    if (j.contains("run")) cfg.run = run_config_from_json(j.at("run"));

    if (j.contains("paths")) {
        const auto& p = j.at("paths");
        cfg.paths.workspace = resolve(base_dir, p.value("workspace", std::string{}));
        cfg.paths.corpus = resolve(base_dir, p.value("corpus", std::string{}));
        cfg.paths.output = resolve(base_dir, p.value("output", std::string{"out"}));
    }
    if (cfg.run.workspace_dir.empty())
        cfg.run.workspace_dir = cfg.paths.workspace;
    else
        cfg.run.workspace_dir = resolve(base_dir, cfg.run.workspace_dir);
    if (!cfg.paths.corpus.empty() && !fs::is_directory(cfg.paths.corpus))
        throw ConfigError("paths.corpus: directory does not exist: " + cfg.paths.corpus);

    if (j.contains("prompts_dir")) {
        cfg.prompts_dir = resolve(base_dir, j.at("prompts_dir").get<std::string>());
        if (!fs::is_directory(cfg.prompts_dir))
            throw ConfigError("prompts_dir: directory does not exist: " + cfg.prompts_dir);
    }

    if (j.contains("scripted_executor")) {
        for (const auto& entry : j.at("scripted_executor")) {
            const std::string output = entry.at("output").get<std::string>();
            if (entry.contains("digest"))
                cfg.scripted_executor.outputs_by_digest[entry.at("digest").get<std::string>()] =
                    output;
            else if (entry.contains("code"))
                cfg.scripted_executor
                    .outputs_by_digest[code_digest(entry.at("code").get<std::string>())] = output;
            else
                throw ConfigError("scripted_executor entries need a \"code\" or \"digest\" key");
        }
    }
    return cfg;
}

AppConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    Json j = Json::parse(in, nullptr, false, /*ignore_comments=*/true);
    if (j.is_discarded()) throw ConfigError("config file is not valid JSON: " + path);
    return app_config_from_json(j, fs::path(path).parent_path().string());
}

Session::Session(AppConfig cfg, TraceFn trace)
    : cfg_(std::move(cfg)), trace_(std::move(trace)) {
    templates_ = PromptTemplates::load_dir(cfg_.prompts_dir);
    register_builtins(registry_, cfg_.scripted_executor);
    tool_ctx_.workspace_dir = cfg_.paths.workspace;
    tool_ctx_.corpus_dir = cfg_.paths.corpus;
    tool_ctx_.blocklist = cfg_.run.blocklist;

    for (const auto& [role, spec] : cfg_.backends) {
        if (spec.kind != BackendSpec::Kind::Scripted) continue;
        std::ifstream in(spec.script_path);
        if (!in) throw ConfigError("cannot open script file: " + spec.script_path);
        Json script = Json::parse(in, nullptr, false, /*ignore_comments=*/true);
        if (script.is_discarded())
            throw ConfigError("script file is not valid JSON: " + spec.script_path);
        scripts_.emplace(spec.script_path, std::move(script));
        // fail fast on malformed entries
        ScriptedBackend probe(scripts_.at(spec.script_path));
    }

    // every worker tool name must resolve at startup
    for (const auto& w : cfg_.workers)
        for (const auto& tool : w.tool_names)
            if (!registry_.contains(tool))
                throw ConfigError("worker '" + w.worker_id +
                                  "' references unknown tool '" + tool + "'");
}

bool Session::has_backend(const std::string& role) const {
    return cfg_.backends.contains(role) || cfg_.backends.contains("default");
}

BackendPtr Session::make_backend(const std::string& role) const {
    auto it = cfg_.backends.find(role);
    if (it == cfg_.backends.end()) it = cfg_.backends.find("default");
    if (it == cfg_.backends.end())
        throw ConfigError("no backend configured for role '" + role + "'");
    const BackendSpec& spec = it->second;
    if (spec.kind == BackendSpec::Kind::Scripted)
        return std::make_shared<ScriptedBackend>(scripts_.at(spec.script_path));
    return std::make_shared<WireBackend>(spec.wire, trace_);
}

RunRecord Session::run_task_once(const TaskSpec& task) const {
    ModelPlanner planner(make_backend("planner"), templates_);
    ModelCoordinator coordinator(make_backend("coordinator"), templates_);
    WorkerPool workers(make_backend("worker"), registry_, templates_, tool_ctx_);
    return run(task, cfg_.workers, {planner, coordinator, workers}, cfg_.run);
}

RunRecord SessionTaskRunner::run_task(const TaskSpec& task, int /*sample_index*/) {
    return session_.run_task_once(task);
}

} // namespace crew

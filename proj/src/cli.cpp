// SPDX-License-Identifier: Apache-2.0
#include "crew/cli.hpp"

#include "crew/config.hpp"
#include "crew/errors.hpp"
#include "crew/harness.hpp"
#include "crew/trajectory.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace crew::cli {

namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write file: " + path.string());
    out << content;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open file: " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

struct SuiteRow {
    TaskSpec task;
    DatasetKind dataset = DatasetKind::custom;
    std::optional<EvalMetric> metric;
};

std::vector<SuiteRow> load_suite(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open suite file: " + path);
    std::vector<SuiteRow> rows;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        Json j = Json::parse(line, nullptr, false);
        if (j.is_discarded())
            throw ConfigError(path + ":" + std::to_string(line_no) + ": invalid JSON");
        SuiteRow row;
        row.task = task_spec_from_json(j);
        if (row.task.task_id.empty())
            row.task.task_id = "task-" + std::to_string(rows.size() + 1);
        if (j.contains("dataset"))
            row.dataset = dataset_kind_from_string(j.at("dataset").get<std::string>());
        if (j.contains("metric"))
            row.metric = eval_metric_from_string(j.at("metric").get<std::string>());
        rows.push_back(std::move(row));
    }
    return rows;
}

// --task accepts a file path (JSON task or plain text) or inline text.
TaskSpec load_task(const std::string& arg) {
    if (fs::exists(arg) && fs::is_regular_file(arg)) {
        const auto content = read_file(arg);
        Json j = Json::parse(content, nullptr, false);
        if (!j.is_discarded() && j.is_object() && j.contains("content")) {
            auto task = task_spec_from_json(j);
            if (task.task_id.empty()) task.task_id = fs::path(arg).stem().string();
            return task;
        }
        TaskSpec task;
        task.task_id = fs::path(arg).stem().string();
        task.content = content;
        while (!task.content.empty() &&
               (task.content.back() == '\n' || task.content.back() == '\r'))
            task.content.pop_back();
        return task;
    }
    TaskSpec task;
    task.task_id = "inline";
    task.content = arg;
    return task;
}

TraceFn make_trace(bool enabled) {
    if (!enabled) return {};
    return [](std::string_view line) { std::cerr << "[trace] " << line << "\n"; };
}

std::string trajectory_line(const Trajectory& t) { return to_json(t).dump() + "\n"; }

// --- subcommand bodies -----------------------------------------------------

int cmd_run(const std::string& task_arg, const std::string& config_path,
            std::string out_path, bool trace) {
    const Session session(load_config(config_path), make_trace(trace));
    const TaskSpec task = load_task(task_arg);
    if (out_path.empty())
        out_path = (fs::path(session.config().paths.output) /
                    ("run-" + task.task_id + ".jsonl"))
                       .string();

    const RunRecord rec = session.run_task_once(task);

    Trajectory trajectory;
    trajectory.run = rec;
    trajectory.gold_answer = task.gold_answer;
    write_file(out_path, trajectory_line(trajectory));
    std::cerr << "trajectory written to " << out_path << "\n";

    if (rec.aborted()) {
        std::cerr << "run aborted: " << rec.abort_reason.value_or("unknown reason") << "\n";
        return 2;
    }
    std::cout << rec.final_answer << "\n";
    return 0;
}

int cmd_bench(const std::string& suite_path, const std::string& config_path, int pass_k,
              std::string out_dir, bool trace, int jobs) {
    const Session session(load_config(config_path), make_trace(trace));
    if (pass_k <= 0) pass_k = session.config().run.pass_k;
    if (out_dir.empty()) out_dir = session.config().paths.output;

    std::vector<TaskSpec> tasks;
    for (auto& row : load_suite(suite_path)) tasks.push_back(std::move(row.task));

    SessionTaskRunner runner(session);
    const BenchReport report = run_benchmark(tasks, runner, pass_k, jobs);

    write_file(fs::path(out_dir) / "report.json", report.to_json().dump(2) + "\n");
    write_file(fs::path(out_dir) / "report.txt", report.to_table());
    std::cout << report.to_table();
    return report.aborted_tasks.empty() ? 0 : 2;
}

int cmd_synth(const std::string& suite_path, const std::string& config_path,
              std::string out_path, bool trace) {
    const Session session(load_config(config_path), make_trace(trace));
    if (out_path.empty())
        out_path = (fs::path(session.config().paths.output) / "trajectories.jsonl").string();

    std::string lines;
    std::vector<Trajectory> evaluated;
    int skipped = 0;
    for (const auto& row : load_suite(suite_path)) {
        const EvalMetric metric = row.metric.value_or(default_metric(row.dataset));
        if (!row.task.gold_answer) {
            std::cerr << "warning: task '" << row.task.task_id
                      << "' has no gold answer; skipped (metric " << to_string(metric)
                      << ")\n";
            ++skipped;
            continue;
        }
        Trajectory t;
        t.run = session.run_task_once(row.task);
        t.dataset = row.dataset;
        t.gold_answer = row.task.gold_answer;

        EvalConfig eval_cfg;
        eval_cfg.metric = metric;
        eval_cfg.templates = &session.templates();
        if (metric == EvalMetric::Judge) eval_cfg.judge = session.make_backend("judge");
        try {
            t.eval = evaluate(t, *row.task.gold_answer, eval_cfg);
        } catch (const EvalError& e) {
            std::cerr << "warning: " << e.what() << "; trajectory excluded\n";
            ++skipped;
            continue;
        }
        lines += trajectory_line(t);
        evaluated.push_back(std::move(t));
    }
    write_file(out_path, lines);
    std::cerr << evaluated.size() << " trajectories written to " << out_path;
    if (skipped > 0) std::cerr << " (" << skipped << " skipped)";
    std::cerr << "\n" << dataset_stats(evaluated).to_table();
    return 0;
}

int cmd_pairs(const std::vector<std::string>& in_paths, int rollouts_per_question,
              std::string out_dir, std::size_t max_pairs) {
    if (out_dir.empty()) out_dir = ".";

    std::vector<Trajectory> trajectories;
    for (const auto& path : in_paths) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open trajectory file: " + path);
        std::string line;
        int line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            Json j = Json::parse(line, nullptr, false);
            if (j.is_discarded())
                throw ConfigError(path + ":" + std::to_string(line_no) + ": invalid JSON");
            trajectories.push_back(trajectory_from_json(j));
        }
    }

    const Json header{{"format_version", kFormatVersion},
                      {"rollouts_per_question", rollouts_per_question}};

    // SFT: planner records of every passing trajectory, input order.
    const auto filtered = filter_sft(trajectories);
    std::string sft = header.dump() + "\n";
    for (const auto& t : filtered.retained) {
        const PlannerInteraction* decompose = nullptr;
        for (const auto& pi : t.run.planner_interactions)
            if (pi.kind == "decompose") {
                decompose = &pi;
                break;
            }
        if (!decompose) {
            std::cerr << "warning: trajectory '" << t.run.task_id
                      << "' has no decompose interaction; no SFT row emitted\n";
            continue;
        }
        sft += Json{{"prompt", decompose->prompt}, {"completion", decompose->raw_reply}}.dump() +
               "\n";
    }

    // DPO: passed x failed pairs per question, grouped in first-seen order.
    std::vector<std::string> order;
    std::map<std::string, std::vector<Trajectory>> groups;
    for (auto& t : trajectories) {
        if (!groups.contains(t.run.task_id)) order.push_back(t.run.task_id);
        groups[t.run.task_id].push_back(std::move(t));
    }
    std::string dpo = header.dump() + "\n";
    int pair_count = 0;
    for (const auto& question_id : order) {
        const auto& rollouts = groups[question_id];
        if (static_cast<int>(rollouts.size()) != rollouts_per_question)
            std::cerr << "warning: question '" << question_id << "' has "
                      << rollouts.size() << " rollouts (expected " << rollouts_per_question
                      << ")\n";
        for (const auto& pair : build_dpo_pairs(rollouts, {max_pairs})) {
            dpo += Json{{"prompt", pair.planner_prompt},
                        {"chosen", pair.chosen_plan},
                        {"rejected", pair.rejected_plan}}
                       .dump() +
                   "\n";
            ++pair_count;
        }
    }

    write_file(fs::path(out_dir) / "sft.jsonl", sft);
    write_file(fs::path(out_dir) / "dpo.jsonl", dpo);
    std::cerr << filtered.retained.size() << " SFT rows and " << pair_count
              << " DPO pairs written to " << out_dir << "\n";
    return 0;
}

int cmd_sweep(int k_max, int trials, double p, int subtasks, std::uint64_t seed,
              std::string out_path, int jobs) {
    SweepConfig cfg;
    for (int k = 0; k <= k_max; ++k) cfg.k_values.push_back(k);
    cfg.trials = trials;
    cfg.success_probability = p;
    cfg.subtask_count = subtasks;
    cfg.seed = seed;
    cfg.jobs = jobs;

    TaskSpec task;
    task.task_id = "sweep";
    task.content = "synthetic sweep task";
    const auto sweep = replanning_sweep(task, cfg);

    const auto csv = sweep_to_csv(sweep);
    if (!out_path.empty()) {
        write_file(out_path, csv);
        std::cerr << "sweep written to " << out_path << "\n";
    }
    std::cout << csv;
    return 0;
}

int cmd_prompts(const std::string& dir) {
    PromptTemplates::dump_defaults(dir);
    std::cerr << "default prompt templates written to " << dir << "\n";
    return 0;
}

// --- argument wiring ----------------------------------------------------------

struct Args {
    bool trace = false;
    int jobs = 1;

    std::string run_task, run_config, run_out;
    std::string bench_suite, bench_config, bench_out;
    int bench_pass_k = 0;
    std::string synth_suite, synth_config, synth_out;
    std::vector<std::string> pairs_in;
    int pairs_rollouts = 4;
    std::string pairs_out;
    std::size_t pairs_max = 0;
    int sweep_k_max = 3, sweep_trials = 200, sweep_subtasks = 3;
    double sweep_p = 0.6;
    std::uint64_t sweep_seed = 42;
    std::string sweep_out;
    std::string prompts_dir;
};

void configure(CLI::App& app, Args& args) {
    app.description("Hierarchical planner/coordinator/worker task orchestration");
    app.require_subcommand(1);
    app.add_flag("--trace", args.trace, "Log redacted backend requests and responses");
    app.add_option("-j,--jobs", args.jobs, "Parallel runs for bench and sweep")
        ->capture_default_str();

    auto* run = app.add_subcommand("run", "Execute one task and write its trajectory");
    run->add_option("--task", args.run_task, "Task file (JSON or plain text) or inline text")
        ->required();
    run->add_option("--config", args.run_config, "Config file (JSON)")->required();
    run->add_option("--out", args.run_out, "Trajectory output path (JSONL)");

    auto* bench = app.add_subcommand("bench", "Run a task suite and report pass@k accuracy");
    bench->add_option("--suite", args.bench_suite, "Task suite (JSONL of tasks)")->required();
    bench->add_option("--config", args.bench_config, "Config file (JSON)")->required();
    bench->add_option("--pass-k", args.bench_pass_k, "Samples per task (0 = use config)")
        ->capture_default_str();
    bench->add_option("--out", args.bench_out, "Report output directory");

    auto* synth = app.add_subcommand("synth", "Synthesize evaluated trajectories for a suite");
    synth->add_option("--suite", args.synth_suite, "Task suite (JSONL of tasks)")->required();
    synth->add_option("--config", args.synth_config, "Config file (JSON)")->required();
    synth->add_option("--out", args.synth_out, "Trajectory output path (JSONL)");

    auto* pairs =
        app.add_subcommand("pairs", "Build SFT and DPO datasets from synthesized trajectories");
    pairs->add_option("--in", args.pairs_in, "Trajectory files (JSONL)")->required();
    pairs
        ->add_option("--rollouts-per-question", args.pairs_rollouts,
                     "Expected rollouts per question")
        ->capture_default_str();
    pairs->add_option("--out", args.pairs_out, "Output directory for sft.jsonl and dpo.jsonl");
    pairs
        ->add_option("--max-pairs", args.pairs_max,
                     "Cap on pairs per question (0 = unlimited)")
        ->capture_default_str();

    auto* sweep =
        app.add_subcommand("sweep", "Measure success rate as the replanning budget grows");
    sweep->add_option("--k-max", args.sweep_k_max, "Largest replanning budget to sweep")
        ->capture_default_str();
    sweep->add_option("--trials", args.sweep_trials, "Trials per budget")->capture_default_str();
    sweep->add_option("--p", args.sweep_p, "Per-subtask worker success probability")
        ->capture_default_str();
    sweep->add_option("--subtasks", args.sweep_subtasks, "Subtasks per plan")
        ->capture_default_str();
    sweep->add_option("--seed", args.sweep_seed, "Base RNG seed")->capture_default_str();
    sweep->add_option("--out", args.sweep_out, "CSV output path");

    auto* prompts =
        app.add_subcommand("prompts", "Write the default prompt templates as editable files");
    prompts->add_option("--dir", args.prompts_dir, "Target directory")->required();
}

} // namespace

std::string help_text() {
    Args args;
    CLI::App app{"", "crew"};
    configure(app, args);
    return app.help();
}

int run_main(const std::vector<std::string>& args_in) {
    Args args;
    CLI::App app{"", "crew"};
    configure(app, args);

    // CLI11 parses argv-style in reverse order
    std::vector<std::string> reversed(args_in.rbegin(), args_in.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }

    try {
        if (app.got_subcommand("run"))
            return cmd_run(args.run_task, args.run_config, args.run_out, args.trace);
        if (app.got_subcommand("bench"))
            return cmd_bench(args.bench_suite, args.bench_config, args.bench_pass_k,
                             args.bench_out, args.trace, args.jobs);
        if (app.got_subcommand("synth"))
            return cmd_synth(args.synth_suite, args.synth_config, args.synth_out, args.trace);
        if (app.got_subcommand("pairs"))
            return cmd_pairs(args.pairs_in, args.pairs_rollouts, args.pairs_out, args.pairs_max);
        if (app.got_subcommand("sweep"))
            return cmd_sweep(args.sweep_k_max, args.sweep_trials, args.sweep_p,
                             args.sweep_subtasks, args.sweep_seed, args.sweep_out, args.jobs);
        if (app.got_subcommand("prompts")) return cmd_prompts(args.prompts_dir);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const Json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

} // namespace crew::cli

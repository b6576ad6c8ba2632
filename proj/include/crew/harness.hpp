// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "crew/core.hpp"
#include "crew/orchestrator.hpp"
#include "crew/trajectory.hpp"

namespace crew {

/// GAIA-style quasi-exact match: both sides are trimmed, casefolded and
/// stripped of a trailing period; numeric strings compare as numbers after
/// removing thousands separators and currency symbols; comma-separated lists
/// compare element-wise after per-element normalization.
bool score_answer(const std::string& prediction, const std::string& gold);

/// True iff any of the first k outcomes is true. Throws PreconditionError
/// when fewer than k outcomes are given.
bool pass_at_k(const std::vector<bool>& outcomes, int k);

struct LevelStat {
    int total = 0;
    int passed = 0;

    double percentage() const;
};

struct BenchReport {
    std::map<int, LevelStat> per_level;
    int n_tasks = 0;
    int n_passed = 0;
    // Mean over tasks, not mean of level means.
    double average = 0.0;
    std::vector<std::string> aborted_tasks; // counted as failures
    std::vector<std::pair<int, double>> sweep; // optional (K, success rate)

    Json to_json() const;
    std::string to_table() const;
};

/// Executes one independent, isolated run of a task; sample_index
/// distinguishes the pass@k repetitions. Implementations must be safe to
/// call from multiple threads at once.
class TaskRunner {
public:
    virtual ~TaskRunner() = default;
    virtual RunRecord run_task(const TaskSpec& task, int sample_index) = 0;
};

/// pass_k independent runs per task, each scored with score_answer against
/// the task's gold answer; per-level and overall accuracy reported to two
/// decimals. Tasks must carry gold answers and levels. jobs > 1 spreads the
/// independent runs across threads; aggregation is order-independent, so the
/// report matches the serial one byte for byte.
BenchReport run_benchmark(const std::vector<TaskSpec>& tasks, TaskRunner& runner,
                          int pass_k, int jobs = 1);

struct SweepConfig {
    std::vector<int> k_values;  // replanning budgets to sweep, in output order
    int trials = 200;
    double success_probability = 0.6; // per-subtask worker success
    int subtask_count = 3;
    std::uint64_t seed = 42;
    int jobs = 1;
};

/// Seeded Monte-Carlo over the replanning loop with a stochastic worker:
/// rates are identical for identical seeds regardless of jobs.
std::vector<std::pair<int, double>> replanning_sweep(const TaskSpec& task,
                                                     const SweepConfig& cfg);

/// CSV rows "K,rate" with a header line.
std::string sweep_to_csv(const std::vector<std::pair<int, double>>& sweep);

/// Counts and percentages over labeled failures, two-decimal percentages.
std::map<ErrorTag, std::pair<int, double>> error_summary(
    const std::vector<Trajectory>& trajectories);

std::string error_summary_table(const std::map<ErrorTag, std::pair<int, double>>& summary);

} // namespace crew

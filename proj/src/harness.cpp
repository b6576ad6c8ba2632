// SPDX-License-Identifier: Apache-2.0
#include "crew/harness.hpp"

#include "crew/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace crew {

namespace {

std::string clean_side(const std::string& s) {
    size_t begin = 0, end = s.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
    while (end > begin && s[end - 1] == '.') --end; // trailing period(s)
    while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
    std::string out = s.substr(begin, end - begin);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

void erase_all(std::string& s, std::string_view needle) {
    for (auto at = s.find(needle); at != std::string::npos; at = s.find(needle, at))
        s.erase(at, needle.size());
}

// "16,000" / "$16,000" / "-1,234.5" style numerals; commas must group three
// digits so list answers like "1,2" stay lists.
bool grouped_digits(std::string_view t) {
    size_t i = 0;
    if (i < t.size() && (t[i] == '+' || t[i] == '-')) ++i;
    size_t lead = 0;
    while (i < t.size() && std::isdigit(static_cast<unsigned char>(t[i]))) ++i, ++lead;
    if (lead == 0 || lead > 3) return false;
    bool any_group = false;
    while (i < t.size() && t[i] == ',') {
        for (int k = 1; k <= 3; ++k)
            if (i + k >= t.size() || !std::isdigit(static_cast<unsigned char>(t[i + k])))
                return false;
        i += 4;
        any_group = true;
    }
    if (!any_group) return false;
    if (i < t.size() && t[i] == '.') {
        ++i;
        if (i == t.size()) return false;
        while (i < t.size() && std::isdigit(static_cast<unsigned char>(t[i]))) ++i;
    }
    return i == t.size();
}

bool plain_number(std::string_view t) {
    size_t i = 0;
    if (i < t.size() && (t[i] == '+' || t[i] == '-')) ++i;
    size_t digits = 0;
    while (i < t.size() && std::isdigit(static_cast<unsigned char>(t[i]))) ++i, ++digits;
    if (i < t.size() && t[i] == '.') {
        ++i;
        while (i < t.size() && std::isdigit(static_cast<unsigned char>(t[i]))) ++i, ++digits;
    }
    return digits > 0 && i == t.size();
}

std::optional<double> parse_numeric(const std::string& side) {
    std::string t = side;
    erase_all(t, "$");
    erase_all(t, "\xE2\x82\xAC"); // euro sign
    erase_all(t, "\xC2\xA3");     // pound sign
    erase_all(t, "\xC2\xA5");     // yen sign
    // inner spaces left by a currency symbol ("$ 16,000")
    while (!t.empty() && std::isspace(static_cast<unsigned char>(t.front()))) t.erase(t.begin());
    while (!t.empty() && std::isspace(static_cast<unsigned char>(t.back()))) t.pop_back();

    if (grouped_digits(t)) erase_all(t, ",");
    if (!plain_number(t)) return std::nullopt;
    return std::strtod(t.c_str(), nullptr);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> parts;
    std::string part;
    std::istringstream in(s);
    while (std::getline(in, part, ',')) parts.push_back(part);
    if (!s.empty() && s.back() == ',') parts.push_back("");
    return parts;
}

bool score_element(const std::string& a, const std::string& b) {
    const auto ca = clean_side(a);
    const auto cb = clean_side(b);
    const auto na = parse_numeric(ca);
    const auto nb = parse_numeric(cb);
    if (na && nb) return *na == *nb;
    return ca == cb;
}

} // namespace

bool score_answer(const std::string& prediction, const std::string& gold) {
    const auto np = clean_side(prediction);
    const auto ng = clean_side(gold);

    const auto vp = parse_numeric(np);
    const auto vg = parse_numeric(ng);
    if (vp && vg) return *vp == *vg;

    if (np.find(',') != std::string::npos || ng.find(',') != std::string::npos) {
        const auto lp = split_list(np);
        const auto lg = split_list(ng);
        if (lp.size() != lg.size()) return false;
        for (size_t i = 0; i < lp.size(); ++i)
            if (!score_element(lp[i], lg[i])) return false;
        return true;
    }
    return np == ng;
}

bool pass_at_k(const std::vector<bool>& outcomes, int k) {
    if (k < 1) throw PreconditionError("pass@k requires k >= 1");
    if (static_cast<int>(outcomes.size()) < k)
        throw PreconditionError("pass@k requires at least k outcomes (got " +
                                std::to_string(outcomes.size()) + ", k=" + std::to_string(k) +
                                ")");
    return std::any_of(outcomes.begin(), outcomes.begin() + k, [](bool b) { return b; });
}

double LevelStat::percentage() const {
    return total == 0 ? 0.0 : 100.0 * passed / total;
}

namespace {

double round2(double v) { return std::round(v * 100.0) / 100.0; }

} // namespace

Json BenchReport::to_json() const {
    Json j;
    j["format_version"] = kFormatVersion;
    j["n_tasks"] = n_tasks;
    j["n_passed"] = n_passed;
    j["average"] = round2(average);
    Json levels = Json::object();
    for (const auto& [level, stat] : per_level) {
        levels[std::to_string(level)] = Json{{"total", stat.total},
                                             {"passed", stat.passed},
                                             {"accuracy", round2(stat.percentage())}};
    }
    j["per_level"] = std::move(levels);
    j["aborted"] = aborted_tasks;
    if (!sweep.empty()) {
        Json rows = Json::array();
        for (const auto& [k, rate] : sweep)
            rows.push_back(Json{{"max_replans", k}, {"success_rate", rate}});
        j["sweep"] = std::move(rows);
    }
    return j;
}

std::string BenchReport::to_table() const {
    std::ostringstream out;
    char line[128];
    std::snprintf(line, sizeof line, "%-8s %8s %8s %10s\n", "Level", "Tasks", "Passed",
                  "Accuracy");
    out << line;
    for (const auto& [level, stat] : per_level) {
        std::snprintf(line, sizeof line, "%-8d %8d %8d %9.2f%%\n", level, stat.total,
                      stat.passed, stat.percentage());
        out << line;
    }
    std::snprintf(line, sizeof line, "%-8s %8d %8d %9.2f%%\n", "Average", n_tasks, n_passed,
                  average);
    out << line;
    if (!aborted_tasks.empty()) {
        out << "\nAborted runs (counted as failures):\n";
        for (const auto& t : aborted_tasks) out << "  - " << t << "\n";
    }
    return out.str();
}

BenchReport run_benchmark(const std::vector<TaskSpec>& tasks, TaskRunner& runner,
                          int pass_k, int jobs) {
    if (pass_k < 1) throw PreconditionError("pass_k must be >= 1");
    for (const auto& t : tasks) {
        if (!t.gold_answer)
            throw PreconditionError("benchmark task '" + t.task_id + "' has no gold answer");
        if (!t.level)
            throw PreconditionError("benchmark task '" + t.task_id + "' has no level");
    }

    struct Sample {
        bool ok = false;
        bool aborted = false;
        std::string note;
    };
    const int n = static_cast<int>(tasks.size()) * pass_k;
    std::vector<Sample> samples(static_cast<size_t>(n));

#pragma omp parallel for schedule(dynamic) if (jobs > 1) num_threads(std::max(jobs, 1))
    for (int i = 0; i < n; ++i) {
        const auto& task = tasks[static_cast<size_t>(i / pass_k)];
        const int sample_index = i % pass_k;
        auto& sample = samples[static_cast<size_t>(i)];
        try {
            const RunRecord rec = runner.run_task(task, sample_index);
            sample.aborted = rec.aborted();
            sample.ok = !sample.aborted && score_answer(rec.final_answer, *task.gold_answer);
            if (sample.aborted)
                sample.note = rec.abort_reason.value_or("aborted");
        } catch (const std::exception& e) {
            sample.aborted = true;
            sample.note = e.what();
        }
    }

    BenchReport report;
    report.n_tasks = static_cast<int>(tasks.size());
    for (size_t ti = 0; ti < tasks.size(); ++ti) {
        std::vector<bool> outcomes;
        outcomes.reserve(static_cast<size_t>(pass_k));
        for (int s = 0; s < pass_k; ++s) {
            const auto& sample = samples[ti * static_cast<size_t>(pass_k) + static_cast<size_t>(s)];
            outcomes.push_back(sample.ok);
            if (sample.aborted)
                report.aborted_tasks.push_back(tasks[ti].task_id + " (sample " +
                                               std::to_string(s) + "): " + sample.note);
        }
        const bool solved = pass_at_k(outcomes, pass_k);
        auto& stat = report.per_level[*tasks[ti].level];
        ++stat.total;
        if (solved) {
            ++stat.passed;
            ++report.n_passed;
        }
    }
    report.average = report.n_tasks == 0 ? 0.0 : 100.0 * report.n_passed / report.n_tasks;
    return report;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::uint64_t trial_seed(std::uint64_t base, int k, int trial) {
    return splitmix64(splitmix64(base ^ static_cast<std::uint64_t>(k + 1)) +
                      static_cast<std::uint64_t>(trial));
}

} // namespace

std::vector<std::pair<int, double>> replanning_sweep(const TaskSpec& task,
                                                     const SweepConfig& cfg) {
    if (cfg.trials < 1) throw PreconditionError("sweep requires trials >= 1");
    if (cfg.subtask_count < 1) throw PreconditionError("sweep requires subtask_count >= 1");

    const std::vector<WorkerDescriptor> registry{
        {"synthetic_worker", "Synthetic stochastic worker", {}}};
    TaskSpec sweep_task = task;
    if (sweep_task.content.empty()) sweep_task.content = "synthetic sweep task";
    if (sweep_task.task_id.empty()) sweep_task.task_id = "sweep";

    std::vector<std::pair<int, double>> out;
    out.reserve(cfg.k_values.size());
    for (const int k : cfg.k_values) {
        int successes = 0;
#pragma omp parallel for schedule(dynamic) reduction(+ : successes) if (cfg.jobs > 1) \
    num_threads(std::max(cfg.jobs, 1))
        for (int trial = 0; trial < cfg.trials; ++trial) {
            FixedPlanner planner(cfg.subtask_count);
            FirstWorkerCoordinator coordinator;
            StochasticWorker worker(cfg.success_probability, trial_seed(cfg.seed, k, trial));
            RunConfig rc;
            rc.max_replans = k;
            const RunRecord rec =
                run(sweep_task, registry, {planner, coordinator, worker}, rc);
            if (rec.terminated_by == TerminationKind::AllSubtasksDone) ++successes;
        }
        out.emplace_back(k, static_cast<double>(successes) / cfg.trials);
    }
    return out;
}

std::string sweep_to_csv(const std::vector<std::pair<int, double>>& sweep) {
    std::ostringstream out;
    out << "K,rate\n";
    for (const auto& [k, rate] : sweep) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%d,%.4f\n", k, rate);
        out << buf;
    }
    return out.str();
}

std::map<ErrorTag, std::pair<int, double>> error_summary(
    const std::vector<Trajectory>& trajectories) {
    std::map<ErrorTag, int> counts;
    int total = 0;
    for (const auto& t : trajectories) {
        if (!t.error_label) continue;
        ++counts[*t.error_label];
        ++total;
    }
    std::map<ErrorTag, std::pair<int, double>> out;
    for (const auto& [tag, count] : counts)
        out[tag] = {count, round2(100.0 * count / total)};
    return out;
}

std::string error_summary_table(
    const std::map<ErrorTag, std::pair<int, double>>& summary) {
    std::ostringstream out;
    char line[128];
    std::snprintf(line, sizeof line, "%-28s %8s %12s\n", "Error Type", "Count",
                  "Proportion");
    out << line;
    for (const ErrorTag tag : all_error_tags()) {
        auto it = summary.find(tag);
        if (it == summary.end()) continue;
        std::snprintf(line, sizeof line, "%-28s %8d %11.2f%%\n", to_string(tag).c_str(),
                      it->second.first, it->second.second);
        out << line;
    }
    return out.str();
}

} // namespace crew

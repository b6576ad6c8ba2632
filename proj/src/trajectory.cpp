// SPDX-License-Identifier: Apache-2.0
#include "crew/trajectory.hpp"

#include "crew/errors.hpp"
#include "crew/harness.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>
#include <unordered_map>

namespace crew {

std::string to_string(DatasetKind d) {
    switch (d) {
        case DatasetKind::hotpotqa: return "hotpotqa";
        case DatasetKind::wikitablequestions: return "wikitablequestions";
        case DatasetKind::math: return "math";
        case DatasetKind::infinity_mm: return "infinity_mm";
        case DatasetKind::custom: return "custom";
    }
    return "custom";
}

DatasetKind dataset_kind_from_string(const std::string& s) {
    if (s == "hotpotqa") return DatasetKind::hotpotqa;
    if (s == "wikitablequestions") return DatasetKind::wikitablequestions;
    if (s == "math") return DatasetKind::math;
    if (s == "infinity_mm") return DatasetKind::infinity_mm;
    if (s == "custom") return DatasetKind::custom;
    throw ConfigError("unknown dataset: " + s);
}

std::string to_string(EvalMetric m) {
    switch (m) {
        case EvalMetric::ExactMatch: return "ExactMatch";
        case EvalMetric::CosineSim: return "CosineSim";
        case EvalMetric::Judge: return "Judge";
    }
    return "ExactMatch";
}

EvalMetric eval_metric_from_string(const std::string& s) {
    if (s == "ExactMatch") return EvalMetric::ExactMatch;
    if (s == "CosineSim") return EvalMetric::CosineSim;
    if (s == "Judge") return EvalMetric::Judge;
    throw ConfigError("unknown eval metric: " + s);
}

EvalMetric default_metric(DatasetKind d) {
    switch (d) {
        case DatasetKind::hotpotqa:
        case DatasetKind::wikitablequestions: return EvalMetric::ExactMatch;
        case DatasetKind::infinity_mm: return EvalMetric::CosineSim;
        case DatasetKind::math: return EvalMetric::Judge;
        case DatasetKind::custom: return EvalMetric::ExactMatch;
    }
    return EvalMetric::ExactMatch;
}

namespace {

constexpr std::array<const char*, kErrorTagCount> kErrorTagNames = {
    "PlannerIncorrectPlan", "PlannerSubtaskAmbiguity", "WorkerToolSelection",
    "ToolWebFailure",       "ToolDocumentFailure",     "ToolMultimodalFailure",
    "ResponseFormat",       "ReasoningError",          "QuestionAmbiguity",
    "Hallucination",        "ContextExceed",           "LimitedCoding",
};

constexpr std::array<ErrorTag, kErrorTagCount> kAllErrorTags = {
    ErrorTag::PlannerIncorrectPlan, ErrorTag::PlannerSubtaskAmbiguity,
    ErrorTag::WorkerToolSelection,  ErrorTag::ToolWebFailure,
    ErrorTag::ToolDocumentFailure,  ErrorTag::ToolMultimodalFailure,
    ErrorTag::ResponseFormat,       ErrorTag::ReasoningError,
    ErrorTag::QuestionAmbiguity,    ErrorTag::Hallucination,
    ErrorTag::ContextExceed,        ErrorTag::LimitedCoding,
};

} // namespace

std::string to_string(ErrorTag t) { return kErrorTagNames[static_cast<size_t>(t)]; }

ErrorTag error_tag_from_string(const std::string& s) {
    for (size_t i = 0; i < kErrorTagNames.size(); ++i)
        if (s == kErrorTagNames[i]) return kAllErrorTags[i];
    throw ConfigError("unknown error tag: " + s);
}

std::span<const ErrorTag> all_error_tags() { return kAllErrorTags; }

Json to_json(const EvalOutcome& v) {
    Json j;
    j["metric"] = to_string(v.metric);
    j["score"] = v.score;
    j["passed"] = v.passed;
    return j;
}

static EvalOutcome eval_outcome_from_json(const Json& j) {
    EvalOutcome v;
    v.metric = eval_metric_from_string(j.at("metric").get<std::string>());
    v.score = j.at("score").get<double>();
    v.passed = j.at("passed").get<bool>();
    return v;
}

Json to_json(const Trajectory& v) {
    Json j;
    j["format_version"] = kFormatVersion;
    j["run"] = to_json(v.run);
    j["dataset"] = to_string(v.dataset);
    if (v.gold_answer) j["gold_answer"] = *v.gold_answer;
    if (v.eval) j["eval"] = to_json(*v.eval);
    if (v.error_label) j["error_label"] = to_string(*v.error_label);
    return j;
}

Trajectory trajectory_from_json(const Json& j) {
    Trajectory v;
    v.run = run_record_from_json(j.at("run"));
    v.dataset = dataset_kind_from_string(j.value("dataset", "custom"));
    if (j.contains("gold_answer")) v.gold_answer = j.at("gold_answer").get<std::string>();
    if (j.contains("eval")) v.eval = eval_outcome_from_json(j.at("eval"));
    if (j.contains("error_label"))
        v.error_label = error_tag_from_string(j.at("error_label").get<std::string>());
    return v;
}

Json to_json(const PreferencePair& v) {
    Json j;
    j["planner_prompt"] = v.planner_prompt;
    j["chosen_plan"] = v.chosen_plan;
    j["rejected_plan"] = v.rejected_plan;
    j["source_question_id"] = v.source_question_id;
    return j;
}

PreferencePair preference_pair_from_json(const Json& j) {
    PreferencePair v;
    v.planner_prompt = j.at("planner_prompt").get<std::string>();
    v.chosen_plan = j.at("chosen_plan").get<std::string>();
    v.rejected_plan = j.at("rejected_plan").get<std::string>();
    v.source_question_id = j.at("source_question_id").get<std::string>();
    return v;
}

// --- cosine similarity -------------------------------------------------------

namespace {

bool is_unicode_whitespace(char32_t cp) {
    switch (cp) {
        case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
        case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
        case 0x202F: case 0x205F: case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200A;
    }
}

// Decodes one UTF-8 codepoint; malformed bytes are passed through one at a
// time so arbitrary input never crashes tokenization.
char32_t utf8_next(std::string_view s, size_t& i) {
    const auto byte = [&](size_t k) { return static_cast<unsigned char>(s[k]); };
    const unsigned char b0 = byte(i);
    if (b0 < 0x80) {
        ++i;
        return b0;
    }
    auto cont = [&](size_t k) { return k < s.size() && (byte(k) & 0xC0) == 0x80; };
    if ((b0 & 0xE0) == 0xC0 && cont(i + 1)) {
        const char32_t cp = ((b0 & 0x1Fu) << 6) | (byte(i + 1) & 0x3Fu);
        i += 2;
        return cp;
    }
    if ((b0 & 0xF0) == 0xE0 && cont(i + 1) && cont(i + 2)) {
        const char32_t cp =
            ((b0 & 0x0Fu) << 12) | ((byte(i + 1) & 0x3Fu) << 6) | (byte(i + 2) & 0x3Fu);
        i += 3;
        return cp;
    }
    if ((b0 & 0xF8) == 0xF0 && cont(i + 1) && cont(i + 2) && cont(i + 3)) {
        const char32_t cp = ((b0 & 0x07u) << 18) | ((byte(i + 1) & 0x3Fu) << 12) |
                            ((byte(i + 2) & 0x3Fu) << 6) | (byte(i + 3) & 0x3Fu);
        i += 4;
        return cp;
    }
    ++i;
    return b0;
}

std::unordered_map<std::string, long> term_frequencies(std::string_view text) {
    std::unordered_map<std::string, long> tf;
    std::string token;
    size_t i = 0;
    auto flush = [&] {
        if (!token.empty()) {
            ++tf[token];
            token.clear();
        }
    };
    while (i < text.size()) {
        const size_t start = i;
        const char32_t cp = utf8_next(text, i);
        if (is_unicode_whitespace(cp)) {
            flush();
        } else {
            for (size_t k = start; k < i; ++k) {
                const char c = text[k];
                token += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
            }
        }
    }
    flush();
    return tf;
}

} // namespace

double cosine_similarity(std::string_view a, std::string_view b) {
    const auto ta = term_frequencies(a);
    const auto tb = term_frequencies(b);
    if (ta.empty() && tb.empty()) return 1.0;
    if (ta.empty() || tb.empty()) return 0.0;

    double dot = 0.0;
    for (const auto& [term, count] : ta) {
        auto it = tb.find(term);
        if (it != tb.end()) dot += static_cast<double>(count) * static_cast<double>(it->second);
    }
    double na = 0.0, nb = 0.0;
    for (const auto& [_, count] : ta) na += static_cast<double>(count) * count;
    for (const auto& [_, count] : tb) nb += static_cast<double>(count) * count;
    const double sim = dot / (std::sqrt(na) * std::sqrt(nb));
    return std::clamp(sim, 0.0, 1.0);
}

bool threshold_passed(EvalMetric metric, double score, double threshold) {
    if (metric == EvalMetric::CosineSim) return score > threshold; // strictly greater
    return score >= 1.0;
}

namespace {

// First standalone YES/NO token (case-insensitive), or nullopt.
std::optional<bool> parse_verdict(const std::string& text) {
    std::istringstream in(text);
    std::string token;
    while (in >> token) {
        std::string upper;
        for (char c : token)
            if (std::isalpha(static_cast<unsigned char>(c)))
                upper += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        if (upper == "YES") return true;
        if (upper == "NO") return false;
    }
    return std::nullopt;
}

} // namespace

EvalOutcome evaluate(const Trajectory& trajectory, const std::string& gold,
                     const EvalConfig& cfg) {
    EvalOutcome outcome;
    outcome.metric = cfg.metric;
    const std::string& prediction = trajectory.run.final_answer;

    switch (cfg.metric) {
        case EvalMetric::ExactMatch: {
            outcome.score = score_answer(prediction, gold) ? 1.0 : 0.0;
            outcome.passed = threshold_passed(cfg.metric, outcome.score, cfg.cosine_threshold);
            return outcome;
        }
        case EvalMetric::CosineSim: {
            outcome.score = cosine_similarity(prediction, gold);
            outcome.passed = threshold_passed(cfg.metric, outcome.score, cfg.cosine_threshold);
            return outcome;
        }
        case EvalMetric::Judge: {
            if (!cfg.judge)
                throw PreconditionError("Judge metric requires a configured judge backend");
            const auto templates =
                cfg.templates ? *cfg.templates : PromptTemplates::defaults();
            const auto prompt = render_template(
                templates.judge_user,
                {{"gold_answer", gold}, {"prediction", prediction}});
            ModelRequest request;
            request.messages.push_back({Role::User, prompt, {}, {}});
            for (int attempt = 0; attempt < 2; ++attempt) {
                const auto reply = cfg.judge->complete(request).content.value_or("");
                if (const auto verdict = parse_verdict(reply)) {
                    outcome.score = *verdict ? 1.0 : 0.0;
                    outcome.passed = threshold_passed(cfg.metric, outcome.score,
                                                      cfg.cosine_threshold);
                    return outcome;
                }
                request.messages.push_back({Role::Assistant, reply, {}, {}});
                request.messages.push_back(
                    {Role::User, "Reply with a single token: YES or NO.", {}, {}});
            }
            throw EvalError("judge verdict unparseable after 1 retry for task '" +
                            trajectory.run.task_id + "'");
        }
    }
    return outcome;
}

SftFilterResult filter_sft(const std::vector<Trajectory>& trajectories) {
    for (size_t i = 0; i < trajectories.size(); ++i) {
        if (!trajectories[i].eval)
            throw PreconditionError("trajectory '" + trajectories[i].run.task_id +
                                    "' (index " + std::to_string(i) +
                                    ") has not been evaluated");
    }
    SftFilterResult result;
    for (const auto& t : trajectories) {
        auto& [kept, total] = result.counts[t.dataset];
        ++total;
        if (t.eval->passed) {
            ++kept;
            result.retained.push_back(t);
        }
    }
    return result;
}

namespace {

const PlannerInteraction* first_decompose(const RunRecord& run) {
    for (const auto& pi : run.planner_interactions)
        if (pi.kind == "decompose") return &pi;
    return nullptr;
}

} // namespace

std::vector<PreferencePair> build_dpo_pairs(const std::vector<Trajectory>& rollouts,
                                            const PairPolicy& policy) {
    if (rollouts.empty()) return {};
    const std::string& question_id = rollouts.front().run.task_id;
    for (size_t i = 0; i < rollouts.size(); ++i) {
        if (!rollouts[i].eval)
            throw PreconditionError("rollout " + std::to_string(i) +
                                    " has not been evaluated");
        if (rollouts[i].run.task_id != question_id)
            throw PreconditionError("rollouts mix question ids: '" + question_id +
                                    "' vs '" + rollouts[i].run.task_id + "'");
    }

    std::vector<const Trajectory*> chosen, rejected;
    for (const auto& t : rollouts)
        (t.eval->passed ? chosen : rejected).push_back(&t);

    std::vector<PreferencePair> pairs;
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto* c : chosen) {
        const auto* c_plan = first_decompose(c->run);
        for (const auto* r : rejected) {
            const auto* r_plan = first_decompose(r->run);
            PreferencePair pair;
            pair.planner_prompt = c_plan ? c_plan->prompt : "";
            pair.chosen_plan = c_plan ? c_plan->raw_reply : "";
            pair.rejected_plan = r_plan ? r_plan->raw_reply : "";
            pair.source_question_id = question_id;
            if (!seen.emplace(pair.chosen_plan, pair.rejected_plan).second) continue;
            pairs.push_back(std::move(pair));
            if (policy.max_pairs_per_question > 0 &&
                pairs.size() >= policy.max_pairs_per_question)
                return pairs;
        }
    }
    return pairs;
}

StatsReport dataset_stats(const std::vector<Trajectory>& trajectories) {
    StatsReport report;
    struct Acc {
        long subtasks = 0;
        long steps = 0;
        int count = 0;
    };
    std::map<DatasetKind, Acc> accs;
    Acc total;

    for (const auto& t : trajectories) {
        long subtasks = t.run.plans.empty()
                            ? 0
                            : static_cast<long>(t.run.plans.back().subtasks.size());
        long steps = 0;
        for (const auto& r : t.run.results) steps += r.steps_used;
        auto& acc = accs[t.dataset];
        acc.subtasks += subtasks;
        acc.steps += steps;
        ++acc.count;
        total.subtasks += subtasks;
        total.steps += steps;
        ++total.count;
    }

    auto finish = [](const Acc& acc) {
        DatasetStats s;
        s.count = acc.count;
        if (acc.count > 0) {
            s.avg_subtasks = static_cast<double>(acc.subtasks) / acc.count;
            s.avg_steps = static_cast<double>(acc.steps) / acc.count;
        }
        return s;
    };
    for (const auto& [dataset, acc] : accs) report.per_dataset[dataset] = finish(acc);
    report.total = finish(total);
    return report;
}

std::string StatsReport::to_table() const {
    std::ostringstream out;
    char line[160];
    std::snprintf(line, sizeof line, "%-22s %8s %15s %12s\n", "Dataset", "Count",
                  "Avg. Subtasks", "Avg. Steps");
    out << line;
    for (const auto& [dataset, stats] : per_dataset) {
        std::snprintf(line, sizeof line, "%-22s %8d %15.2f %12.2f\n",
                      to_string(dataset).c_str(), stats.count, stats.avg_subtasks,
                      stats.avg_steps);
        out << line;
    }
    std::snprintf(line, sizeof line, "%-22s %8d %15.2f %12.2f\n", "Total/Average",
                  total.count, total.avg_subtasks, total.avg_steps);
    out << line;
    return out.str();
}

} // namespace crew

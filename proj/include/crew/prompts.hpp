// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>

namespace crew {

/// Render `{{name}}` placeholders; unknown placeholders stay literal so
/// user-edited templates degrade gracefully.
std::string render_template(std::string_view tmpl,
                            const std::map<std::string, std::string>& vars);

/// Prompt templates for every agent role. Defaults are compiled in; any of
/// them can be overridden by a same-named .txt file in a templates directory
/// (planner_system.txt, decompose_user.txt, replan_user.txt,
/// synthesize_user.txt, coordinator_system.txt, coordinator_user.txt,
/// worker_user.txt, worker_failure_instruction.txt, format_reminder.txt,
/// judge_user.txt).
struct PromptTemplates {
    std::string planner_system;
    std::string decompose_user;        // {{task_content}} {{additional_info}} {{worker_list}}
    std::string replan_user;           // ... + {{failures}}
    std::string synthesize_user;       // {{task_content}} {{additional_info}} {{subtask_results}}
    std::string coordinator_system;
    std::string coordinator_user;      // {{subtask}} {{additional_info}} {{worker_list}}
    std::string worker_user;           // {{subtask}} {{overall_task}} {{dependency_results}} {{additional_info}}
    std::string worker_failure_instruction;
    std::string format_reminder;       // appended when re-asking after a malformed plan
    std::string judge_user;            // {{gold_answer}} {{prediction}}

    static PromptTemplates defaults();
    static PromptTemplates load_dir(const std::string& dir);

    /// Writes the defaults as editable files (used by `crew prompts --dump`).
    static void dump_defaults(const std::string& dir);
};

} // namespace crew

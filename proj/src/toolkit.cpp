// SPDX-License-Identifier: Apache-2.0
#include "crew/toolkit.hpp"

#include "crew/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace crew {

namespace fs = std::filesystem;

std::string to_string(ToolErrorKind k) {
    switch (k) {
        case ToolErrorKind::BadArguments: return "BadArguments";
        case ToolErrorKind::Blocked: return "Blocked";
        case ToolErrorKind::NotFound: return "NotFound";
        case ToolErrorKind::ExecutionError: return "ExecutionError";
    }
    return "ExecutionError";
}

ToolResult ToolResult::success(std::string output) {
    return ToolResult{true, std::move(output), std::nullopt};
}

ToolResult ToolResult::failure(ToolErrorKind kind, std::string message) {
    return ToolResult{false, std::move(message), kind};
}

namespace {

bool valid_tool_name(const std::string& name) {
    if (name.empty()) return false;
    return std::all_of(name.begin(), name.end(), [](unsigned char c) {
        return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
    });
}

std::string lowercase(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

bool url_blocked(const std::string& url, const std::vector<std::string>& blocklist) {
    const auto lowered = lowercase(url);
    return std::any_of(blocklist.begin(), blocklist.end(), [&](const std::string& b) {
        return !b.empty() && lowered.find(lowercase(b)) != std::string::npos;
    });
}

// Resolves `relative` inside `root` and rejects escapes ("../", absolute
// paths outside the root, symlinked detours).
std::optional<fs::path> confine(const fs::path& root, const std::string& relative) {
    if (root.empty()) return std::nullopt;
    std::error_code ec;
    const fs::path canonical_root = fs::weakly_canonical(root, ec);
    if (ec) return std::nullopt;
    fs::path candidate = fs::path(relative).is_absolute() ? fs::path(relative)
                                                          : canonical_root / relative;
    const fs::path resolved = fs::weakly_canonical(candidate, ec);
    if (ec) return std::nullopt;
    auto root_it = canonical_root.begin();
    auto it = resolved.begin();
    for (; root_it != canonical_root.end(); ++root_it, ++it) {
        if (it == resolved.end() || *it != *root_it) return std::nullopt;
    }
    return resolved;
}

std::string format_number(double v) {
    if (std::isfinite(v) && std::fabs(v) < 9.0e15 && v == std::floor(v)) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.0f", v);
        return buf;
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

// --- arithmetic expression parser ---------------------------------------

struct ArithParser {
    std::string_view text;
    size_t pos = 0;

    void skip_ws() {
        while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
    }
    bool eat(char c) {
        skip_ws();
        if (pos < text.size() && text[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }
    [[noreturn]] void fail(const std::string& why) {
        throw ConfigError("calc: " + why + " at offset " + std::to_string(pos));
    }

    double parse_expression() {
        double value = parse_term();
        for (;;) {
            if (eat('+')) value += parse_term();
            else if (eat('-')) value -= parse_term();
            else return value;
        }
    }
    double parse_term() {
        double value = parse_factor();
        for (;;) {
            skip_ws();
            if (eat('*')) value *= parse_factor();
            else if (eat('/')) {
                double d = parse_factor();
                if (d == 0.0) fail("division by zero");
                value /= d;
            } else if (eat('%')) {
                double d = parse_factor();
                if (d == 0.0) fail("division by zero");
                value = std::fmod(value, d);
            } else
                return value;
        }
    }
    double parse_factor() {
        skip_ws();
        if (eat('-')) return -parse_factor();
        if (eat('+')) return parse_factor();
        if (eat('(')) {
            double value = parse_expression();
            if (!eat(')')) fail("missing closing parenthesis");
            return value;
        }
        return parse_number();
    }
    double parse_number() {
        skip_ws();
        size_t start = pos;
        while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
        if (pos < text.size() && text[pos] == '.') {
            ++pos;
            while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
        }
        if (pos == start || (pos == start + 1 && text[start] == '.'))
            fail("expected a number");
        return std::strtod(std::string(text.substr(start, pos - start)).c_str(), nullptr);
    }
};

} // namespace

double eval_arithmetic(std::string_view expression) {
    ArithParser p{expression};
    double value = p.parse_expression();
    p.skip_ws();
    if (p.pos != expression.size())
        p.fail(std::string{"unexpected token '"} + expression[p.pos] + "'");
    return value;
}

void ToolRegistry::register_tool(ToolSchema schema, ToolHandler handler) {
    if (!valid_tool_name(schema.name))
        throw ConfigError("tool name must match [a-z0-9_]+: '" + schema.name + "'");
    if (tools_.contains(schema.name))
        throw ConfigError("tool already registered: " + schema.name);
    tools_.emplace(schema.name, Registered{std::move(schema), std::move(handler)});
}

bool ToolRegistry::contains(const std::string& name) const { return tools_.contains(name); }

const ToolSchema* ToolRegistry::find(const std::string& name) const {
    auto it = tools_.find(name);
    return it == tools_.end() ? nullptr : &it->second.schema;
}

std::vector<std::string> ToolRegistry::names() const {
    std::vector<std::string> out;
    out.reserve(tools_.size());
    for (const auto& [name, _] : tools_) out.push_back(name);
    return out;
}

std::vector<ToolSpec> ToolRegistry::request_specs(const std::vector<std::string>& tool_names) const {
    std::vector<ToolSpec> specs;
    specs.reserve(tool_names.size());
    for (const auto& name : tool_names) {
        const auto* schema = find(name);
        if (!schema) throw ConfigError("tool name does not resolve in the registry: " + name);
        specs.push_back({schema->name, schema->description, schema->parameters});
    }
    return specs;
}

ToolResult ToolRegistry::invoke(const std::string& name, const std::string& arguments_text,
                                const ToolContext& ctx) const {
    auto it = tools_.find(name);
    if (it == tools_.end())
        return ToolResult::failure(ToolErrorKind::NotFound, "unknown tool: " + name);

    Json args = arguments_text.empty() ? Json::object()
                                       : Json::parse(arguments_text, nullptr, false);
    if (args.is_discarded() || !args.is_object())
        return ToolResult::failure(ToolErrorKind::BadArguments,
                                   "arguments are not a JSON object: " + arguments_text);
    try {
        return it->second.handler(args, ctx);
    } catch (const ToolFatalError&) {
        throw; // the worker loop treats this as unrecoverable
    } catch (const std::exception& e) {
        return ToolResult::failure(ToolErrorKind::ExecutionError, e.what());
    }
}

std::string code_digest(std::string_view code) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : code) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

Json string_param_schema(std::initializer_list<std::pair<const char*, const char*>> params) {
    Json properties = Json::object();
    Json required = Json::array();
    for (const auto& [name, description] : params) {
        properties[name] = Json{{"type", "string"}, {"description", description}};
        required.push_back(name);
    }
    return Json{{"type", "object"}, {"properties", properties}, {"required", required}};
}

ToolResult calc_handler(const Json& args, const ToolContext&) {
    if (!args.contains("expression") || !args.at("expression").is_string())
        return ToolResult::failure(ToolErrorKind::BadArguments,
                                   "calc requires a string \"expression\" argument");
    try {
        return ToolResult::success(format_number(eval_arithmetic(args.at("expression").get<std::string>())));
    } catch (const ConfigError& e) {
        return ToolResult::failure(ToolErrorKind::BadArguments, e.what());
    }
}

ToolResult read_local_document_handler(const Json& args, const ToolContext& ctx) {
    if (!args.contains("path") || !args.at("path").is_string())
        return ToolResult::failure(ToolErrorKind::BadArguments,
                                   "read_local_document requires a string \"path\" argument");
    const auto rel = args.at("path").get<std::string>();
    const auto resolved = confine(ctx.workspace_dir, rel);
    if (!resolved)
        return ToolResult::failure(ToolErrorKind::BadArguments,
                                   "path escapes the workspace: " + rel);
    std::ifstream in(*resolved, std::ios::binary);
    if (!in)
        return ToolResult::failure(ToolErrorKind::NotFound, "no such document: " + rel);
    std::stringstream buf;
    buf << in.rdbuf();
    std::string content = buf.str();

    if (content.rfind("source: ", 0) == 0) {
        const auto eol = content.find('\n');
        const auto url = content.substr(8, (eol == std::string::npos ? content.size() : eol) - 8);
        if (url_blocked(url, ctx.blocklist))
            return ToolResult::failure(ToolErrorKind::Blocked,
                                       "document source is blocklisted: " + url);
    }
    return ToolResult::success(std::move(content));
}

struct CorpusDoc {
    std::string filename;
    std::string source;
    std::string body;
};

ToolResult search_local_corpus_handler(const Json& args, const ToolContext& ctx) {
    if (!args.contains("query") || !args.at("query").is_string())
        return ToolResult::failure(ToolErrorKind::BadArguments,
                                   "search_local_corpus requires a string \"query\" argument");
    if (ctx.corpus_dir.empty() || !fs::is_directory(ctx.corpus_dir))
        return ToolResult::failure(ToolErrorKind::NotFound,
                                   "no corpus directory configured");

    std::vector<std::string> keywords;
    {
        std::istringstream qs(lowercase(args.at("query").get<std::string>()));
        std::string word;
        while (qs >> word) keywords.push_back(word);
    }
    if (keywords.empty())
        return ToolResult::failure(ToolErrorKind::BadArguments, "query holds no keywords");

    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(ctx.corpus_dir))
        if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());

    int skipped = 0;
    std::vector<std::pair<long, CorpusDoc>> scored;
    for (const auto& path : files) {
        std::ifstream in(path, std::ios::binary);
        if (!in) continue;
        std::stringstream buf;
        buf << in.rdbuf();
        CorpusDoc doc{path.filename().string(), "", buf.str()};
        if (doc.body.rfind("source: ", 0) == 0) {
            const auto eol = doc.body.find('\n');
            doc.source = doc.body.substr(8, (eol == std::string::npos ? doc.body.size() : eol) - 8);
            doc.body = eol == std::string::npos ? std::string{} : doc.body.substr(eol + 1);
        }
        if (!doc.source.empty() && url_blocked(doc.source, ctx.blocklist)) {
            ++skipped;
            continue;
        }
        const auto lowered = lowercase(doc.body);
        long score = 0;
        for (const auto& kw : keywords) {
            for (size_t at = lowered.find(kw); at != std::string::npos; at = lowered.find(kw, at + kw.size()))
                ++score;
        }
        if (score > 0) scored.emplace_back(score, std::move(doc));
    }
    std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second.filename < b.second.filename;
    });

    std::ostringstream out;
    if (scored.empty()) {
        out << "No matching documents.";
    } else {
        out << "Found " << scored.size() << " matching document"
            << (scored.size() == 1 ? "" : "s") << ":\n";
        const size_t shown = std::min<size_t>(scored.size(), 5);
        for (size_t i = 0; i < shown; ++i) {
            const auto& doc = scored[i].second;
            out << "\n### " << doc.filename;
            if (!doc.source.empty()) out << " (source: " << doc.source << ")";
            out << "\n";
            // first line containing any keyword, as the snippet
            std::istringstream body(doc.body);
            std::string line;
            while (std::getline(body, line)) {
                const auto lowered = lowercase(line);
                if (std::any_of(keywords.begin(), keywords.end(), [&](const std::string& kw) {
                        return lowered.find(kw) != std::string::npos;
                    })) {
                    out << line.substr(0, 240) << "\n";
                    break;
                }
            }
        }
    }
    if (skipped > 0)
        out << "\n(" << skipped << " document" << (skipped == 1 ? "" : "s")
            << " skipped by blocklist)";
    return ToolResult::success(out.str());
}

} // namespace

void register_builtins(ToolRegistry& registry, const ScriptedExecutorConfig& exec) {
    registry.register_tool(
        {"calc", "Evaluate an arithmetic expression (+, -, *, /, %, parentheses).",
         string_param_schema({{"expression", "Arithmetic expression to evaluate"}})},
        calc_handler);
    registry.register_tool(
        {"read_local_document",
         "Read a plain-text or CSV document from the run workspace.",
         string_param_schema({{"path", "Path relative to the workspace directory"}})},
        read_local_document_handler);
    registry.register_tool(
        {"search_local_corpus",
         "Keyword search over the configured offline document corpus.",
         string_param_schema({{"query", "Whitespace-separated keywords"}})},
        search_local_corpus_handler);
    registry.register_tool(
        {"scripted_executor",
         "Execute code offline: returns the canned output registered for the code digest.",
         string_param_schema({{"code", "Code to execute"}})},
        [exec](const Json& args, const ToolContext&) -> ToolResult {
            if (!args.contains("code") || !args.at("code").is_string())
                return ToolResult::failure(ToolErrorKind::BadArguments,
                                           "scripted_executor requires a string \"code\" argument");
            const auto digest = code_digest(args.at("code").get<std::string>());
            auto it = exec.outputs_by_digest.find(digest);
            if (it == exec.outputs_by_digest.end())
                return ToolResult::failure(ToolErrorKind::ExecutionError,
                                           "no canned output registered for code digest " + digest);
            return ToolResult::success(it->second);
        });
}

} // namespace crew

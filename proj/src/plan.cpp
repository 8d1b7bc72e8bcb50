#include "toolplan/plan.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <optional>

#include "toolplan/error.hpp"
#include "toolplan/placeholder.hpp"

namespace toolplan {

namespace {

enum class Marker { Task, Agent, Tool, Args, Dependency, ExpectedOutput };

constexpr std::pair<Marker, std::string_view> kMarkers[] = {
    {Marker::Task, "Task"},
    {Marker::Agent, "Agent"},
    {Marker::Tool, "Tool"},
    {Marker::Args, "Args"},
    {Marker::Dependency, "Dependency"},
    {Marker::ExpectedOutput, "ExpectedOutput"},
};

std::string marker_name(Marker m) {
    for (const auto& [k, name] : kMarkers) {
        if (k == m) return "#" + std::string(name);
    }
    return "#?";
}

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) ==
                      std::tolower(static_cast<unsigned char>(y));
           });
}

struct MarkerLine {
    Marker marker;
    std::optional<int> number;
    std::string value;
};

std::optional<int> to_int(std::string_view digits) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
    if (ec != std::errc{} || ptr != digits.data() + digits.size()) return std::nullopt;
    return v;
}

// "#Name[N]: value" with Name one of the known markers.
std::optional<MarkerLine> match_marker(std::string_view line) {
    line = trim(line);
    if (line.empty() || line.front() != '#') return std::nullopt;
    std::size_t pos = 1;
    while (pos < line.size() && std::isalpha(static_cast<unsigned char>(line[pos]))) ++pos;
    const std::string_view name = line.substr(1, pos - 1);
    std::optional<Marker> marker;
    for (const auto& [m, n] : kMarkers) {
        if (n == name) marker = m;
    }
    if (!marker) return std::nullopt;
    const std::size_t digits_begin = pos;
    while (pos < line.size() && std::isdigit(static_cast<unsigned char>(line[pos]))) ++pos;
    std::optional<int> number;
    if (pos > digits_begin) number = to_int(line.substr(digits_begin, pos - digits_begin));
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
    if (pos >= line.size() || line[pos] != ':') return std::nullopt;
    return MarkerLine{*marker, number, std::string(trim(line.substr(pos + 1)))};
}

std::vector<int> parse_dependencies(std::string_view value, int step) {
    std::vector<int> deps;
    value = trim(value);
    if (value.empty() || is_none(value)) return deps;
    std::size_t start = 0;
    while (start <= value.size()) {
        std::size_t comma = value.find(',', start);
        if (comma == std::string_view::npos) comma = value.size();
        std::string_view token = trim(value.substr(start, comma - start));
        for (std::string_view prefix : {"step_", "step ", "#S", "S"}) {
            if (token.size() > prefix.size() && iequals(token.substr(0, prefix.size()), prefix)) {
                token.remove_prefix(prefix.size());
                break;
            }
        }
        auto n = to_int(token);
        if (!n || *n < 1) {
            throw Error(ErrorKind::MalformedStep,
                        "step " + std::to_string(step) + ": bad dependency '" +
                            std::string(value) + "'",
                        step, "#Dependency");
        }
        deps.push_back(*n);
        start = comma + 1;
    }
    return deps;
}

class BlockParser {
public:
    Plan run(std::string_view text) {
        std::size_t pos = 0;
        while (pos <= text.size()) {
            std::size_t nl = text.find('\n', pos);
            if (nl == std::string_view::npos) nl = text.size();
            feed(text.substr(pos, nl - pos));
            pos = nl + 1;
        }
        finish_block();
        if (plan_.steps.empty()) {
            throw Error(ErrorKind::MalformedStep, "no #Task marker found", 1, "#Task");
        }
        return std::move(plan_);
    }

private:
    struct Block {
        PlanStep step;
        std::optional<int> number;
        std::vector<Marker> seen;
        std::string args_text;
        bool args_open = false;
        std::string dependency_text;
    };

    void feed(std::string_view raw) {
        const std::string_view line = trim(raw);
        if (line.empty()) {
            finish_block();
            return;
        }
        auto marker = match_marker(line);
        if (block_ && block_->args_open) {
            if (!marker) {
                block_->args_text += "\n";
                block_->args_text += line;
                try_close_args();
                return;
            }
            throw_bad_args();
        }
        if (!marker) return;
        if (marker->marker == Marker::Task) {
            finish_block();
            start_block(*marker);
            return;
        }
        const int next = static_cast<int>(plan_.steps.size()) + 1;
        if (!block_) {
            throw Error(ErrorKind::MalformedStep,
                        "step " + std::to_string(next) + ": " + marker_name(marker->marker) +
                            " outside a step block (a step must start with #Task)",
                        next, marker_name(marker->marker));
        }
        Block& b = *block_;
        const int idx = b.step.index;
        if (marker->number && b.number && *marker->number != *b.number) {
            throw Error(ErrorKind::MalformedStep,
                        "step " + std::to_string(idx) + ": " + marker_name(marker->marker) +
                            " numbered " + std::to_string(*marker->number),
                        idx, marker_name(marker->marker));
        }
        if (std::find(b.seen.begin(), b.seen.end(), marker->marker) != b.seen.end()) {
            throw Error(ErrorKind::MalformedStep,
                        "step " + std::to_string(idx) + ": duplicate " + marker_name(marker->marker),
                        idx, marker_name(marker->marker));
        }
        b.seen.push_back(marker->marker);
        switch (marker->marker) {
            case Marker::Agent: b.step.server = marker->value; break;
            case Marker::Tool: b.step.tool = marker->value; break;
            case Marker::Args:
                b.args_text = marker->value;
                b.args_open = true;
                try_close_args();
                break;
            case Marker::Dependency: b.dependency_text = marker->value; break;
            case Marker::ExpectedOutput: b.step.expected_output = marker->value; break;
            case Marker::Task: break;
        }
    }

    void start_block(const MarkerLine& m) {
        const int position = static_cast<int>(plan_.steps.size()) + 1;
        if (m.number && *m.number != position) {
            throw Error(ErrorKind::MalformedStep,
                        "step " + std::to_string(position) + ": #Task numbered " +
                            std::to_string(*m.number) + ", expected " + std::to_string(position),
                        position, "#Task");
        }
        block_.emplace();
        block_->number = m.number;
        block_->step.index = position;
        block_->step.task = m.value;
        block_->seen.push_back(Marker::Task);
    }

    void try_close_args() {
        Block& b = *block_;
        const std::string_view body = trim(b.args_text);
        if (body.empty() || is_none(body)) {
            b.step.args = Json::object();
            b.args_open = false;
            return;
        }
        try {
            Json parsed = Json::parse(body);
            if (!parsed.is_object()) {
                b.args_open = false;
                throw_bad_args();
            }
            b.step.args = std::move(parsed);
            b.args_open = false;
        } catch (const Json::parse_error&) {
            // A JSON object may span lines; keep collecting while it can
            // still be completed.
            if (body.front() != '{') throw_bad_args();
        }
    }

    [[noreturn]] void throw_bad_args() {
        const int idx = block_->step.index;
        throw Error(ErrorKind::MalformedArgs,
                    "step " + std::to_string(idx) + ": #Args is not a JSON object: " + block_->args_text,
                    idx, block_->args_text);
    }

    void finish_block() {
        if (!block_) return;
        Block& b = *block_;
        if (b.args_open) throw_bad_args();
        const int idx = b.step.index;
        for (Marker required : {Marker::Agent, Marker::Tool}) {
            if (std::find(b.seen.begin(), b.seen.end(), required) == b.seen.end()) {
                throw Error(ErrorKind::MalformedStep,
                            "step " + std::to_string(idx) + ": missing " + marker_name(required), idx,
                            marker_name(required));
            }
        }
        b.step.dependencies = parse_dependencies(b.dependency_text, idx);
        for (int dep : b.step.dependencies) {
            if (dep >= idx) {
                throw Error(ErrorKind::ForwardDependency,
                            "step " + std::to_string(idx) +
                                (dep == idx ? " depends on itself"
                                            : " depends on later step " + std::to_string(dep)),
                            idx, std::to_string(dep));
            }
        }
        plan_.steps.push_back(std::move(b.step));
        block_.reset();
    }

    Plan plan_;
    std::optional<Block> block_;
};

std::string render_dependencies(const std::vector<int>& deps) {
    if (deps.empty()) return std::string(kNoneSentinel);
    std::string out;
    for (std::size_t i = 0; i < deps.size(); ++i) {
        if (i) out += ", ";
        out += std::to_string(deps[i]);
    }
    return out;
}

}  // namespace

bool is_none(std::string_view value) {
    value = trim(value);
    return value.empty() || iequals(value, kNoneSentinel);
}

Plan parse_plan(std::string_view text) {
    if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) {
        throw Error(ErrorKind::EmptyInput, "plan text is empty");
    }
    Plan plan = BlockParser{}.run(text);
    plan.source_text = std::string(text);
    return plan;
}

std::string render_plan(const Plan& plan) {
    std::string out;
    for (std::size_t i = 0; i < plan.steps.size(); ++i) {
        const PlanStep& s = plan.steps[i];
        const std::string n = std::to_string(s.index);
        if (i) out += "\n";
        out += "#Task" + n + ": " + s.task + "\n";
        out += "#Agent" + n + ": " + s.server + "\n";
        out += "#Tool" + n + ": " + s.tool + "\n";
        out += "#Args" + n + ": " + dump_compact(s.args.is_null() ? Json::object() : s.args) + "\n";
        out += "#Dependency" + n + ": " + render_dependencies(s.dependencies) + "\n";
        out += "#ExpectedOutput" + n + ": " + s.expected_output + "\n";
    }
    return out;
}

std::vector<Finding> validate_structure(const Plan& plan, const ToolCatalog& catalog) {
    std::vector<Finding> findings;
    auto error = [&](int step, std::string msg) {
        findings.push_back({Severity::Error, step, std::move(msg)});
    };
    std::set<int> seen_indices;
    for (std::size_t i = 0; i < plan.steps.size(); ++i) {
        const PlanStep& s = plan.steps[i];
        const int idx = s.index;
        const int expected = static_cast<int>(i) + 1;
        if (idx != expected) {
            error(idx, "step numbering: expected " + std::to_string(expected) + ", found " +
                           std::to_string(idx));
        }
        if (!seen_indices.insert(idx).second) error(idx, "duplicate step index " + std::to_string(idx));

        for (int dep : s.dependencies) {
            if (dep == idx) {
                error(idx, "self dependency");
            } else if (dep > idx) {
                error(idx, "forward dependency on step " + std::to_string(dep));
            } else if (dep < 1) {
                error(idx, "invalid dependency " + std::to_string(dep));
            }
        }

        if (is_none(s.server) != is_none(s.tool)) {
            error(idx, "inconsistent none sentinel: server '" + s.server + "', tool '" + s.tool + "'");
            continue;
        }
        if (!s.actionable()) continue;

        const ServerSpec* server = catalog.find_server(s.server);
        const ToolSpec* tool = catalog.find_tool(s.tool);
        if (!server) error(idx, "unknown server " + s.server);
        if (!tool) {
            error(idx, "unknown tool " + s.tool);
        } else if (canonical_server(tool->server) != canonical_server(s.server)) {
            error(idx, "tool not owned by server: " + s.tool + " belongs to " + tool->server +
                           ", not " + s.server);
        }
        if (tool) {
            auto arg_findings = validate_args(*tool, s.args, idx);
            findings.insert(findings.end(), arg_findings.begin(), arg_findings.end());
        }

        for (int ref : placeholders_in(s.args)) {
            if (ref >= idx) {
                error(idx, "placeholder " + placeholder_token(ref) +
                               (ref == idx ? " references its own step" : " references a later step"));
            } else if (std::find(s.dependencies.begin(), s.dependencies.end(), ref) ==
                       s.dependencies.end()) {
                findings.push_back({Severity::Warning, idx,
                                    "placeholder " + placeholder_token(ref) +
                                        " references a step that is not a declared dependency"});
            }
        }
    }
    return findings;
}

std::set<ToolPair> extract_actionable_pairs(const Plan& plan) {
    std::set<ToolPair> pairs;
    for (const auto& s : plan.steps) {
        if (s.actionable()) pairs.insert({s.server, s.tool});
    }
    return pairs;
}

}  // namespace toolplan

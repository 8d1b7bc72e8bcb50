#pragma once

#include <compare>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "toolplan/catalog.hpp"
#include "toolplan/io.hpp"

namespace toolplan {

/// Literal written in `#Agent` / `#Tool` for a step that calls nothing.
inline constexpr std::string_view kNoneSentinel = "none";

/// Case-insensitive "none", or empty.
bool is_none(std::string_view value);

struct PlanStep {
    int index = 1;
    std::string task;
    std::string server;
    std::string tool;
    Json args = Json::object();
    std::vector<int> dependencies;
    std::string expected_output;

    bool actionable() const { return !is_none(server) && !is_none(tool); }
    bool operator==(const PlanStep&) const = default;
};

struct Plan {
    std::vector<PlanStep> steps;
    std::string source_text;

    /// Compares steps only; source text is provenance, not content.
    bool operator==(const Plan& other) const { return steps == other.steps; }
    std::size_t size() const noexcept { return steps.size(); }
};

struct ToolPair {
    std::string server;
    std::string tool;

    auto operator<=>(const ToolPair&) const = default;
};

/// Parses the `#Task / #Agent / #Tool / #Args / #Dependency / #ExpectedOutput`
/// block format. Throws EmptyInput, MalformedStep, MalformedArgs or
/// ForwardDependency; lines that are not markers are ignored.
Plan parse_plan(std::string_view text);

/// Canonical rendering: six numbered markers per step, blank line between
/// steps, trailing newline.
std::string render_plan(const Plan& plan);

/// Catalog-aware structural checks. Never throws.
std::vector<Finding> validate_structure(const Plan& plan, const ToolCatalog& catalog);

/// (server, tool) pairs of actionable steps, spelled as in the plan.
std::set<ToolPair> extract_actionable_pairs(const Plan& plan);

}  // namespace toolplan

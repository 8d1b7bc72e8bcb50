#pragma once

#include <optional>
#include <string>
#include <vector>

#include "toolplan/io.hpp"
#include "toolplan/plan.hpp"

namespace toolplan {

struct PairScore {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t matched = 0;
    std::size_t gold_size = 0;
    std::size_t candidate_size = 0;
};

/// Builds a score from counts. Both sizes zero is a perfect match; an empty
/// side against a non-empty one scores zero.
PairScore score_from_counts(std::size_t matched, std::size_t gold_size, std::size_t candidate_size);

/// Set F1 over actionable (server, tool) pairs. Server names are compared
/// in canonical form, so IoT and IoTAgent are the same server.
PairScore at_f1(const Plan& gold, const Plan& candidate);

/// Micro-averaged F1 over argument key names of the (server, tool) pairs
/// present in both plans. Keys of repeated pairs are unioned.
PairScore argkey_f1(const Plan& gold, const Plan& candidate);

/// Share of gold actionable pairs whose server appears in the candidate.
double routing_accuracy(const Plan& gold, const Plan& candidate);

/// Share of gold actionable pairs present in the candidate.
double tool_selection_accuracy(const Plan& gold, const Plan& candidate);

struct ScenarioResult {
    std::string scenario_id;
    PairScore at;
    PairScore argkey;
    double routing = 0.0;
    double tool_selection = 0.0;
    std::optional<double> judge_overall;
    /// Set when the candidate text failed to parse; it was then scored as
    /// an empty plan.
    std::optional<std::string> parse_error;
};

/// Structural metrics for one scenario.
ScenarioResult evaluate_scenario(std::string scenario_id, const Plan& gold, const Plan& candidate);

struct AggregateMetrics {
    double at_precision = 0.0;
    double at_recall = 0.0;
    double at_f1 = 0.0;
    double argkey_precision = 0.0;
    double argkey_recall = 0.0;
    double argkey_f1 = 0.0;
    double routing = 0.0;
    double tool_selection = 0.0;
    std::optional<double> judge_overall;
    std::size_t scenarios = 0;
    std::size_t judged = 0;
    std::size_t parse_failures = 0;
};

struct EvalReport {
    std::string condition;
    std::vector<ScenarioResult> rows;
    AggregateMetrics aggregate;

    Json to_json() const;
    static EvalReport from_json(const Json& doc);
    std::string to_csv() const;
};

/// Arithmetic means over rows; the judge mean covers judged rows only.
/// Throws EmptyRowSet.
EvalReport aggregate_report(std::vector<ScenarioResult> rows, std::string condition = {});

}  // namespace toolplan

#include "toolplan/metrics.hpp"

#include <cstdio>
#include <map>

#include "toolplan/error.hpp"

namespace toolplan {

namespace {

using KeySet = std::set<std::string>;

std::set<ToolPair> canonical_pairs(const Plan& plan) {
    std::set<ToolPair> out;
    for (const auto& s : plan.steps) {
        if (s.actionable()) out.insert({canonical_server(s.server), s.tool});
    }
    return out;
}

std::map<ToolPair, KeySet> keys_by_pair(const Plan& plan) {
    std::map<ToolPair, KeySet> out;
    for (const auto& s : plan.steps) {
        if (!s.actionable()) continue;
        auto& keys = out[{canonical_server(s.server), s.tool}];
        if (s.args.is_object()) {
            for (const auto& [k, v] : s.args.items()) keys.insert(k);
        }
    }
    return out;
}

double f1_of(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

Json score_json(const PairScore& s) {
    return Json{{"precision", s.precision}, {"recall", s.recall},       {"f1", s.f1},
                {"matched", s.matched},     {"gold_size", s.gold_size}, {"candidate_size", s.candidate_size}};
}

PairScore score_from_json(const Json& j) {
    PairScore s;
    s.precision = j.at("precision").get<double>();
    s.recall = j.at("recall").get<double>();
    s.f1 = j.at("f1").get<double>();
    s.matched = j.at("matched").get<std::size_t>();
    s.gold_size = j.at("gold_size").get<std::size_t>();
    s.candidate_size = j.at("candidate_size").get<std::size_t>();
    return s;
}

template <class T>
Json optional_json(const std::optional<T>& v) {
    return v ? Json(*v) : Json(nullptr);
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

PairScore score_from_counts(std::size_t matched, std::size_t gold_size, std::size_t candidate_size) {
    PairScore s;
    s.matched = matched;
    s.gold_size = gold_size;
    s.candidate_size = candidate_size;
    if (gold_size == 0 && candidate_size == 0) {
        s.precision = s.recall = s.f1 = 1.0;
        return s;
    }
    s.precision = candidate_size ? static_cast<double>(matched) / static_cast<double>(candidate_size) : 0.0;
    s.recall = gold_size ? static_cast<double>(matched) / static_cast<double>(gold_size) : 0.0;
    s.f1 = f1_of(s.precision, s.recall);
    return s;
}

PairScore at_f1(const Plan& gold, const Plan& candidate) {
    const auto g = canonical_pairs(gold);
    const auto c = canonical_pairs(candidate);
    std::size_t matched = 0;
    for (const auto& p : c) matched += g.count(p);
    return score_from_counts(matched, g.size(), c.size());
}

PairScore argkey_f1(const Plan& gold, const Plan& candidate) {
    const auto g = keys_by_pair(gold);
    const auto c = keys_by_pair(candidate);
    if (g.empty() && c.empty()) return score_from_counts(0, 0, 0);

    std::size_t matched = 0, gold_keys = 0, cand_keys = 0;
    bool any_pair = false;
    for (const auto& [pair, gkeys] : g) {
        auto it = c.find(pair);
        if (it == c.end()) continue;
        any_pair = true;
        gold_keys += gkeys.size();
        cand_keys += it->second.size();
        for (const auto& k : it->second) matched += gkeys.count(k);
    }
    if (!any_pair) {
        PairScore zero;
        return zero;
    }
    return score_from_counts(matched, gold_keys, cand_keys);
}

double routing_accuracy(const Plan& gold, const Plan& candidate) {
    const auto g = canonical_pairs(gold);
    const auto c = canonical_pairs(candidate);
    if (g.empty()) return c.empty() ? 1.0 : 0.0;
    std::set<std::string> servers;
    for (const auto& p : c) servers.insert(p.server);
    std::size_t hit = 0;
    for (const auto& p : g) hit += servers.count(p.server);
    return static_cast<double>(hit) / static_cast<double>(g.size());
}

double tool_selection_accuracy(const Plan& gold, const Plan& candidate) {
    const auto g = canonical_pairs(gold);
    const auto c = canonical_pairs(candidate);
    if (g.empty()) return c.empty() ? 1.0 : 0.0;
    std::size_t hit = 0;
    for (const auto& p : g) hit += c.count(p);
    return static_cast<double>(hit) / static_cast<double>(g.size());
}

ScenarioResult evaluate_scenario(std::string scenario_id, const Plan& gold, const Plan& candidate) {
    ScenarioResult r;
    r.scenario_id = std::move(scenario_id);
    r.at = at_f1(gold, candidate);
    r.argkey = argkey_f1(gold, candidate);
    r.routing = routing_accuracy(gold, candidate);
    r.tool_selection = tool_selection_accuracy(gold, candidate);
    return r;
}

EvalReport aggregate_report(std::vector<ScenarioResult> rows, std::string condition) {
    if (rows.empty()) throw Error(ErrorKind::EmptyRowSet, "cannot aggregate an empty row set");
    EvalReport report;
    report.condition = std::move(condition);
    AggregateMetrics& a = report.aggregate;
    double judge_sum = 0.0;
    for (const auto& r : rows) {
        a.at_precision += r.at.precision;
        a.at_recall += r.at.recall;
        a.at_f1 += r.at.f1;
        a.argkey_precision += r.argkey.precision;
        a.argkey_recall += r.argkey.recall;
        a.argkey_f1 += r.argkey.f1;
        a.routing += r.routing;
        a.tool_selection += r.tool_selection;
        if (r.judge_overall) {
            judge_sum += *r.judge_overall;
            ++a.judged;
        }
        if (r.parse_error) ++a.parse_failures;
    }
    const double n = static_cast<double>(rows.size());
    for (double* field : {&a.at_precision, &a.at_recall, &a.at_f1, &a.argkey_precision,
                          &a.argkey_recall, &a.argkey_f1, &a.routing, &a.tool_selection}) {
        *field /= n;
    }
    if (a.judged) a.judge_overall = judge_sum / static_cast<double>(a.judged);
    a.scenarios = rows.size();
    report.rows = std::move(rows);
    return report;
}

Json EvalReport::to_json() const {
    Json rows_json = Json::array();
    for (const auto& r : rows) {
        rows_json.push_back({{"scenario_id", r.scenario_id},
                             {"at", score_json(r.at)},
                             {"argkey", score_json(r.argkey)},
                             {"routing_accuracy", r.routing},
                             {"tool_selection_accuracy", r.tool_selection},
                             {"judge_overall", optional_json(r.judge_overall)},
                             {"parse_error", optional_json(r.parse_error)}});
    }
    const AggregateMetrics& a = aggregate;
    Json agg{{"scenarios", a.scenarios},
             {"at_precision", a.at_precision},
             {"at_recall", a.at_recall},
             {"at_f1", a.at_f1},
             {"argkey_precision", a.argkey_precision},
             {"argkey_recall", a.argkey_recall},
             {"argkey_f1", a.argkey_f1},
             {"routing_accuracy", a.routing},
             {"tool_selection_accuracy", a.tool_selection},
             {"judge_overall", optional_json(a.judge_overall)},
             {"judged", a.judged},
             {"parse_failures", a.parse_failures}};
    return Json{{"condition", condition}, {"aggregate", std::move(agg)}, {"rows", std::move(rows_json)}};
}

EvalReport EvalReport::from_json(const Json& doc) {
    try {
        std::vector<ScenarioResult> rows;
        for (const auto& rj : doc.at("rows")) {
            ScenarioResult r;
            r.scenario_id = rj.at("scenario_id").get<std::string>();
            r.at = score_from_json(rj.at("at"));
            r.argkey = score_from_json(rj.at("argkey"));
            r.routing = rj.at("routing_accuracy").get<double>();
            r.tool_selection = rj.at("tool_selection_accuracy").get<double>();
            if (rj.contains("judge_overall") && !rj["judge_overall"].is_null()) {
                r.judge_overall = rj["judge_overall"].get<double>();
            }
            if (rj.contains("parse_error") && !rj["parse_error"].is_null()) {
                r.parse_error = rj["parse_error"].get<std::string>();
            }
            rows.push_back(std::move(r));
        }
        return aggregate_report(std::move(rows), doc.value("condition", std::string{}));
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::InvalidInput, std::string("malformed report: ") + e.what());
    }
}

std::string EvalReport::to_csv() const {
    std::string out =
        "scenario_id,at_precision,at_recall,at_f1,argkey_precision,argkey_recall,argkey_f1,"
        "routing_accuracy,tool_selection_accuracy,judge_overall,parse_error\n";
    for (const auto& r : rows) {
        out += csv_field(r.scenario_id) + "," + fmt(r.at.precision) + "," + fmt(r.at.recall) + "," +
               fmt(r.at.f1) + "," + fmt(r.argkey.precision) + "," + fmt(r.argkey.recall) + "," +
               fmt(r.argkey.f1) + "," + fmt(r.routing) + "," + fmt(r.tool_selection) + "," +
               (r.judge_overall ? fmt(*r.judge_overall) : "") + "," +
               (r.parse_error ? csv_field(*r.parse_error) : "") + "\n";
    }
    return out;
}

}  // namespace toolplan

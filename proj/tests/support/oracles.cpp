#include "support/oracles.hpp"

#include <algorithm>
#include <string>
#include <vector>

namespace toolplan::testing {

namespace {

std::string strip_agent(const std::string& server) {
    const std::string suffix = "Agent";
    if (server.size() > suffix.size() && server.compare(server.size() - suffix.size(), suffix.size(), suffix) == 0) {
        return server.substr(0, server.size() - suffix.size());
    }
    return server;
}

bool is_sentinel(const std::string& s) {
    std::string lower;
    for (char c : s) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return lower == "none" || lower.empty();
}

struct Call {
    std::string pair;  // "server\x1ftool"
    std::vector<std::string> keys;
};

std::vector<Call> calls_of(const Plan& plan) {
    std::vector<Call> out;
    for (const auto& s : plan.steps) {
        if (is_sentinel(s.server) || is_sentinel(s.tool)) continue;
        Call c{strip_agent(s.server) + '\x1f' + s.tool, {}};
        for (auto it = s.args.begin(); it != s.args.end(); ++it) c.keys.push_back(it.key());
        out.push_back(std::move(c));
    }
    return out;
}

bool contains(const std::vector<std::string>& v, const std::string& x) {
    for (const auto& y : v) {
        if (y == x) return true;
    }
    return false;
}

std::vector<std::string> distinct_pairs(const std::vector<Call>& calls) {
    std::vector<std::string> out;
    for (const auto& c : calls) {
        if (!contains(out, c.pair)) out.push_back(c.pair);
    }
    return out;
}

std::vector<std::string> keys_for(const std::vector<Call>& calls, const std::string& pair) {
    std::vector<std::string> out;
    for (const auto& c : calls) {
        if (c.pair != pair) continue;
        for (const auto& k : c.keys) {
            if (!contains(out, k)) out.push_back(k);
        }
    }
    return out;
}

OracleScore from_counts(double tp, double gold, double cand) {
    OracleScore s;
    if (gold == 0 && cand == 0) return {1.0, 1.0, 1.0};
    s.precision = cand > 0 ? tp / cand : 0.0;
    s.recall = gold > 0 ? tp / gold : 0.0;
    s.f1 = s.precision + s.recall > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    return s;
}

}  // namespace

OracleScore oracle_at_f1(const Plan& gold, const Plan& candidate) {
    const auto g = distinct_pairs(calls_of(gold));
    const auto c = distinct_pairs(calls_of(candidate));
    std::vector<std::string> universe = g;
    for (const auto& p : c) {
        if (!contains(universe, p)) universe.push_back(p);
    }
    double tp = 0;
    for (const auto& p : universe) tp += (contains(g, p) && contains(c, p)) ? 1 : 0;
    return from_counts(tp, static_cast<double>(g.size()), static_cast<double>(c.size()));
}

OracleScore oracle_argkey_f1(const Plan& gold, const Plan& candidate) {
    const auto gc = calls_of(gold);
    const auto cc = calls_of(candidate);
    if (gc.empty() && cc.empty()) return {1.0, 1.0, 1.0};
    const auto g = distinct_pairs(gc);
    const auto c = distinct_pairs(cc);
    double tp = 0, gold_keys = 0, cand_keys = 0;
    bool any = false;
    for (const auto& p : g) {
        if (!contains(c, p)) continue;
        any = true;
        const auto gk = keys_for(gc, p);
        const auto ck = keys_for(cc, p);
        gold_keys += static_cast<double>(gk.size());
        cand_keys += static_cast<double>(ck.size());
        std::vector<std::string> universe = gk;
        for (const auto& k : ck) {
            if (!contains(universe, k)) universe.push_back(k);
        }
        for (const auto& k : universe) tp += (contains(gk, k) && contains(ck, k)) ? 1 : 0;
    }
    if (!any) return {};
    return from_counts(tp, gold_keys, cand_keys);
}

namespace {

int uniform(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

PlanStep random_step(std::mt19937_64& rng, const ToolCatalog& catalog) {
    const auto tools = catalog.all_tools();
    const ToolSpec& spec = *tools[static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(tools.size()) - 1))];
    PlanStep s;
    s.server = uniform(rng, 0, 1) ? spec.server : agent_label(spec.server);
    s.tool = spec.name;
    s.args = Json::object();
    for (const auto& a : spec.args) {
        if (uniform(rng, 0, 3) != 0) s.args[a.key] = "v";
    }
    if (uniform(rng, 0, 5) == 0) s.args["extra_" + std::to_string(uniform(rng, 0, 2))] = 1;
    return s;
}

void renumber(Plan& plan) {
    for (std::size_t i = 0; i < plan.steps.size(); ++i) {
        plan.steps[i].index = static_cast<int>(i + 1);
        plan.steps[i].task = "step " + std::to_string(i + 1);
        plan.steps[i].dependencies.clear();
        if (i > 0 && (i % 2 == 1)) plan.steps[i].dependencies.push_back(static_cast<int>(i));
    }
}

int actionable_count(const Plan& plan) {
    int n = 0;
    for (const auto& s : plan.steps) n += s.actionable();
    return n;
}

}  // namespace

Plan random_plan(std::mt19937_64& rng, const ToolCatalog& catalog, int max_actionable) {
    Plan plan;
    const int actionable = uniform(rng, 0, max_actionable);
    for (int i = 0; i < actionable; ++i) {
        if (i > 0 && uniform(rng, 0, 5) == 0) {
            PlanStep repeat = plan.steps[static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(plan.steps.size()) - 1))];
            if (repeat.actionable()) {
                repeat.args = Json::object();
                repeat.args["repeat_key"] = true;
                plan.steps.push_back(repeat);
                continue;
            }
        }
        plan.steps.push_back(random_step(rng, catalog));
    }
    if (uniform(rng, 0, 3) == 0) {
        PlanStep none;
        none.server = "none";
        none.tool = "none";
        plan.steps.push_back(none);
    }
    renumber(plan);
    return plan;
}

Plan mutate_plan(std::mt19937_64& rng, const Plan& gold, const ToolCatalog& catalog, int max_actionable) {
    Plan out;
    for (const auto& s : gold.steps) {
        const int roll = uniform(rng, 0, 9);
        if (roll == 0) continue;  // drop
        PlanStep copy = s;
        if (roll == 1 && copy.actionable()) {
            copy = random_step(rng, catalog);  // swap for a random call
        } else if (roll == 2 && copy.actionable()) {
            Json rekeyed = Json::object();
            for (auto it = copy.args.begin(); it != copy.args.end(); ++it) {
                if (uniform(rng, 0, 2)) rekeyed[it.key()] = it.value();
            }
            rekeyed["other"] = 0;
            copy.args = rekeyed;
        } else if (roll == 3 && copy.actionable()) {
            copy.server = canonical_server(copy.server) == copy.server ? agent_label(copy.server)
                                                                       : canonical_server(copy.server);
        }
        out.steps.push_back(copy);
    }
    while (actionable_count(out) < max_actionable && uniform(rng, 0, 3) == 0) {
        out.steps.push_back(random_step(rng, catalog));
    }
    while (actionable_count(out) > max_actionable) {
        auto it = std::find_if(out.steps.begin(), out.steps.end(), [](const PlanStep& s) { return s.actionable(); });
        out.steps.erase(it);
    }
    renumber(out);
    return out;
}

std::string fixture_path(const std::string& relative) { return std::string(TOOLPLAN_FIXTURE_DIR) + "/" + relative; }

ToolCatalog fixture_catalog() { return load_catalog(std::string(TOOLPLAN_TEST_DATA_DIR) + "/assetops.catalog.json"); }

}  // namespace toolplan::testing

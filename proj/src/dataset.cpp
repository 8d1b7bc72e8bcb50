#include "toolplan/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <iostream>
#include <set>

#include "toolplan/error.hpp"
#include "toolplan/placeholder.hpp"

namespace toolplan {

namespace {

constexpr std::string_view kExecutionInstruction =
    "Mode: plan and execute. After each step, show the resolved tool call and its result.";

bool validate_fraction(double f) { return f > 0.0 && f < 1.0 && std::isfinite(f); }

std::string backticked(std::string_view name) { return "`" + std::string(name) + "`"; }

std::string describe_args(const ToolSpec& tool) {
    if (tool.args.empty()) return "no arguments";
    std::string out;
    for (std::size_t i = 0; i < tool.args.size(); ++i) {
        const auto& a = tool.args[i];
        if (i) out += ", ";
        out += a.key + " (" + std::string(to_string(a.type)) + (a.required ? ", required)" : ", optional)");
    }
    return out;
}

std::string first_sentence(const std::string& text) {
    auto end = text.find(". ");
    std::string s = end == std::string::npos ? text : text.substr(0, end);
    while (!s.empty() && (s.back() == '.' || s.back() == ' ')) s.pop_back();
    if (!s.empty()) s[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(s[0])));
    return s;
}

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

// Whole-token occurrence of `name` in `text`.
bool mentions(std::string_view text, std::string_view name) {
    for (auto pos = text.find(name); pos != std::string_view::npos; pos = text.find(name, pos + 1)) {
        const bool left_ok = pos == 0 || !is_word_char(text[pos - 1]);
        const std::size_t end = pos + name.size();
        const bool right_ok = end >= text.size() || !is_word_char(text[end]);
        if (left_ok && right_ok) return true;
    }
    return false;
}

std::string trim_copy(std::string s) {
    const auto first = s.find_first_not_of(" \t\r\n\"");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n\"");
    return s.substr(first, last - first + 1);
}

}  // namespace

// ---------------------------------------------------------------------------
// Corpus

Scenario Scenario::from_json(const Json& j) {
    Scenario s;
    try {
        s.id = j.at("id").get<std::string>();
        s.question = j.at("question").get<std::string>();
        const auto plan_text = j.at("gold_plan").get<std::string>();
        try {
            s.gold_plan = parse_plan(plan_text);
        } catch (const Error& e) {
            throw Error(ErrorKind::InvalidGoldPlan, "scenario " + s.id + ": gold plan: " + e.what(),
                        e.step(), s.id);
        }
        for (const auto& p : j.value("paraphrases", Json::array())) s.paraphrases.push_back(p.get<std::string>());
        for (const auto& t : j.value("traces", Json::array())) {
            ExecutionTrace trace;
            for (const auto& rec : t) trace.push_back(TraceRecord::from_json(rec));
            s.traces.push_back(std::move(trace));
        }
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::InvalidInput,
                    "malformed scenario" + (s.id.empty() ? std::string{} : " " + s.id) + ": " + e.what(),
                    std::nullopt, s.id);
    }
    return s;
}

Json Scenario::to_json() const {
    Json traces_json = Json::array();
    for (const auto& t : traces) {
        Json records = Json::array();
        for (const auto& r : t) records.push_back(r.to_json());
        traces_json.push_back(std::move(records));
    }
    return Json{{"id", id},
                {"question", question},
                {"gold_plan", render_plan(gold_plan)},
                {"paraphrases", Json(paraphrases)},
                {"traces", std::move(traces_json)}};
}

std::vector<Scenario> load_corpus(const std::filesystem::path& path) {
    std::vector<Scenario> out;
    for (const auto& rec : read_jsonl(path)) out.push_back(Scenario::from_json(rec));
    std::sort(out.begin(), out.end(), [](const Scenario& a, const Scenario& b) { return a.id < b.id; });
    for (std::size_t i = 1; i < out.size(); ++i) {
        if (out[i].id == out[i - 1].id) {
            throw Error(ErrorKind::InvalidInput, "duplicate scenario id " + out[i].id, std::nullopt, out[i].id);
        }
    }
    return out;
}

std::string corpus_to_jsonl(const std::vector<Scenario>& scenarios) {
    std::vector<Json> records;
    records.reserve(scenarios.size());
    for (const auto& s : scenarios) records.push_back(s.to_json());
    return to_jsonl(records);
}

// ---------------------------------------------------------------------------
// Examples

std::string_view to_string(ExampleKind kind) {
    switch (kind) {
        case ExampleKind::ToolKnowledge: return "tool_knowledge";
        case ExampleKind::Plan: return "plan";
        case ExampleKind::Execution: return "execution";
    }
    return "plan";
}

std::optional<ExampleKind> parse_example_kind(std::string_view name) {
    for (auto k : {ExampleKind::ToolKnowledge, ExampleKind::Plan, ExampleKind::Execution}) {
        if (to_string(k) == name) return k;
    }
    return std::nullopt;
}

Json SftExample::to_json() const {
    return Json{{"kind", to_string(kind)},
                {"input", input},
                {"target", target},
                {"scenario_id", scenario_id ? Json(*scenario_id) : Json(nullptr)}};
}

SftExample SftExample::from_json(const Json& j) {
    try {
        SftExample e;
        auto kind = parse_example_kind(j.at("kind").get<std::string>());
        if (!kind) throw Error(ErrorKind::InvalidInput, "unknown example kind");
        e.kind = *kind;
        e.input = j.at("input").get<std::string>();
        e.target = j.at("target").get<std::string>();
        if (j.contains("scenario_id") && !j["scenario_id"].is_null()) {
            e.scenario_id = j["scenario_id"].get<std::string>();
        }
        return e;
    } catch (const Json::exception& ex) {
        throw Error(ErrorKind::InvalidInput, std::string("malformed SFT example: ") + ex.what());
    }
}

// ---------------------------------------------------------------------------
// Patterns and split

std::string PatternKey::to_string() const {
    std::string out = dominant_server + "|";
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (i) out += ",";
        out += pairs[i].server + "." + pairs[i].tool;
    }
    return out + "|" + step_bucket;
}

std::string step_bucket(std::size_t steps) { return steps >= 5 ? "5+" : std::to_string(steps); }

PatternKey assign_pattern(const Scenario& scenario) {
    std::map<std::string, std::size_t> server_counts;
    for (const auto& s : scenario.gold_plan.steps) {
        if (s.actionable()) ++server_counts[agent_label(s.server)];
    }
    if (server_counts.empty()) {
        throw Error(ErrorKind::NoActionableSteps, "scenario " + scenario.id + " has no actionable steps",
                    std::nullopt, scenario.id);
    }
    // std::map iterates alphabetically, so the first maximum wins ties.
    auto dominant = server_counts.begin();
    for (auto it = server_counts.begin(); it != server_counts.end(); ++it) {
        if (it->second > dominant->second) dominant = it;
    }
    std::set<ToolPair> pairs;
    for (const auto& p : extract_actionable_pairs(scenario.gold_plan)) pairs.insert({agent_label(p.server), p.tool});
    return PatternKey{dominant->first, std::vector<ToolPair>(pairs.begin(), pairs.end()),
                      step_bucket(scenario.gold_plan.steps.size())};
}

bool SplitManifest::is_train(std::string_view id) const {
    return std::binary_search(train_ids.begin(), train_ids.end(), id);
}

bool SplitManifest::is_test(std::string_view id) const {
    return std::binary_search(test_ids.begin(), test_ids.end(), id);
}

Json SplitManifest::to_json() const {
    Json patterns = Json::object();
    for (const auto& [id, key] : pattern_map) patterns[id] = key;
    return Json{{"seed", seed},
                {"test_fraction", test_fraction},
                {"train_count", train_ids.size()},
                {"test_count", test_ids.size()},
                {"train_ids", Json(train_ids)},
                {"test_ids", Json(test_ids)},
                {"pattern_map", std::move(patterns)}};
}

SplitManifest SplitManifest::from_json(const Json& j) {
    try {
        SplitManifest m;
        m.seed = j.at("seed").get<std::uint64_t>();
        m.test_fraction = j.at("test_fraction").get<double>();
        m.train_ids = j.at("train_ids").get<std::vector<std::string>>();
        m.test_ids = j.at("test_ids").get<std::vector<std::string>>();
        const Json patterns = j.value("pattern_map", Json::object());
        for (const auto& [id, key] : patterns.items()) {
            m.pattern_map[id] = key.get<std::string>();
        }
        std::sort(m.train_ids.begin(), m.train_ids.end());
        std::sort(m.test_ids.begin(), m.test_ids.end());
        std::vector<std::string> overlap;
        std::set_intersection(m.train_ids.begin(), m.train_ids.end(), m.test_ids.begin(), m.test_ids.end(),
                              std::back_inserter(overlap));
        if (!overlap.empty()) {
            throw Error(ErrorKind::InvalidInput, "manifest lists " + overlap.front() + " in both splits",
                        std::nullopt, overlap.front());
        }
        return m;
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::InvalidInput, std::string("malformed split manifest: ") + e.what());
    }
}

SplitManifest stratified_split(const std::vector<Scenario>& scenarios, double test_fraction,
                               std::uint64_t seed) {
    if (!validate_fraction(test_fraction)) {
        throw Error(ErrorKind::InvalidFraction,
                    "test fraction must lie strictly between 0 and 1, got " + std::to_string(test_fraction));
    }
    if (scenarios.empty()) throw Error(ErrorKind::InvalidInput, "no scenarios to split");

    SplitManifest manifest;
    manifest.seed = seed;
    manifest.test_fraction = test_fraction;

    std::map<std::string, std::vector<std::string>> groups;
    std::set<std::string> ids;
    for (const auto& s : scenarios) {
        if (!ids.insert(s.id).second) {
            throw Error(ErrorKind::InvalidInput, "duplicate scenario id " + s.id, std::nullopt, s.id);
        }
        const std::string key = assign_pattern(s).to_string();
        manifest.pattern_map[s.id] = key;
        groups[key].push_back(s.id);
    }

    const auto total_test = static_cast<std::size_t>(std::llround(static_cast<double>(scenarios.size()) * test_fraction));

    struct Quota {
        const std::string* key;
        std::size_t slots;
        double remainder;
    };
    std::vector<Quota> quotas;
    std::size_t allocated = 0;
    for (auto& [key, members] : groups) {
        std::sort(members.begin(), members.end());
        const double exact = static_cast<double>(members.size()) * test_fraction;
        const auto whole = static_cast<std::size_t>(std::floor(exact + 1e-9));
        quotas.push_back({&key, whole, exact - static_cast<double>(whole)});
        allocated += whole;
    }
    // Largest remainder; ties go to the alphabetically first pattern.
    std::vector<Quota*> order;
    for (auto& q : quotas) order.push_back(&q);
    std::stable_sort(order.begin(), order.end(),
                     [](const Quota* a, const Quota* b) { return a->remainder > b->remainder + 1e-12; });
    for (std::size_t i = 0; allocated < total_test && i < order.size(); ++i) {
        if (order[i]->slots < groups[*order[i]->key].size()) {
            ++order[i]->slots;
            ++allocated;
        }
    }

    std::mt19937_64 rng(seed);
    for (const auto& q : quotas) {
        auto members = groups[*q.key];
        shuffle_with(members, rng);
        for (std::size_t i = 0; i < members.size(); ++i) {
            (i < q.slots ? manifest.test_ids : manifest.train_ids).push_back(members[i]);
        }
    }
    std::sort(manifest.train_ids.begin(), manifest.train_ids.end());
    std::sort(manifest.test_ids.begin(), manifest.test_ids.end());
    return manifest;
}

std::vector<Scenario> select_split(const std::vector<Scenario>& scenarios, const SplitManifest& manifest,
                                   bool train) {
    std::vector<Scenario> out;
    for (const auto& s : scenarios) {
        if (train ? manifest.is_train(s.id) : manifest.is_test(s.id)) out.push_back(s);
    }
    std::sort(out.begin(), out.end(), [](const Scenario& a, const Scenario& b) { return a.id < b.id; });
    return out;
}

// ---------------------------------------------------------------------------
// Builders

std::vector<SftExample> build_tool_knowledge_examples(const ToolCatalog& catalog, const ChatEndpoint* teacher,
                                                      ToolKnowledgeStats* stats, const RetryPolicy& retry) {
    std::vector<SftExample> out;
    if (catalog.empty()) return out;
    auto add = [&](std::string input, std::string target) {
        out.push_back({ExampleKind::ToolKnowledge, std::move(input), std::move(target), std::nullopt});
    };

    {
        std::string target = "The catalog has " + std::to_string(catalog.servers().size()) + " MCP servers: ";
        for (std::size_t i = 0; i < catalog.servers().size(); ++i) {
            const auto& s = catalog.servers()[i];
            if (i) target += "; ";
            target += agent_label(s.name) + " (" + std::to_string(s.tools.size()) + " tools)";
        }
        add("Which MCP servers are available?", target + ".");
    }

    for (const auto& server : catalog.servers()) {
        std::string names;
        for (std::size_t i = 0; i < server.tools.size(); ++i) {
            if (i) names += ", ";
            names += backticked(server.tools[i].name);
        }
        add("Which tools does the " + agent_label(server.name) + " server expose?",
            agent_label(server.name) + " exposes " + std::to_string(server.tools.size()) + " tools: " + names + ".");
    }

    std::vector<std::pair<std::string, std::string>> ownership;
    for (const ToolSpec* tool : catalog.all_tools()) {
        const std::string agent = agent_label(tool->server);
        std::string question = "Which MCP server provides the tool " + backticked(tool->name) + "?";
        std::string answer = backticked(tool->name) + " is provided by the " + agent + " server (#Agent: " +
                             agent + ").";
        add(question, answer);
        ownership.emplace_back(std::move(question), std::move(answer));

        add("What arguments does " + backticked(tool->name) + " take?",
            backticked(tool->name) + " on " + agent + " takes " + describe_args(*tool) + ".");

        if (!tool->description.empty()) {
            add("Which tool should be called to " + first_sentence(tool->description) + "?",
                "Call " + backticked(tool->name) + " on " + agent + " (#Agent: " + agent + ", #Tool: " +
                    tool->name + ").");
        }
    }

    for (const auto& pair : near_miss_pairs(catalog)) {
        const ToolSpec* a = catalog.find_tool(pair.first);
        const ToolSpec* b = catalog.find_tool(pair.second);
        auto summary = [](const ToolSpec& t) {
            return backticked(t.name) + " (" + agent_label(t.server) + ") takes " + describe_args(t) + ". " +
                   (t.description.empty() ? std::string{} : first_sentence(t.description) + ".");
        };
        add("What is the difference between " + backticked(a->name) + " and " + backticked(b->name) + "?",
            "They are different tools. " + summary(*a) + " " + summary(*b));
    }

    if (stats) stats->templated = out.size();
    if (!teacher) return out;

    const auto tools = catalog.all_tools();
    std::vector<std::string> replies(ownership.size());
    try {
        run_bounded(ownership.size(), 4, [&](std::size_t i) {
            ChatRequest req;
            req.temperature = 0.0;
            req.max_tokens = 256;
            req.messages.push_back({"user",
                                    "Rewrite the following question with different wording but the same "
                                    "meaning. Keep the tool name exactly as written. Reply with the "
                                    "question only.\n\n" +
                                        ownership[i].first});
            replies[i] = complete_with_retry(*teacher, req, retry);
        });
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::EndpointError) throw;
        throw Error(ErrorKind::TeacherUnavailable, std::string("teacher endpoint failed: ") + e.what());
    }

    std::size_t accepted = 0, dropped = 0;
    for (std::size_t i = 0; i < ownership.size(); ++i) {
        const ToolSpec* tool = tools[i];
        const std::string paraphrase = trim_copy(replies[i]);
        bool ok = !paraphrase.empty() && paraphrase != ownership[i].first && mentions(paraphrase, tool->name) &&
                  paraphrase.find('\n') == std::string::npos;
        for (const ToolSpec* other : tools) {
            if (ok && other != tool && mentions(paraphrase, other->name)) ok = false;
        }
        if (ok) {
            add(paraphrase, ownership[i].second);
            ++accepted;
        } else {
            ++dropped;
        }
    }
    if (dropped) std::clog << "tool-knowledge: dropped " << dropped << " teacher paraphrase(s)\n";
    if (stats) {
        stats->teacher_accepted = accepted;
        stats->teacher_dropped = dropped;
    }
    return out;
}

std::vector<SftExample> build_plan_examples(const std::vector<Scenario>& train, const ToolCatalog& catalog,
                                            const PromptAssets& assets, bool include_paraphrases) {
    std::vector<const Scenario*> ordered;
    for (const auto& s : train) ordered.push_back(&s);
    std::sort(ordered.begin(), ordered.end(), [](auto* a, auto* b) { return a->id < b->id; });

    std::vector<SftExample> out;
    for (const Scenario* s : ordered) {
        const auto findings = validate_structure(s->gold_plan, catalog);
        if (has_errors(findings)) {
            std::string detail;
            for (const auto& f : findings) {
                if (f.severity == Severity::Error) {
                    detail = "step " + std::to_string(f.step) + ": " + f.message;
                    break;
                }
            }
            throw Error(ErrorKind::InvalidGoldPlan, "scenario " + s->id + " has an invalid gold plan (" + detail + ")",
                        std::nullopt, s->id);
        }
        const std::string target = render_plan(s->gold_plan);
        out.push_back({ExampleKind::Plan, build_description_free_prompt(s->question, assets).text, target, s->id});
        if (!include_paraphrases) continue;
        for (const auto& p : s->paraphrases) {
            out.push_back({ExampleKind::Plan, build_description_free_prompt(p, assets).text, target, s->id});
        }
    }
    return out;
}

std::string render_execution_target(const Plan& plan, const ExecutionTrace& trace) {
    const int n = static_cast<int>(plan.steps.size());
    std::map<int, const TraceRecord*> by_step;
    for (const auto& rec : trace) {
        if (rec.step < 1 || rec.step > n) {
            throw Error(ErrorKind::DanglingPlaceholder,
                        "trace refers to step " + std::to_string(rec.step) + " of a " + std::to_string(n) +
                            "-step plan",
                        rec.step, placeholder_token(rec.step));
        }
        by_step[rec.step] = &rec;
    }

    std::string out;
    for (const auto& step : plan.steps) {
        Plan single;
        single.steps.push_back(step);
        std::string section = render_plan(single);
        if (auto it = by_step.find(step.index); it != by_step.end() && step.actionable()) {
            const TraceRecord& rec = *it->second;
            section += "Call " + std::to_string(step.index) + ": " + step.server + "." + step.tool + "(" +
                       dump_compact(rec.resolved_args) + ")\n";
            section += "Result " + std::to_string(step.index) + ": " + dump_compact(rec.output) + "\n";
        }
        for (int ref : placeholders_in(std::string_view(section))) {
            if (ref < 1 || ref >= step.index) {
                throw Error(ErrorKind::DanglingPlaceholder,
                            "step " + std::to_string(step.index) + " references " + placeholder_token(ref),
                            step.index, placeholder_token(ref));
            }
        }
        if (!out.empty()) out += "\n";
        out += section;
    }
    return out;
}

std::vector<SftExample> build_execution_examples(const std::vector<Scenario>& train, const PromptAssets& assets) {
    std::vector<const Scenario*> ordered;
    for (const auto& s : train) ordered.push_back(&s);
    std::sort(ordered.begin(), ordered.end(), [](auto* a, auto* b) { return a->id < b->id; });

    std::vector<SftExample> out;
    for (const Scenario* s : ordered) {
        for (const auto& trace : s->traces) {
            std::string input = build_description_free_prompt(s->question, assets).text;
            input += "\n\n";
            input += kExecutionInstruction;
            out.push_back({ExampleKind::Execution, std::move(input), render_execution_target(s->gold_plan, trace), s->id});
        }
    }
    return out;
}

std::vector<std::string> find_leaks(const std::vector<SftExample>& examples,
                                    const std::vector<Scenario>& scenarios, const SplitManifest& manifest) {
    std::vector<std::string> problems;
    std::vector<std::pair<std::string, std::string>> test_texts;
    for (const auto& s : scenarios) {
        if (!manifest.is_test(s.id)) continue;
        test_texts.emplace_back(s.id, s.question);
        for (const auto& p : s.paraphrases) test_texts.emplace_back(s.id, p);
    }
    for (std::size_t i = 0; i < examples.size(); ++i) {
        const auto& e = examples[i];
        if (e.scenario_id && !manifest.is_train(*e.scenario_id)) {
            problems.push_back("example " + std::to_string(i) + " belongs to non-train scenario " + *e.scenario_id);
        }
        for (const auto& [id, text] : test_texts) {
            if (!text.empty() && e.input.find(text) != std::string::npos) {
                problems.push_back("example " + std::to_string(i) + " contains text of test scenario " + id);
            }
        }
    }
    return problems;
}

// ---------------------------------------------------------------------------
// Configs

std::optional<DataConfig> parse_data_config(std::string_view name) {
    if (name == "A" || name == "a") return DataConfig::A;
    if (name == "B" || name == "b") return DataConfig::B;
    if (name == "C" || name == "c") return DataConfig::C;
    return std::nullopt;
}

std::string_view to_string(DataConfig config) {
    switch (config) {
        case DataConfig::A: return "A";
        case DataConfig::B: return "B";
        case DataConfig::C: return "C";
    }
    return "C";
}

ConfigSplit assemble_config(DataConfig config, const ExamplePools& pools, double eval_fraction, std::uint64_t seed) {
    if (!validate_fraction(eval_fraction)) {
        throw Error(ErrorKind::InvalidFraction,
                    "eval fraction must lie strictly between 0 and 1, got " + std::to_string(eval_fraction));
    }
    std::vector<SftExample> pool;
    auto append = [&](const std::vector<SftExample>& v) { pool.insert(pool.end(), v.begin(), v.end()); };
    switch (config) {
        case DataConfig::A: append(pools.plan); break;
        case DataConfig::B: append(pools.tool_knowledge); break;
        case DataConfig::C:
            append(pools.tool_knowledge);
            append(pools.plan);
            append(pools.execution);
            break;
    }
    if (pool.empty()) {
        throw Error(ErrorKind::EmptyPool, "config " + std::string(to_string(config)) + " has no examples");
    }
    seeded_shuffle(pool, seed);
    const auto n_eval = static_cast<std::size_t>(std::llround(static_cast<double>(pool.size()) * eval_fraction));
    const std::size_t n_train = pool.size() - n_eval;
    ConfigSplit split;
    split.train.assign(std::make_move_iterator(pool.begin()), std::make_move_iterator(pool.begin() + static_cast<std::ptrdiff_t>(n_train)));
    split.eval.assign(std::make_move_iterator(pool.begin() + static_cast<std::ptrdiff_t>(n_train)), std::make_move_iterator(pool.end()));
    return split;
}

}  // namespace toolplan

#include "toolplan/llm_client.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

#include <httplib.h>

#include "toolplan/error.hpp"

namespace toolplan {

namespace {

std::string env_or_empty(const char* name) {
    const char* v = std::getenv(name);
    return v ? std::string(v) : std::string{};
}

// Pulls the outermost {...} out of a reply that may carry fences or prose.
Json extract_json_object(std::string_view text) {
    const auto open = text.find('{');
    const auto close = text.rfind('}');
    if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
        throw Error(ErrorKind::MalformedVerdict, "judge reply has no JSON object", std::nullopt,
                    std::string(text.substr(0, 200)));
    }
    try {
        Json j = Json::parse(text.substr(open, close - open + 1));
        if (!j.is_object()) throw Error(ErrorKind::MalformedVerdict, "judge reply is not an object");
        return j;
    } catch (const Json::parse_error& e) {
        throw Error(ErrorKind::MalformedVerdict, std::string("judge reply is not valid JSON: ") + e.what(),
                    std::nullopt, std::string(text.substr(0, 200)));
    }
}

int read_score(const Json& scores, std::string_view dim) {
    auto it = scores.find(std::string(dim));
    if (it == scores.end()) {
        throw Error(ErrorKind::MalformedVerdict, "verdict is missing " + std::string(dim), std::nullopt,
                    std::string(dim));
    }
    if (it->is_number_integer()) return it->get<int>();
    if (it->is_number_float()) {
        const double v = it->get<double>();
        if (std::floor(v) == v && std::abs(v) < 1e6) return static_cast<int>(v);
    }
    throw Error(ErrorKind::MalformedVerdict, "score for " + std::string(dim) + " is not an integer",
                std::nullopt, std::string(dim));
}

std::string joined_content(const ChatRequest& request) {
    std::string all;
    for (const auto& m : request.messages) {
        all += m.content;
        all += '\n';
    }
    return all;
}

void add_source(ModelScore& score, const std::string& source, bool correct) {
    auto& s = score.by_source[source];
    ++s.total;
    ++score.overall.total;
    if (correct) {
        ++s.correct;
        ++score.overall.correct;
    }
}

Json model_score_json(const ModelScore& m) {
    Json by_source = Json::object();
    for (const auto& [src, s] : m.by_source) {
        by_source[src] = {{"correct", s.correct}, {"total", s.total}, {"accuracy", s.accuracy()}};
    }
    return Json{{"correct", m.overall.correct},
                {"total", m.overall.total},
                {"accuracy", m.overall.accuracy()},
                {"by_source", std::move(by_source)}};
}

std::optional<double> ratio(const SourceScore& ft, const SourceScore& base) {
    if (base.correct == 0) return std::nullopt;
    return ft.accuracy() / base.accuracy();
}

}  // namespace

Json ChatRequest::to_json() const {
    Json msgs = Json::array();
    for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
    return Json{{"model", model},
                {"messages", std::move(msgs)},
                {"temperature", temperature},
                {"max_tokens", max_tokens}};
}

EndpointConfig EndpointConfig::from_env() {
    EndpointConfig c;
    c.base_url = env_or_empty("JUDGE_BASE_URL");
    c.api_key = env_or_empty("JUDGE_API_KEY");
    c.model = env_or_empty("JUDGE_MODEL");
    if (c.base_url.empty()) {
        throw Error(ErrorKind::EndpointError, "JUDGE_BASE_URL is not set");
    }
    return c;
}

HttpChatEndpoint::HttpChatEndpoint(EndpointConfig config) : config_(std::move(config)) {}

std::string HttpChatEndpoint::complete(const ChatRequest& request) const {
    // Split "https://host:port/prefix" into the client origin and path prefix.
    std::string origin = config_.base_url;
    std::string prefix;
    if (auto scheme = origin.find("://"); scheme != std::string::npos) {
        if (auto slash = origin.find('/', scheme + 3); slash != std::string::npos) {
            prefix = origin.substr(slash);
            origin.resize(slash);
        }
    }
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();

    ChatRequest body = request;
    if (body.model.empty()) body.model = config_.model;

    httplib::Client client(origin);
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

    auto res = client.Post(prefix + "/chat/completions", headers, dump_compact(body.to_json()),
                           "application/json");
    if (!res) {
        throw Error(ErrorKind::EndpointError,
                    "request to " + config_.base_url + " failed: " + httplib::to_string(res.error()));
    }
    if (res->status < 200 || res->status >= 300) {
        throw Error(ErrorKind::EndpointError,
                    "endpoint returned HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 300));
    }
    try {
        const Json reply = Json::parse(res->body);
        return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::EndpointError, std::string("unexpected endpoint reply: ") + e.what());
    }
}

StubEndpoint::StubEndpoint(Responder responder) : responder_(std::move(responder)) {}

StubEndpoint StubEndpoint::from_rules(std::vector<Rule> rules) {
    return StubEndpoint([rules = std::move(rules)](const ChatRequest& request) {
        const std::string all = joined_content(request);
        for (const auto& r : rules) {
            if (r.match.empty() || all.find(r.match) != std::string::npos) return r.response;
        }
        throw Error(ErrorKind::EndpointError, "stub endpoint has no rule for this request");
    });
}

StubEndpoint StubEndpoint::load(const std::filesystem::path& path) {
    std::vector<Rule> rules;
    for (const auto& rec : read_jsonl(path)) {
        if (!rec.is_object() || !rec.contains("response")) {
            throw Error(ErrorKind::InvalidInput, path.string() + ": stub rule needs a response");
        }
        const Json& resp = rec["response"];
        rules.push_back({rec.value("match", std::string{}),
                         resp.is_string() ? resp.get<std::string>() : dump_compact(resp)});
    }
    return from_rules(std::move(rules));
}

std::string StubEndpoint::complete(const ChatRequest& request) const { return responder_(request); }

std::string complete_with_retry(const ChatEndpoint& endpoint, const ChatRequest& request,
                                const RetryPolicy& policy) {
    auto backoff = std::chrono::duration<double, std::milli>(policy.initial_backoff);
    const int attempts = std::max(1, policy.attempts);
    for (int attempt = 1;; ++attempt) {
        try {
            return endpoint.complete(request);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::EndpointError || attempt >= attempts) throw;
        }
        std::this_thread::sleep_for(backoff);
        backoff *= policy.multiplier;
    }
}

void run_bounded(std::size_t count, std::size_t concurrency, const std::function<void(std::size_t)>& task) {
    const std::size_t workers = std::min(std::max<std::size_t>(1, concurrency), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) task(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    task(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& values) {
    std::string out;
    out.reserve(tmpl.size());
    std::size_t pos = 0;
    while (pos < tmpl.size()) {
        const auto open = tmpl.find('{', pos);
        if (open == std::string_view::npos) break;
        const auto close = tmpl.find('}', open + 1);
        if (close == std::string_view::npos) break;
        auto it = values.find(std::string(tmpl.substr(open + 1, close - open - 1)));
        if (it == values.end()) {
            out.append(tmpl.substr(pos, open + 1 - pos));
            pos = open + 1;
            continue;
        }
        out.append(tmpl.substr(pos, open - pos));
        out += it->second;
        pos = close + 1;
    }
    out.append(tmpl.substr(std::min(pos, tmpl.size())));
    return out;
}

// ---------------------------------------------------------------------------

JudgeVerdict JudgeVerdict::from_scores(const std::array<int, 6>& s) {
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] < 1 || s[i] > 5) {
            throw Error(ErrorKind::OutOfRangeScore,
                        std::string(kJudgeDimensions[i]) + " score " + std::to_string(s[i]) +
                            " is outside 1..5",
                        std::nullopt, std::string(kJudgeDimensions[i]));
        }
    }
    JudgeVerdict v;
    v.correctness = s[0];
    v.server_routing = s[1];
    v.tool_selection = s[2];
    v.argument_quality = s[3];
    v.efficiency = s[4];
    v.dependency_correctness = s[5];
    int sum = 0;
    for (int x : s) sum += x;
    v.overall = static_cast<double>(sum) / 6.0;
    return v;
}

std::array<int, 6> JudgeVerdict::scores() const {
    return {correctness, server_routing, tool_selection, argument_quality, efficiency, dependency_correctness};
}

Json JudgeVerdict::to_json() const {
    Json j = Json::object();
    const auto s = scores();
    for (std::size_t i = 0; i < s.size(); ++i) j[std::string(kJudgeDimensions[i])] = s[i];
    j["overall"] = overall;
    return j;
}

JudgeVerdict parse_plan_verdict(std::string_view text) {
    Json j = extract_json_object(text);
    const Json& scores = (j.contains("scores") && j["scores"].is_object()) ? j["scores"] : j;
    std::array<int, 6> s{};
    for (std::size_t i = 0; i < kJudgeDimensions.size(); ++i) s[i] = read_score(scores, kJudgeDimensions[i]);
    return JudgeVerdict::from_scores(s);
}

JudgePrompts JudgePrompts::load(const std::filesystem::path& dir) {
    return JudgePrompts{read_text_file(dir / "judge_plan.txt"), read_text_file(dir / "judge_mcq.txt")};
}

ChatRequest make_plan_judge_request(std::string_view question, const Plan& gold, const Plan& candidate,
                                    const ToolCatalog& catalog, const JudgePrompts& prompts,
                                    const JudgeOptions& options) {
    const std::string candidate_text = candidate.steps.empty()
                                           ? (candidate.source_text.empty() ? "(empty plan)" : candidate.source_text)
                                           : render_plan(candidate);
    ChatRequest req;
    req.model = options.model;
    req.temperature = options.temperature;
    req.max_tokens = options.plan_max_tokens;
    req.messages.push_back({"user", render_template(prompts.plan_template,
                                                    {{"question", std::string(question)},
                                                     {"gold_plan", render_plan(gold)},
                                                     {"candidate_plan", candidate_text},
                                                     {"tool_inventory", serialize_catalog(catalog)}})});
    return req;
}

JudgeVerdict judge_plan(std::string_view question, const Plan& gold, const Plan& candidate,
                        const ToolCatalog& catalog, const ChatEndpoint& endpoint,
                        const JudgePrompts& prompts, const JudgeOptions& options) {
    const auto request = make_plan_judge_request(question, gold, candidate, catalog, prompts, options);
    return parse_plan_verdict(complete_with_retry(endpoint, request, options.retry));
}

// ---------------------------------------------------------------------------

McqItem McqItem::from_json(const Json& j) {
    try {
        McqItem item;
        item.id = j.at("id").get<std::string>();
        item.source = j.at("source").get<std::string>();
        item.question = j.at("question").get<std::string>();
        const auto& choices = j.at("choices");
        if (!choices.is_array() || choices.size() != 4) {
            throw Error(ErrorKind::InvalidInput, "item " + item.id + " must have 4 choices", std::nullopt,
                        item.id);
        }
        for (std::size_t i = 0; i < 4; ++i) item.choices[i] = choices[i].get<std::string>();
        const auto answer = j.at("answer").get<std::string>();
        if (answer.size() != 1 || answer[0] < 'A' || answer[0] > 'D') {
            throw Error(ErrorKind::InvalidInput, "item " + item.id + " answer must be A-D", std::nullopt,
                        item.id);
        }
        item.answer = answer[0];
        return item;
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::InvalidInput, std::string("malformed MCQ item: ") + e.what());
    }
}

Json McqItem::to_json() const {
    return Json{{"id", id},
                {"source", source},
                {"question", question},
                {"choices", Json(choices)},
                {"answer", std::string(1, answer)}};
}

std::optional<std::string> composition_mismatch(const std::vector<McqItem>& items) {
    std::map<std::string, std::size_t> counts;
    for (const auto& item : items) ++counts[item.source];
    if (counts == kRetentionComposition) return std::nullopt;
    std::string msg = "expected 40 MMLU + 30 ARC + 30 HellaSwag, got";
    for (const auto& [src, n] : counts) msg += " " + src + "=" + std::to_string(n);
    return msg;
}

bool parse_mcq_verdict(std::string_view text) {
    Json j = extract_json_object(text);
    auto it = j.find("correct");
    if (it == j.end() || !it->is_boolean()) {
        throw Error(ErrorKind::MalformedVerdict, "MCQ verdict needs a boolean 'correct' field");
    }
    return it->get<bool>();
}

ChatRequest make_mcq_judge_request(const McqItem& item, std::string_view model_response,
                                   const JudgePrompts& prompts, const JudgeOptions& options) {
    std::string choices;
    for (std::size_t i = 0; i < item.choices.size(); ++i) {
        choices += std::string(1, static_cast<char>('A' + i)) + ") " + item.choices[i] + "\n";
    }
    ChatRequest req;
    req.model = options.model;
    req.temperature = options.temperature;
    req.max_tokens = options.mcq_max_tokens;
    req.messages.push_back({"user", render_template(prompts.mcq_template,
                                                    {{"question", item.question},
                                                     {"choices", choices},
                                                     {"answer", std::string(1, item.answer)},
                                                     {"response", std::string(model_response)}})});
    return req;
}

McqGrade judge_mcq(const McqItem& item, std::string_view model_response, const ChatEndpoint& endpoint,
                   const JudgePrompts& prompts, const JudgeOptions& options) {
    const auto request = make_mcq_judge_request(item, model_response, prompts, options);
    std::string reply = complete_with_retry(endpoint, request, options.retry);
    const bool correct = parse_mcq_verdict(reply);
    return McqGrade{correct, std::move(reply)};
}

std::map<std::string, std::string> load_responses(const std::filesystem::path& path, int token_cap) {
    std::map<std::string, std::string> out;
    for (const auto& rec : read_jsonl(path)) {
        if (!rec.is_object() || !rec.contains("item_id") || !rec.contains("text")) {
            throw Error(ErrorKind::InvalidInput, path.string() + ": response needs item_id and text");
        }
        const auto id = rec["item_id"].get<std::string>();
        if (auto it = rec.find("generated_tokens"); it != rec.end() && it->is_number() &&
                                                     it->get<double>() > token_cap) {
            throw Error(ErrorKind::InvalidInput,
                        "response for " + id + " exceeds the " + std::to_string(token_cap) +
                            "-token generation cap",
                        std::nullopt, id);
        }
        out[id] = rec["text"].get<std::string>();
    }
    return out;
}

std::map<std::string, bool> load_grades(const std::filesystem::path& path) {
    std::map<std::string, bool> out;
    for (const auto& rec : read_jsonl(path)) {
        if (!rec.is_object() || !rec.contains("item_id") || !rec.contains("correct") ||
            !rec["correct"].is_boolean()) {
            throw Error(ErrorKind::InvalidInput, path.string() + ": grade needs item_id and boolean correct");
        }
        out[rec["item_id"].get<std::string>()] = rec["correct"].get<bool>();
    }
    return out;
}

std::vector<McqItem> load_mcq_items(const std::filesystem::path& path) {
    std::vector<McqItem> items;
    std::set<std::string> ids;
    for (const auto& rec : read_jsonl(path)) {
        items.push_back(McqItem::from_json(rec));
        if (!ids.insert(items.back().id).second) {
            throw Error(ErrorKind::InvalidInput, "duplicate MCQ item " + items.back().id, std::nullopt,
                        items.back().id);
        }
    }
    return items;
}

Json RetentionReport::to_json() const {
    auto opt = [](const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); };
    Json by_source = Json::object();
    for (const auto& [src, r] : retention_by_source) by_source[src] = opt(r);
    return Json{{"base", model_score_json(base)},
                {"finetuned", model_score_json(finetuned)},
                {"retention", opt(retention)},
                {"retention_by_source", std::move(by_source)},
                {"forgotten_count", forgotten.size()},
                {"learned_count", learned.size()},
                {"forgotten", Json(forgotten)},
                {"learned", Json(learned)}};
}

RetentionReport compute_retention(const std::vector<McqItem>& items,
                                  const std::map<std::string, bool>& base_grades,
                                  const std::map<std::string, bool>& finetuned_grades) {
    RetentionReport report;
    for (const auto& item : items) {
        auto b = base_grades.find(item.id);
        auto f = finetuned_grades.find(item.id);
        if (b == base_grades.end() || f == finetuned_grades.end()) {
            throw Error(ErrorKind::MissingResponse,
                        std::string("no ") + (b == base_grades.end() ? "base" : "fine-tuned") +
                            " grade for item " + item.id,
                        std::nullopt, item.id);
        }
        add_source(report.base, item.source, b->second);
        add_source(report.finetuned, item.source, f->second);
        if (b->second && !f->second) report.forgotten.push_back(item.id);
        if (!b->second && f->second) report.learned.push_back(item.id);
    }
    std::sort(report.forgotten.begin(), report.forgotten.end());
    std::sort(report.learned.begin(), report.learned.end());
    report.retention = ratio(report.finetuned.overall, report.base.overall);
    for (const auto& [src, base_score] : report.base.by_source) {
        report.retention_by_source[src] = ratio(report.finetuned.by_source[src], base_score);
    }
    return report;
}

RetentionReport run_retention(const std::vector<McqItem>& items,
                              const std::map<std::string, std::string>& base_responses,
                              const std::map<std::string, std::string>& finetuned_responses,
                              const ChatEndpoint& endpoint, const JudgePrompts& prompts,
                              const JudgeOptions& options, std::size_t concurrency) {
    for (const auto* responses : {&base_responses, &finetuned_responses}) {
        for (const auto& item : items) {
            if (!responses->count(item.id)) {
                throw Error(ErrorKind::MissingResponse,
                            std::string("no ") + (responses == &base_responses ? "base" : "fine-tuned") +
                                " response for item " + item.id,
                            std::nullopt, item.id);
            }
        }
    }
    const std::size_t n = items.size();
    std::vector<char> base_ok(n), ft_ok(n);
    run_bounded(2 * n, concurrency, [&](std::size_t k) {
        const bool is_base = k < n;
        const McqItem& item = items[is_base ? k : k - n];
        const auto& text = (is_base ? base_responses : finetuned_responses).at(item.id);
        const bool correct = judge_mcq(item, text, endpoint, prompts, options).correct;
        (is_base ? base_ok : ft_ok)[is_base ? k : k - n] = correct;
    });
    std::map<std::string, bool> base_grades, ft_grades;
    for (std::size_t i = 0; i < n; ++i) {
        base_grades[items[i].id] = base_ok[i] != 0;
        ft_grades[items[i].id] = ft_ok[i] != 0;
    }
    return compute_retention(items, base_grades, ft_grades);
}

}  // namespace toolplan

#pragma once

#include <array>
#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "toolplan/catalog.hpp"
#include "toolplan/io.hpp"
#include "toolplan/plan.hpp"

namespace toolplan {

// ---------------------------------------------------------------------------
// Chat endpoint
// ---------------------------------------------------------------------------

struct ChatMessage {
    std::string role;
    std::string content;
};

struct ChatRequest {
    std::string model;
    std::vector<ChatMessage> messages;
    double temperature = 0.0;
    int max_tokens = 1024;

    /// The chat-completions request body.
    Json to_json() const;
};

/// Anything that turns a chat request into assistant text. Implementations
/// must be callable from several threads at once. Failures raise
/// Error{EndpointError}.
class ChatEndpoint {
public:
    virtual ~ChatEndpoint() = default;
    virtual std::string complete(const ChatRequest& request) const = 0;
};

struct EndpointConfig {
    std::string base_url;
    std::string api_key;
    std::string model;
    std::chrono::seconds timeout{120};

    /// JUDGE_BASE_URL, JUDGE_API_KEY, JUDGE_MODEL. Throws EndpointError when
    /// the base URL is unset.
    static EndpointConfig from_env();
};

/// POSTs to {base_url}/chat/completions and returns
/// choices[0].message.content.
class HttpChatEndpoint final : public ChatEndpoint {
public:
    explicit HttpChatEndpoint(EndpointConfig config);
    std::string complete(const ChatRequest& request) const override;
    const EndpointConfig& config() const noexcept { return config_; }

private:
    EndpointConfig config_;
};

/// Offline endpoint for tests and dry runs.
class StubEndpoint final : public ChatEndpoint {
public:
    using Responder = std::function<std::string(const ChatRequest&)>;

    explicit StubEndpoint(Responder responder);

    /// Answers with the response of the first rule whose `match` occurs in
    /// the concatenated message contents; an empty match always applies.
    struct Rule {
        std::string match;
        std::string response;
    };
    static StubEndpoint from_rules(std::vector<Rule> rules);

    /// JSONL of {"match": str, "response": str | object}.
    static StubEndpoint load(const std::filesystem::path& path);

    std::string complete(const ChatRequest& request) const override;

private:
    Responder responder_;
};

struct RetryPolicy {
    int attempts = 3;
    std::chrono::milliseconds initial_backoff{1000};
    double multiplier = 2.0;
};

/// Retries EndpointError with exponential backoff; rethrows the last one.
std::string complete_with_retry(const ChatEndpoint& endpoint, const ChatRequest& request,
                                const RetryPolicy& policy);

/// Runs `task(i)` for i in [0, count) on at most `concurrency` threads.
/// Results keep index order; the first exception is rethrown after all
/// workers finish.
void run_bounded(std::size_t count, std::size_t concurrency,
                 const std::function<void(std::size_t)>& task);

/// Replaces `{name}` tokens in one pass; unknown tokens are left alone.
std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& values);

// ---------------------------------------------------------------------------
// Plan-quality judge
// ---------------------------------------------------------------------------

inline constexpr std::array<std::string_view, 6> kJudgeDimensions = {
    "correctness",       "server_routing", "tool_selection",
    "argument_quality",  "efficiency",     "dependency_correctness",
};

struct JudgeVerdict {
    int correctness = 1;
    int server_routing = 1;
    int tool_selection = 1;
    int argument_quality = 1;
    int efficiency = 1;
    int dependency_correctness = 1;
    double overall = 1.0;

    /// Scores in kJudgeDimensions order. Throws OutOfRangeScore.
    static JudgeVerdict from_scores(const std::array<int, 6>& scores);
    std::array<int, 6> scores() const;
    Json to_json() const;
};

/// Reads the judge's JSON object (code fences and surrounding prose are
/// tolerated). Throws MalformedVerdict or OutOfRangeScore.
JudgeVerdict parse_plan_verdict(std::string_view text);

struct JudgePrompts {
    std::string plan_template;
    std::string mcq_template;

    /// judge_plan.txt and judge_mcq.txt.
    static JudgePrompts load(const std::filesystem::path& dir);
};

struct JudgeOptions {
    std::string model;
    RetryPolicy retry;
    int plan_max_tokens = 8192;
    int mcq_max_tokens = 1024;
    double temperature = 0.0;
};

ChatRequest make_plan_judge_request(std::string_view question, const Plan& gold, const Plan& candidate,
                                    const ToolCatalog& catalog, const JudgePrompts& prompts,
                                    const JudgeOptions& options);

JudgeVerdict judge_plan(std::string_view question, const Plan& gold, const Plan& candidate,
                        const ToolCatalog& catalog, const ChatEndpoint& endpoint,
                        const JudgePrompts& prompts, const JudgeOptions& options = {});

// ---------------------------------------------------------------------------
// MCQ retention
// ---------------------------------------------------------------------------

struct McqItem {
    std::string id;
    std::string source;  // MMLU, ARC or HellaSwag
    std::string question;
    std::array<std::string, 4> choices;
    char answer = 'A';

    static McqItem from_json(const Json& j);
    Json to_json() const;
};

struct McqGrade {
    bool correct = false;
    std::string raw_text;
};

/// Expected benchmark mix: 40 MMLU + 30 ARC + 30 HellaSwag.
inline const std::map<std::string, std::size_t> kRetentionComposition = {
    {"MMLU", 40}, {"ARC", 30}, {"HellaSwag", 30}};

/// Empty when `items` match kRetentionComposition, else a description of the
/// mismatch.
std::optional<std::string> composition_mismatch(const std::vector<McqItem>& items);

/// Parses {"correct": bool}. Throws MalformedVerdict.
bool parse_mcq_verdict(std::string_view text);

ChatRequest make_mcq_judge_request(const McqItem& item, std::string_view model_response,
                                   const JudgePrompts& prompts, const JudgeOptions& options);

McqGrade judge_mcq(const McqItem& item, std::string_view model_response, const ChatEndpoint& endpoint,
                   const JudgePrompts& prompts, const JudgeOptions& options = {});

inline constexpr int kResponseTokenCap = 512;

/// JSONL {item_id, text, generated_tokens?}. Rejects records whose
/// generated_tokens exceed `token_cap` (InvalidInput).
std::map<std::string, std::string> load_responses(const std::filesystem::path& path,
                                                  int token_cap = kResponseTokenCap);

/// JSONL {item_id, correct}.
std::map<std::string, bool> load_grades(const std::filesystem::path& path);

std::vector<McqItem> load_mcq_items(const std::filesystem::path& path);

struct SourceScore {
    std::size_t correct = 0;
    std::size_t total = 0;
    double accuracy() const { return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0; }
};

struct ModelScore {
    SourceScore overall;
    std::map<std::string, SourceScore> by_source;
};

struct RetentionReport {
    ModelScore base;
    ModelScore finetuned;
    /// finetuned accuracy / base accuracy; nullopt when base accuracy is 0.
    std::optional<double> retention;
    std::map<std::string, std::optional<double>> retention_by_source;
    /// Items the base model answered correctly and the fine-tuned model did not.
    std::vector<std::string> forgotten;
    /// The reverse.
    std::vector<std::string> learned;

    Json to_json() const;
};

/// Bookkeeping over per-item grades. Throws MissingResponse naming the first
/// item without a grade.
RetentionReport compute_retention(const std::vector<McqItem>& items,
                                  const std::map<std::string, bool>& base_grades,
                                  const std::map<std::string, bool>& finetuned_grades);

/// Grades both response sets with the MCQ judge, then computes retention.
RetentionReport run_retention(const std::vector<McqItem>& items,
                              const std::map<std::string, std::string>& base_responses,
                              const std::map<std::string, std::string>& finetuned_responses,
                              const ChatEndpoint& endpoint, const JudgePrompts& prompts,
                              const JudgeOptions& options = {}, std::size_t concurrency = 4);

}  // namespace toolplan

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "toolplan/catalog.hpp"
#include "toolplan/executor.hpp"
#include "toolplan/llm_client.hpp"
#include "toolplan/plan.hpp"
#include "toolplan/prompts.hpp"

namespace toolplan {

using ExecutionTrace = std::vector<TraceRecord>;

struct Scenario {
    std::string id;
    std::string question;
    Plan gold_plan;
    std::vector<std::string> paraphrases;
    std::vector<ExecutionTrace> traces;

    /// {"id", "question", "gold_plan": plan text, "paraphrases": [...],
    ///  "traces": [[trace record, ...], ...]}
    static Scenario from_json(const Json& j);
    Json to_json() const;
};

/// Scenarios sorted by id. Throws InvalidInput on a duplicate id and
/// InvalidGoldPlan (naming the scenario) when a gold plan does not parse.
std::vector<Scenario> load_corpus(const std::filesystem::path& path);
std::string corpus_to_jsonl(const std::vector<Scenario>& scenarios);

enum class ExampleKind { ToolKnowledge, Plan, Execution };

std::string_view to_string(ExampleKind kind);
std::optional<ExampleKind> parse_example_kind(std::string_view name);

struct SftExample {
    ExampleKind kind = ExampleKind::Plan;
    std::string input;
    std::string target;
    std::optional<std::string> scenario_id;

    Json to_json() const;
    static SftExample from_json(const Json& j);
    bool operator==(const SftExample&) const = default;
};

/// Stratum of a scenario: dominant server, sorted tool-pair set and step
/// count bucket.
struct PatternKey {
    std::string dominant_server;
    std::vector<ToolPair> pairs;
    std::string step_bucket;

    std::string to_string() const;
    bool operator==(const PatternKey&) const = default;
};

/// Bucket label for a step count: "1".."4" or "5+".
std::string step_bucket(std::size_t steps);

/// Throws NoActionableSteps.
PatternKey assign_pattern(const Scenario& scenario);

struct SplitManifest {
    std::vector<std::string> train_ids;
    std::vector<std::string> test_ids;
    std::uint64_t seed = 0;
    double test_fraction = 0.2;
    std::map<std::string, std::string> pattern_map;

    bool is_train(std::string_view id) const;
    bool is_test(std::string_view id) const;
    Json to_json() const;
    static SplitManifest from_json(const Json& j);
};

/// Fisher-Yates driven directly by mt19937_64, so a seed gives the same
/// order on every standard library (std::shuffle does not promise that).
template <class T>
void shuffle_with(std::vector<T>& items, std::mt19937_64& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        // Rejection sampling keeps j uniform in [0, i).
        const std::uint64_t bound = i;
        const std::uint64_t limit = std::mt19937_64::max() - (std::mt19937_64::max() % bound);
        std::uint64_t draw = rng();
        while (draw >= limit) draw = rng();
        std::swap(items[i - 1], items[static_cast<std::size_t>(draw % bound)]);
    }
}

template <class T>
void seeded_shuffle(std::vector<T>& items, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    shuffle_with(items, rng);
}

/// Groups scenarios by pattern, shuffles each group, and allocates
/// round(N * test_fraction) test slots by largest remainder. Throws
/// InvalidFraction or InvalidInput (no scenarios).
SplitManifest stratified_split(const std::vector<Scenario>& scenarios, double test_fraction,
                               std::uint64_t seed);

/// Scenarios whose id lies on the requested side of the manifest, in id order.
std::vector<Scenario> select_split(const std::vector<Scenario>& scenarios, const SplitManifest& manifest,
                                   bool train);

struct ToolKnowledgeStats {
    std::size_t templated = 0;
    std::size_t teacher_accepted = 0;
    std::size_t teacher_dropped = 0;
};

/// Template examples for ownership, argument schemas, server listings and
/// near-miss discrimination. With a teacher, each ownership question is
/// also paraphrased; paraphrases that do not name exactly the tool in
/// question are dropped and counted. Throws TeacherUnavailable.
std::vector<SftExample> build_tool_knowledge_examples(const ToolCatalog& catalog,
                                                      const ChatEndpoint* teacher = nullptr,
                                                      ToolKnowledgeStats* stats = nullptr,
                                                      const RetryPolicy& retry = {});

/// One example per question and (optionally) paraphrase; input is the
/// description-free prompt, target the rendered gold plan. Throws
/// InvalidGoldPlan naming the scenario.
std::vector<SftExample> build_plan_examples(const std::vector<Scenario>& train,
                                            const ToolCatalog& catalog, const PromptAssets& assets,
                                            bool include_paraphrases);

/// Target for one trace: each rendered step followed by its trace lines.
/// Throws DanglingPlaceholder.
std::string render_execution_target(const Plan& plan, const ExecutionTrace& trace);

/// One example per trace; scenarios without traces contribute nothing.
std::vector<SftExample> build_execution_examples(const std::vector<Scenario>& train,
                                                 const PromptAssets& assets);

/// Leakage audit: examples tagged with a non-train scenario, and test
/// questions or paraphrases occurring as substrings of any input. Empty
/// means clean.
std::vector<std::string> find_leaks(const std::vector<SftExample>& examples,
                                    const std::vector<Scenario>& scenarios, const SplitManifest& manifest);

enum class DataConfig { A, B, C };

std::optional<DataConfig> parse_data_config(std::string_view name);
std::string_view to_string(DataConfig config);

struct ExamplePools {
    std::vector<SftExample> tool_knowledge;
    std::vector<SftExample> plan;
    std::vector<SftExample> execution;
};

struct ConfigSplit {
    std::vector<SftExample> train;
    std::vector<SftExample> eval;
};

/// A = plan pool, B = tool pool, C = all pools. Shuffled with `seed`, then
/// the first N - round(N * eval_fraction) go to train. Throws EmptyPool or
/// InvalidFraction.
ConfigSplit assemble_config(DataConfig config, const ExamplePools& pools, double eval_fraction,
                            std::uint64_t seed);

}  // namespace toolplan

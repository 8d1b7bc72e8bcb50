#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "toolplan/catalog.hpp"
#include "toolplan/io.hpp"

namespace toolplan {

enum class PromptCondition { Informed, DescriptionFree };

std::string_view to_string(PromptCondition condition);

/// Token counting strategy. The default counts ceil(chars / 4).
class Tokenizer {
public:
    virtual ~Tokenizer() = default;
    virtual std::size_t count(std::string_view text) const = 0;
};

class CharHeuristicTokenizer final : public Tokenizer {
public:
    std::size_t count(std::string_view text) const override;
};

std::size_t estimate_tokens(std::string_view text);

/// Fixed prompt texts shipped under data/prompts.
struct PromptAssets {
    std::string preamble;
    std::string output_format;

    /// Reads preamble.txt and output_format.txt; trailing newlines trimmed.
    static PromptAssets load(const std::filesystem::path& dir);
};

/// Repo data directory baked in at configure time.
std::filesystem::path default_data_dir();
std::filesystem::path default_prompt_dir();

struct PromptSection {
    std::string name;
    std::string text;
    std::size_t token_estimate = 0;
};

/// `text` is the sections joined by a blank line; `token_estimate` is the
/// sum of the per-section estimates.
struct PromptBundle {
    PromptCondition condition = PromptCondition::Informed;
    std::string text;
    std::size_t token_estimate = 0;
    std::vector<PromptSection> sections;

    Json to_json() const;
};

inline constexpr std::string_view kSectionPreamble = "preamble";
inline constexpr std::string_view kSectionCatalog = "catalog";
inline constexpr std::string_view kSectionOutputFormat = "output_format";
inline constexpr std::string_view kSectionQuery = "query";

/// Throws EmptyQuery.
PromptBundle build_informed_prompt(std::string_view query, const ToolCatalog& catalog,
                                   const PromptAssets& assets, const Tokenizer& tokenizer);
PromptBundle build_informed_prompt(std::string_view query, const ToolCatalog& catalog,
                                   const PromptAssets& assets);

/// Throws EmptyQuery.
PromptBundle build_description_free_prompt(std::string_view query, const PromptAssets& assets,
                                           const Tokenizer& tokenizer);
PromptBundle build_description_free_prompt(std::string_view query, const PromptAssets& assets);

/// 1 - free / informed. Throws ZeroInformedTokens.
double reduction_ratio(std::size_t informed_tokens, std::size_t free_tokens);
double reduction_ratio(const PromptBundle& informed, const PromptBundle& free);

}  // namespace toolplan

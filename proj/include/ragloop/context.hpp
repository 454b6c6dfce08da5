#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ragloop/backend.hpp"
#include "ragloop/document.hpp"

namespace ragloop {

/// Sentinel the extractor emits when it finds nothing and has no prior cache.
inline constexpr std::string_view kNoHelpfulInformation = "No helpful information found";

/// Matches the sentinel case-insensitively after trimming.
bool is_no_information_sentinel(std::string_view text);

/// Append-only extracted-information text persisting across the turns of one
/// episode. revision increments exactly when content changes; history keeps
/// one (turn_index, content) snapshot per commit.
struct MemoryCache {
    std::string episode_id;
    std::string content;
    int revision = 0;
    std::vector<std::pair<int, std::string>> history;

    /// True when the cache holds no usable information: empty content or the
    /// no-information sentinel.
    bool semantically_empty() const;
};

struct ExtractionOutcome {
    std::string new_content;
    bool changed = false;
    std::optional<std::string> violation;
    TokenUsage usage;
};

/// What to do when the extractor drops previously cached content. Real LLMs
/// paraphrase, so Warn only logs; Reject keeps the previous cache.
enum class CachePolicy { Warn, Reject };

std::string_view cache_policy_name(CachePolicy policy);

/// Violation diagnostic when previous content is non-empty, not the sentinel,
/// and not contained in new_content after whitespace normalization.
std::optional<std::string> validate_monotonicity(std::string_view previous,
                                                 std::string_view new_content);

/// Applies an extraction outcome: content is replaced (unless the policy is
/// Reject and the outcome carries a violation), revision bumps iff the
/// resulting content differs, and a snapshot is appended to history.
[[nodiscard]] MemoryCache commit(MemoryCache cache, const ExtractionOutcome& outcome,
                                 int turn_index, CachePolicy policy = CachePolicy::Warn);

struct ContextualizerOptions {
    std::string model_id = "gpt-4.1-mini";
    int max_new_tokens = 1024;
    double temperature = 0.0;
    std::optional<long> seed;
};

/// Distills question-relevant facts from newly retrieved documents into the
/// memory cache by prompting an external LLM with the extractor template.
/// The extractor sees only the current turn's documents plus the previous
/// cache, never the whole transcript.
class Contextualizer {
public:
    Contextualizer(LlmClient& client, const trace::TemplateSet& templates,
                   ContextualizerOptions options = {});

    /// Renders the extractor template ({question}, {information} = rendered
    /// document block, {prev_cache} = cache content), calls the backend, and
    /// takes the first <information> block of the completion as new_content.
    /// With no documents the cache is returned unchanged without a call.
    /// A completion without an <information> block is retried once, then the
    /// previous cache content is kept with the violation noted.
    ExtractionOutcome contextualize(const std::string& question,
                                    std::span<const Document> new_documents,
                                    const MemoryCache& cache);

private:
    LlmClient& client_;
    const trace::TemplateSet& templates_;
    ContextualizerOptions options_;
};

}  // namespace ragloop

#include "ragloop/context.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "ragloop/trace.hpp"

namespace ragloop {

namespace {

std::string normalize_whitespace(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool in_space = true;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!in_space && !out.empty()) out.push_back(' ');
            in_space = true;
        } else {
            out.push_back(c);
            in_space = false;
        }
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

std::string lower_copy(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

}  // namespace

bool is_no_information_sentinel(std::string_view text) {
    std::string trimmed = trace::trim(text);
    if (!trimmed.empty() && trimmed.back() == '.') trimmed.pop_back();
    return lower_copy(trimmed) == lower_copy(kNoHelpfulInformation);
}

bool MemoryCache::semantically_empty() const {
    return trace::trim(content).empty() || is_no_information_sentinel(content);
}

std::string_view cache_policy_name(CachePolicy policy) {
    switch (policy) {
        case CachePolicy::Warn: return "warn";
        case CachePolicy::Reject: return "reject";
    }
    return "warn";
}

std::optional<std::string> validate_monotonicity(std::string_view previous,
                                                 std::string_view new_content) {
    std::string prev_trimmed = trace::trim(previous);
    if (prev_trimmed.empty() || is_no_information_sentinel(previous)) return std::nullopt;
    std::string prev_norm = normalize_whitespace(previous);
    std::string next_norm = normalize_whitespace(new_content);
    if (next_norm.find(prev_norm) != std::string::npos) return std::nullopt;
    std::ostringstream msg;
    msg << "previous cache content is not contained in the new content"
        << " (previous " << prev_norm.size() << " chars, new " << next_norm.size() << " chars)";
    return msg.str();
}

MemoryCache commit(MemoryCache cache, const ExtractionOutcome& outcome, int turn_index,
                   CachePolicy policy) {
    bool rejected = outcome.violation.has_value() && policy == CachePolicy::Reject;
    std::string next = rejected ? cache.content : outcome.new_content;
    if (next != cache.content) {
        cache.content = std::move(next);
        ++cache.revision;
    }
    cache.history.emplace_back(turn_index, cache.content);
    return cache;
}

Contextualizer::Contextualizer(LlmClient& client, const trace::TemplateSet& templates,
                               ContextualizerOptions options)
    : client_(client), templates_(templates), options_(std::move(options)) {}

ExtractionOutcome Contextualizer::contextualize(const std::string& question,
                                                std::span<const Document> new_documents,
                                                const MemoryCache& cache) {
    ExtractionOutcome outcome;
    outcome.new_content = cache.content;
    if (new_documents.empty()) return outcome;

    std::string prev = trace::trim(cache.content);
    if (prev.empty()) prev = std::string(kNoHelpfulInformation);

    trace::TemplateSet::Bindings bindings{
        {"question", question},
        {"information", trace::render_information_block(new_documents)},
        {"prev_cache", prev},
    };
    std::string prompt = templates_.render(trace::TemplateId::Extractor, bindings);

    GenerationRequest request;
    request.model_id = options_.model_id;
    request.prompt = prompt;
    request.stop = {std::string(trace::close_tag(trace::TagKind::Information))};
    request.max_new_tokens = options_.max_new_tokens;
    request.temperature = options_.temperature;
    request.seed = options_.seed;

    std::optional<trace::TagBlock> block;
    for (int attempt = 0; attempt < 2 && !block; ++attempt) {
        GenerationResult result = client_.generate(request);
        outcome.usage += result.usage;
        std::string text = result.text;
        if (result.stop_reason == StopReason::StopSequence)
            text += trace::close_tag(trace::TagKind::Information);
        block = trace::first_block(text, trace::TagKind::Information);
    }
    if (!block) {
        outcome.violation = "extractor reply had no information block after one retry";
        return outcome;
    }

    outcome.new_content = block->content;
    if (is_no_information_sentinel(outcome.new_content) && !cache.semantically_empty()) {
        outcome.violation = "extractor replaced a non-empty cache with the empty sentinel";
        outcome.changed = outcome.new_content != cache.content;
        return outcome;
    }
    outcome.violation = validate_monotonicity(cache.content, outcome.new_content);
    outcome.changed = outcome.new_content != cache.content;
    return outcome;
}

}  // namespace ragloop

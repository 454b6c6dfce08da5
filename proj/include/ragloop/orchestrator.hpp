#pragma once

#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ragloop/backend.hpp"
#include "ragloop/context.hpp"
#include "ragloop/dedup.hpp"
#include "ragloop/document.hpp"
#include "ragloop/retriever.hpp"
#include "ragloop/trace.hpp"

namespace ragloop {

// ---------------------------------------------------------------------------
// The reason-search-answer loop. The model alternates free-form <think> text
// with <search> queries until it emits <answer>; each executed search feeds
// retrieved documents back into the transcript. The pipeline mode decides
// what the model gets to see from each retrieval.
// ---------------------------------------------------------------------------

enum class PipelineMode {
    Baseline,  // inject the top-k documents as-is
    Dedup,     // filter out documents shown in earlier turns before taking k
    Context,   // inject raw documents plus an LLM-distilled memory cache
    Hybrid,    // dedup first, then distill the survivors into the cache
};

std::string_view mode_name(PipelineMode mode);
PipelineMode mode_from_name(std::string_view name);

struct EpisodeConfig {
    PipelineMode mode = PipelineMode::Baseline;
    int k = 3;
    int pool_size = 25;
    int max_turns = 4;  // executed-search cap
    int max_new_tokens = 4096;
    double temperature = 0.0;
    std::optional<long> seed;
    CachePolicy cache_policy = CachePolicy::Warn;
    std::string reasoner_model;
    std::string extractor_model = "gpt-4.1-mini";
    int malformed_retries = 0;
    bool forced_answer_on_cap = true;
    // Hybrid normally distills the dedup survivors; this flag feeds the
    // extractor the unfiltered top-k instead.
    bool hybrid_context_raw = false;

    void validate() const;
};

/// One model generation and, when the action was an executed search, the
/// retrieval that answered it.
struct TurnRecord {
    int index = 0;
    std::string think;  // first <think> block of the generated segment
    trace::AgentAction action;
    bool executed = false;  // true when a search ran and documents came back
    std::vector<Document> raw_retrieval;    // top-k before any filtering
    std::vector<Document> shown_documents;  // what the injection contained
    std::string cache_snapshot;   // memory cache after this turn (context/hybrid)
    std::string cache_violation;  // extractor monotonicity diagnostic, if any
    int skipped_duplicates = 0;
    int new_document_count = 0;  // shown documents never shown before
    bool pool_exhausted = false;
};

enum class Termination {
    Answered,
    TurnCapReached,
    MalformedOutput,
    BackendFailure,
};

std::string_view termination_name(Termination t);
Termination termination_from_name(std::string_view name);

struct Episode {
    std::string episode_id;
    std::string qid;
    std::string question;
    std::vector<std::string> gold_answers;
    PipelineMode mode = PipelineMode::Baseline;
    std::vector<TurnRecord> turns;
    std::optional<std::string> final_answer;  // present iff termination == Answered
    Termination termination = Termination::BackendFailure;
    int retrieval_count = 0;  // executed searches
    TokenUsage reasoner_usage;
    TokenUsage extractor_usage;
    std::string transcript;  // full prompt + generations + injections
    std::string error;       // diagnostic when termination == BackendFailure
};

/// Stable content id: same (dataset, question, mode, seed) resumes to the
/// same episode.
std::string make_episode_id(std::string_view dataset_id, std::string_view qid,
                            PipelineMode mode, long seed);

struct EpisodeRuntime {
    LlmClient& reasoner;
    Retriever& retriever;
    Contextualizer* extractor = nullptr;  // required for Context and Hybrid
    const trace::TemplateSet& templates;
};

/// Runs one question through the loop until an answer, the turn cap, a
/// malformed generation, or a backend failure. Transport-level failures are
/// captured in the episode rather than thrown; scripting and configuration
/// errors propagate.
Episode run_episode(EpisodeRuntime& runtime, const EpisodeConfig& config,
                    const std::string& qid, const std::string& question,
                    std::vector<std::string> gold_answers,
                    std::string_view dataset_id = "");

// ---------------------------------------------------------------------------
// Pieces of the loop, exposed for direct testing
// ---------------------------------------------------------------------------

/// The text block appended to the transcript after an executed search.
/// Baseline/dedup wrap the documents in <information>; context/hybrid wrap
/// them in <retrieval> followed by the memory cache in <information>. Empty
/// document sets render as "No new documents found."; an empty cache renders
/// as the no-information sentinel.
std::string build_injection(PipelineMode mode, std::span<const Document> shown,
                            std::string_view cache_content);

/// Backends strip a matched stop sequence from the returned text; this puts
/// the implied close tag back so the tag grammar stays parseable.
std::string repair_stopped_text(std::string text, StopReason reason);

/// How many of the documents carry an id not in ever_shown.
int count_new_documents(std::span<const Document> documents,
                        const std::set<std::string>& ever_shown);

// ---------------------------------------------------------------------------
// Serialization (keys sorted, bit-stable for fixed inputs)
// ---------------------------------------------------------------------------

nlohmann::json document_to_json(const Document& doc);
Document document_from_json(const nlohmann::json& j);

nlohmann::json episode_to_json(const Episode& episode);
Episode episode_from_json(const nlohmann::json& j);

nlohmann::json config_to_json(const EpisodeConfig& config);
EpisodeConfig config_from_json(const nlohmann::json& j);

}  // namespace ragloop

#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ragloop/backend.hpp"
#include "ragloop/orchestrator.hpp"
#include "ragloop/trace.hpp"

namespace ragloop {

// ---------------------------------------------------------------------------
// Answer normalization and exact match
// ---------------------------------------------------------------------------

/// Reading-comprehension answer normalization: lowercase, strip ASCII
/// punctuation, drop the articles a/an/the as whole words, collapse
/// whitespace. Operates on bytes; non-ASCII bytes pass through untouched.
std::string normalize_answer(std::string_view answer);

/// 1 iff the normalized prediction equals some normalized gold. An absent
/// prediction scores 0.
int exact_match(const std::optional<std::string>& predicted,
                std::span<const std::string> gold_answers);

// ---------------------------------------------------------------------------
// LLM judge
// ---------------------------------------------------------------------------

struct JudgeVerdict {
    int score = 0;
    std::string justification;
};

/// Extracts "Score: X" (first occurrence, integer, inclusive range check) and
/// the text after "Justification:" from a judge completion. Throws
/// JudgeParseError on a missing, non-numeric, or out-of-range score.
JudgeVerdict parse_judge_reply(std::string_view reply, int min_score, int max_score);

/// Digest-keyed verdict store so repeated judge calls are free. With a path,
/// entries load at construction and persist on put (JSONL, append).
class JudgeCache {
public:
    JudgeCache() = default;
    explicit JudgeCache(std::string path);

    std::optional<JudgeVerdict> get(const std::string& key) const;
    void put(const std::string& key, const JudgeVerdict& verdict);
    std::size_t size() const;

private:
    std::map<std::string, JudgeVerdict> entries_;
    std::string path_;
    mutable std::mutex mutex_;
};

struct JudgeOptions {
    std::string model_id = "gpt-4.1-mini";
    int max_new_tokens = 512;
    double temperature = 0.0;
};

/// Prompts a judge model for binary answer match and a 1-5 reasoning-quality
/// rating. One retry on unparseable replies, then JudgeParseError; verdicts
/// are cached by (template, bindings, model) digest.
class Judge {
public:
    Judge(LlmClient& client, const trace::TemplateSet& templates, JudgeOptions options = {},
          JudgeCache* cache = nullptr);

    JudgeVerdict llm_match(const std::string& predicted,
                           std::span<const std::string> gold_answers);

    JudgeVerdict reasoning_quality(const std::string& question, const std::string& information,
                                   const std::string& think);

    TokenUsage usage() const;

private:
    JudgeVerdict judged(trace::TemplateId id, const trace::TemplateSet::Bindings& bindings,
                        int min_score, int max_score);

    LlmClient& client_;
    const trace::TemplateSet& templates_;
    JudgeOptions options_;
    JudgeCache* cache_;
    TokenUsage usage_;
    mutable std::mutex mutex_;
};

// ---------------------------------------------------------------------------
// Per-episode record and batch summary
// ---------------------------------------------------------------------------

struct EvalRecord {
    std::string episode_id;
    std::string question;
    std::vector<std::string> gold_answers;
    std::optional<std::string> predicted;
    int em = 0;
    std::optional<int> llm_match;  // absent when no judge ran or the judge failed
    std::optional<std::string> llm_match_justification;
    std::optional<std::vector<int>> reasoning_scores;  // one per post-retrieval think
    int retrieval_count = 0;
    std::vector<int> new_document_counts;  // one per executed search turn
};

struct ScoreOptions {
    Judge* judge = nullptr;
    bool reasoning = false;        // run the per-think 1-5 scorer
    bool skip_judge_on_em = false; // em == 1 short-circuits to llm_match = 1
};

/// The <information> payload the model saw after this executed search turn:
/// the document block for baseline/dedup, the cache snapshot for
/// context/hybrid, with the usual empty-set sentinels.
std::string injected_information_payload(PipelineMode mode, const TurnRecord& turn);

/// Builds the metric record for one finished episode. A judge parse failure
/// leaves llm_match absent rather than scoring 0; backend errors propagate.
EvalRecord score_episode(const Episode& episode, const ScoreOptions& options = {});

struct SearchCountGroup {
    int retrieval_count = 0;
    int n = 0;
    double em_mean = 0.0;
    double ci_half_width = 0.0;  // 1.96 * sqrt(p * (1-p) / n)
};

struct BatchSummary {
    int n = 0;
    double em_mean = 0.0;
    std::optional<double> llm_match_mean;
    int llm_match_n = 0;
    std::optional<double> reasoning_score_mean;
    int reasoning_score_n = 0;
    double avg_retrievals = 0.0;
    std::vector<SearchCountGroup> em_by_search_count;  // ascending retrieval_count
    // turn index -> new-document count -> frequency
    std::map<int, std::map<int, int>> heatmap;
};

/// Aggregates records into the batch metrics. Sums are integral, so any
/// permutation of records produces bit-identical output. Throws EmptyBatch.
BatchSummary summarize(std::span<const EvalRecord> records);

// ---------------------------------------------------------------------------
// Serialization and reports
// ---------------------------------------------------------------------------

nlohmann::json record_to_json(const EvalRecord& record);
EvalRecord record_from_json(const nlohmann::json& j);

nlohmann::json summary_to_json(const BatchSummary& summary);

/// retrieval_count / n / em_mean / ci_half_width, one row per group.
std::string search_count_table_tsv(const BatchSummary& summary);

/// turn / new_documents / count, one row per heatmap cell.
std::string heatmap_table_tsv(const BatchSummary& summary);

}  // namespace ragloop

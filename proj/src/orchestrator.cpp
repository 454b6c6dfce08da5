#include "ragloop/orchestrator.hpp"

#include <algorithm>
#include <utility>

#include "ragloop/hash.hpp"

namespace ragloop {

namespace {

constexpr std::string_view kNoNewDocuments = "No new documents found.";

}  // namespace

std::string_view mode_name(PipelineMode mode) {
    switch (mode) {
        case PipelineMode::Baseline: return "baseline";
        case PipelineMode::Dedup: return "dedup";
        case PipelineMode::Context: return "context";
        case PipelineMode::Hybrid: return "hybrid";
    }
    return "baseline";
}

PipelineMode mode_from_name(std::string_view name) {
    if (name == "baseline") return PipelineMode::Baseline;
    if (name == "dedup") return PipelineMode::Dedup;
    if (name == "context") return PipelineMode::Context;
    if (name == "hybrid") return PipelineMode::Hybrid;
    throw ConfigError("unknown pipeline mode: " + std::string(name));
}

std::string_view termination_name(Termination t) {
    switch (t) {
        case Termination::Answered: return "answered";
        case Termination::TurnCapReached: return "turn_cap_reached";
        case Termination::MalformedOutput: return "malformed_output";
        case Termination::BackendFailure: return "backend_failure";
    }
    return "backend_failure";
}

Termination termination_from_name(std::string_view name) {
    if (name == "answered") return Termination::Answered;
    if (name == "turn_cap_reached") return Termination::TurnCapReached;
    if (name == "malformed_output") return Termination::MalformedOutput;
    if (name == "backend_failure") return Termination::BackendFailure;
    throw ConfigError("unknown termination: " + std::string(name));
}

void EpisodeConfig::validate() const {
    if (k <= 0) throw ConfigError("k must be positive");
    if (pool_size < k) throw ConfigError("pool_size must be at least k");
    if (max_turns <= 0) throw ConfigError("max_turns must be positive");
    if (max_new_tokens <= 0) throw ConfigError("max_new_tokens must be positive");
    if (temperature < 0.0) throw ConfigError("temperature must be non-negative");
    if (malformed_retries < 0) throw ConfigError("malformed_retries must be non-negative");
}

std::string make_episode_id(std::string_view dataset_id, std::string_view qid,
                            PipelineMode mode, long seed) {
    return digest_fields({dataset_id, qid, mode_name(mode), std::to_string(seed)});
}

std::string build_injection(PipelineMode mode, std::span<const Document> shown,
                            std::string_view cache_content) {
    std::string docs = shown.empty() ? std::string(kNoNewDocuments)
                                     : trace::render_information_block(shown);
    std::string out;
    if (mode == PipelineMode::Baseline || mode == PipelineMode::Dedup) {
        out = trace::open_tag(trace::TagKind::Information) + " " + docs + " " +
              trace::close_tag(trace::TagKind::Information);
        return out;
    }
    std::string cache = trace::trim(cache_content);
    if (cache.empty()) cache = std::string(kNoHelpfulInformation);
    out = trace::open_tag(trace::TagKind::Retrieval) + " " + docs + " " +
          trace::close_tag(trace::TagKind::Retrieval) + "\n" +
          trace::open_tag(trace::TagKind::Information) + " " + cache + " " +
          trace::close_tag(trace::TagKind::Information);
    return out;
}

std::string repair_stopped_text(std::string text, StopReason reason) {
    if (reason != StopReason::StopSequence) return text;
    std::size_t best_pos = std::string::npos;
    trace::TagKind best_kind = trace::TagKind::Search;
    for (trace::TagKind kind : {trace::TagKind::Search, trace::TagKind::Answer}) {
        std::string open = trace::open_tag(kind);
        std::string close = trace::close_tag(kind);
        std::size_t open_pos = text.rfind(open);
        if (open_pos == std::string::npos) continue;
        if (text.find(close, open_pos) != std::string::npos) continue;
        if (best_pos == std::string::npos || open_pos > best_pos) {
            best_pos = open_pos;
            best_kind = kind;
        }
    }
    if (best_pos != std::string::npos) text += trace::close_tag(best_kind);
    return text;
}

int count_new_documents(std::span<const Document> documents,
                        const std::set<std::string>& ever_shown) {
    int count = 0;
    for (const Document& doc : documents)
        if (!ever_shown.contains(doc.doc_id)) ++count;
    return count;
}

namespace {

void note_shown(std::set<std::string>& ever_shown, std::span<const Document> documents) {
    for (const Document& doc : documents) ever_shown.insert(doc.doc_id);
}

bool uses_cache(PipelineMode mode) {
    return mode == PipelineMode::Context || mode == PipelineMode::Hybrid;
}

bool uses_dedup(PipelineMode mode) {
    return mode == PipelineMode::Dedup || mode == PipelineMode::Hybrid;
}

}  // namespace

Episode run_episode(EpisodeRuntime& runtime, const EpisodeConfig& config,
                    const std::string& qid, const std::string& question,
                    std::vector<std::string> gold_answers, std::string_view dataset_id) {
    config.validate();
    if (uses_cache(config.mode) && runtime.extractor == nullptr)
        throw ConfigError("mode " + std::string(mode_name(config.mode)) +
                          " needs an extractor");

    Episode episode;
    episode.qid = qid;
    episode.question = question;
    episode.gold_answers = std::move(gold_answers);
    episode.mode = config.mode;
    episode.episode_id =
        make_episode_id(dataset_id, qid, config.mode, config.seed.value_or(0));
    episode.transcript =
        runtime.templates.render(trace::TemplateId::BaseAgent, {{"question", question}});

    SeenSet seen{episode.episode_id, {}};
    std::set<std::string> ever_shown;
    MemoryCache cache;
    cache.episode_id = episode.episode_id;

    GenerationRequest request;
    request.model_id = config.reasoner_model;
    request.stop = trace::stop_sequences();
    request.max_new_tokens = config.max_new_tokens;
    request.temperature = config.temperature;
    request.seed = config.seed;

    bool forced = false;
    int retries_left = config.malformed_retries;

    try {
        while (true) {
            request.prompt = episode.transcript;
            GenerationResult result = runtime.reasoner.generate(request);
            episode.reasoner_usage += result.usage;
            std::string segment = repair_stopped_text(result.text, result.stop_reason);

            TurnRecord turn;
            turn.index = static_cast<int>(episode.turns.size());
            if (auto think = trace::first_block(segment, trace::TagKind::Think))
                turn.think = think->content;
            turn.action = trace::parse_next_action(segment);

            if (turn.action.is_malformed() && !forced && retries_left > 0) {
                --retries_left;
                episode.turns.push_back(std::move(turn));
                continue;
            }
            episode.transcript += segment;

            if (turn.action.is_answer()) {
                episode.final_answer = turn.action.text;
                episode.termination = Termination::Answered;
                episode.turns.push_back(std::move(turn));
                break;
            }
            if (turn.action.is_malformed()) {
                episode.termination =
                    forced ? Termination::TurnCapReached : Termination::MalformedOutput;
                episode.turns.push_back(std::move(turn));
                break;
            }
            if (forced || episode.retrieval_count >= config.max_turns) {
                episode.termination = Termination::TurnCapReached;
                episode.turns.push_back(std::move(turn));
                break;
            }

            RankedRetrieval ranked = runtime.retriever.retrieve(turn.action.text,
                                                                config.pool_size);
            turn.raw_retrieval = top_k(ranked, config.k);
            if (uses_dedup(config.mode)) {
                FilterResult filtered = filter_unseen(ranked, seen, config.k);
                turn.shown_documents = std::move(filtered.documents);
                turn.skipped_duplicates = filtered.skipped_duplicates;
                turn.pool_exhausted = filtered.pool_exhausted;
                seen = mark_seen(std::move(seen), turn.shown_documents);
            } else {
                turn.shown_documents = turn.raw_retrieval;
            }
            turn.new_document_count = count_new_documents(turn.shown_documents, ever_shown);
            note_shown(ever_shown, turn.shown_documents);
            turn.executed = true;
            ++episode.retrieval_count;

            if (uses_cache(config.mode)) {
                std::span<const Document> extract_docs = turn.shown_documents;
                if (config.mode == PipelineMode::Hybrid && config.hybrid_context_raw)
                    extract_docs = turn.raw_retrieval;
                ExtractionOutcome outcome =
                    runtime.extractor->contextualize(question, extract_docs, cache);
                episode.extractor_usage += outcome.usage;
                cache = commit(std::move(cache), outcome, turn.index, config.cache_policy);
                turn.cache_snapshot = cache.content;
                turn.cache_violation = outcome.violation.value_or("");
            }

            episode.transcript +=
                "\n\n" + build_injection(config.mode, turn.shown_documents, cache.content) +
                "\n\n";
            episode.turns.push_back(std::move(turn));

            if (episode.retrieval_count >= config.max_turns) {
                if (!config.forced_answer_on_cap) {
                    episode.termination = Termination::TurnCapReached;
                    break;
                }
                episode.transcript += trace::forced_answer_suffix();
                forced = true;
            }
        }
    } catch (const TransportError& e) {
        episode.termination = Termination::BackendFailure;
        episode.error = e.what();
    } catch (const TimeoutError& e) {
        episode.termination = Termination::BackendFailure;
        episode.error = e.what();
    } catch (const BackendRejected& e) {
        episode.termination = Termination::BackendFailure;
        episode.error = e.what();
    } catch (const RetrieverUnavailable& e) {
        episode.termination = Termination::BackendFailure;
        episode.error = e.what();
    }
    return episode;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

nlohmann::json document_to_json(const Document& doc) {
    return nlohmann::json{
        {"body", doc.body},
        {"doc_id", doc.doc_id},
        {"score", doc.score},
        {"title", doc.title},
    };
}

Document document_from_json(const nlohmann::json& j) {
    Document doc;
    doc.body = j.at("body").get<std::string>();
    doc.doc_id = j.at("doc_id").get<std::string>();
    doc.score = j.value("score", 0.0);
    doc.title = j.at("title").get<std::string>();
    return doc;
}

namespace {

nlohmann::json action_to_json(const trace::AgentAction& action) {
    std::string_view type = "malformed";
    if (action.is_search()) type = "search";
    if (action.is_answer()) type = "answer";
    return nlohmann::json{
        {"reason", action.reason},
        {"text", action.text},
        {"type", std::string(type)},
    };
}

trace::AgentAction action_from_json(const nlohmann::json& j) {
    std::string type = j.at("type").get<std::string>();
    if (type == "search") return trace::AgentAction::search(j.at("text").get<std::string>());
    if (type == "answer") return trace::AgentAction::answer(j.at("text").get<std::string>());
    return trace::AgentAction::malformed(j.value("reason", std::string{}));
}

nlohmann::json docs_to_json(const std::vector<Document>& docs) {
    nlohmann::json arr = nlohmann::json::array();
    for (const Document& doc : docs) arr.push_back(document_to_json(doc));
    return arr;
}

std::vector<Document> docs_from_json(const nlohmann::json& arr) {
    std::vector<Document> docs;
    docs.reserve(arr.size());
    for (const auto& j : arr) docs.push_back(document_from_json(j));
    return docs;
}

nlohmann::json turn_to_json(const TurnRecord& turn) {
    return nlohmann::json{
        {"action", action_to_json(turn.action)},
        {"cache_snapshot", turn.cache_snapshot},
        {"cache_violation", turn.cache_violation},
        {"executed", turn.executed},
        {"index", turn.index},
        {"new_document_count", turn.new_document_count},
        {"pool_exhausted", turn.pool_exhausted},
        {"raw_retrieval", docs_to_json(turn.raw_retrieval)},
        {"shown_documents", docs_to_json(turn.shown_documents)},
        {"skipped_duplicates", turn.skipped_duplicates},
        {"think", turn.think},
    };
}

TurnRecord turn_from_json(const nlohmann::json& j) {
    TurnRecord turn;
    turn.action = action_from_json(j.at("action"));
    turn.cache_snapshot = j.value("cache_snapshot", std::string{});
    turn.cache_violation = j.value("cache_violation", std::string{});
    turn.executed = j.value("executed", false);
    turn.index = j.at("index").get<int>();
    turn.new_document_count = j.value("new_document_count", 0);
    turn.pool_exhausted = j.value("pool_exhausted", false);
    turn.raw_retrieval = docs_from_json(j.at("raw_retrieval"));
    turn.shown_documents = docs_from_json(j.at("shown_documents"));
    turn.skipped_duplicates = j.value("skipped_duplicates", 0);
    turn.think = j.value("think", std::string{});
    return turn;
}

nlohmann::json usage_to_json(const TokenUsage& usage) {
    return nlohmann::json{
        {"completion_tokens", usage.completion_tokens},
        {"prompt_tokens", usage.prompt_tokens},
    };
}

TokenUsage usage_from_json(const nlohmann::json& j) {
    TokenUsage usage;
    usage.completion_tokens = j.value("completion_tokens", 0L);
    usage.prompt_tokens = j.value("prompt_tokens", 0L);
    return usage;
}

}  // namespace

nlohmann::json episode_to_json(const Episode& episode) {
    nlohmann::json turns = nlohmann::json::array();
    for (const TurnRecord& turn : episode.turns) turns.push_back(turn_to_json(turn));
    nlohmann::json j{
        {"episode_id", episode.episode_id},
        {"error", episode.error},
        {"extractor_usage", usage_to_json(episode.extractor_usage)},
        {"final_answer", nullptr},
        {"gold_answers", episode.gold_answers},
        {"mode", std::string(mode_name(episode.mode))},
        {"qid", episode.qid},
        {"question", episode.question},
        {"reasoner_usage", usage_to_json(episode.reasoner_usage)},
        {"retrieval_count", episode.retrieval_count},
        {"termination", std::string(termination_name(episode.termination))},
        {"transcript", episode.transcript},
        {"turns", std::move(turns)},
    };
    if (episode.final_answer) j["final_answer"] = *episode.final_answer;
    return j;
}

nlohmann::json config_to_json(const EpisodeConfig& config) {
    nlohmann::json j{
        {"cache_policy", std::string(cache_policy_name(config.cache_policy))},
        {"extractor_model", config.extractor_model},
        {"forced_answer_on_cap", config.forced_answer_on_cap},
        {"hybrid_context_raw", config.hybrid_context_raw},
        {"k", config.k},
        {"malformed_retries", config.malformed_retries},
        {"max_new_tokens", config.max_new_tokens},
        {"max_turns", config.max_turns},
        {"mode", std::string(mode_name(config.mode))},
        {"pool_size", config.pool_size},
        {"reasoner_model", config.reasoner_model},
        {"seed", nullptr},
        {"temperature", config.temperature},
    };
    if (config.seed) j["seed"] = *config.seed;
    return j;
}

EpisodeConfig config_from_json(const nlohmann::json& j) {
    EpisodeConfig config;
    std::string policy = j.value("cache_policy", std::string("warn"));
    config.cache_policy = policy == "reject" ? CachePolicy::Reject : CachePolicy::Warn;
    config.extractor_model = j.value("extractor_model", config.extractor_model);
    config.forced_answer_on_cap = j.value("forced_answer_on_cap", true);
    config.hybrid_context_raw = j.value("hybrid_context_raw", false);
    config.k = j.value("k", 3);
    config.malformed_retries = j.value("malformed_retries", 0);
    config.max_new_tokens = j.value("max_new_tokens", 4096);
    config.max_turns = j.value("max_turns", 4);
    config.mode = mode_from_name(j.at("mode").get<std::string>());
    config.pool_size = j.value("pool_size", 25);
    config.reasoner_model = j.value("reasoner_model", std::string{});
    if (j.contains("seed") && !j.at("seed").is_null()) config.seed = j.at("seed").get<long>();
    config.temperature = j.value("temperature", 0.0);
    return config;
}

Episode episode_from_json(const nlohmann::json& j) {
    Episode episode;
    episode.episode_id = j.at("episode_id").get<std::string>();
    episode.error = j.value("error", std::string{});
    episode.extractor_usage = usage_from_json(j.value("extractor_usage", nlohmann::json::object()));
    if (j.contains("final_answer") && !j.at("final_answer").is_null())
        episode.final_answer = j.at("final_answer").get<std::string>();
    episode.gold_answers = j.at("gold_answers").get<std::vector<std::string>>();
    episode.mode = mode_from_name(j.at("mode").get<std::string>());
    episode.qid = j.at("qid").get<std::string>();
    episode.question = j.at("question").get<std::string>();
    episode.reasoner_usage = usage_from_json(j.value("reasoner_usage", nlohmann::json::object()));
    episode.retrieval_count = j.at("retrieval_count").get<int>();
    episode.termination = termination_from_name(j.at("termination").get<std::string>());
    episode.transcript = j.value("transcript", std::string{});
    for (const auto& turn : j.at("turns")) episode.turns.push_back(turn_from_json(turn));
    return episode;
}

}  // namespace ragloop

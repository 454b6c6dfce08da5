#include "ragloop/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ragloop/hash.hpp"

namespace ragloop {

namespace {

bool is_ascii_punct(unsigned char c) {
    return c < 128 && std::ispunct(c);
}

}  // namespace

std::string normalize_answer(std::string_view answer) {
    std::string cleaned;
    cleaned.reserve(answer.size());
    for (unsigned char c : answer) {
        if (is_ascii_punct(c)) continue;
        cleaned.push_back(static_cast<char>(std::tolower(c)));
    }
    std::istringstream words(cleaned);
    std::string word;
    std::string out;
    while (words >> word) {
        if (word == "a" || word == "an" || word == "the") continue;
        if (!out.empty()) out.push_back(' ');
        out += word;
    }
    return out;
}

int exact_match(const std::optional<std::string>& predicted,
                std::span<const std::string> gold_answers) {
    if (!predicted) return 0;
    std::string norm = normalize_answer(*predicted);
    for (const std::string& gold : gold_answers)
        if (norm == normalize_answer(gold)) return 1;
    return 0;
}

// ---------------------------------------------------------------------------
// Judge
// ---------------------------------------------------------------------------

JudgeVerdict parse_judge_reply(std::string_view reply, int min_score, int max_score) {
    constexpr std::string_view kScore = "Score:";
    constexpr std::string_view kJustification = "Justification:";

    auto snippet = [&reply]() {
        std::string s(reply.substr(0, 120));
        std::replace(s.begin(), s.end(), '\n', ' ');
        return s;
    };

    std::size_t at = reply.find(kScore);
    if (at == std::string_view::npos)
        throw JudgeParseError("no \"Score:\" line in reply: \"" + snippet() + "\"");
    std::size_t pos = at + kScore.size();
    while (pos < reply.size() && (reply[pos] == ' ' || reply[pos] == '\t')) ++pos;
    std::size_t digits_begin = pos;
    if (pos < reply.size() && reply[pos] == '-') ++pos;
    while (pos < reply.size() && std::isdigit(static_cast<unsigned char>(reply[pos]))) ++pos;
    if (pos == digits_begin || (pos < reply.size() && reply[pos] == '.'))
        throw JudgeParseError("non-integer score in reply: \"" + snippet() + "\"");
    int score = std::stoi(std::string(reply.substr(digits_begin, pos - digits_begin)));
    if (score < min_score || score > max_score)
        throw JudgeParseError("score " + std::to_string(score) + " outside [" +
                              std::to_string(min_score) + "," + std::to_string(max_score) + "]");

    JudgeVerdict verdict;
    verdict.score = score;
    std::size_t j = reply.find(kJustification, pos);
    if (j != std::string_view::npos)
        verdict.justification = trace::trim(reply.substr(j + kJustification.size()));
    return verdict;
}

JudgeCache::JudgeCache(std::string path) : path_(std::move(path)) {
    std::ifstream in(path_);
    if (!in) return;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trace::trim(line).empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded())
            throw ParseError("bad judge cache line in " + path_, line_no);
        JudgeVerdict verdict;
        verdict.score = j.at("score").get<int>();
        verdict.justification = j.value("justification", std::string{});
        entries_[j.at("key").get<std::string>()] = std::move(verdict);
    }
}

std::optional<JudgeVerdict> JudgeCache::get(const std::string& key) const {
    std::lock_guard lock(mutex_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void JudgeCache::put(const std::string& key, const JudgeVerdict& verdict) {
    std::lock_guard lock(mutex_);
    auto [it, inserted] = entries_.emplace(key, verdict);
    if (!inserted || path_.empty()) return;
    std::ofstream out(path_, std::ios::app);
    if (!out) throw IoError("cannot append to judge cache " + path_);
    nlohmann::json j{
        {"justification", verdict.justification},
        {"key", key},
        {"score", verdict.score},
    };
    out << j.dump() << '\n';
}

std::size_t JudgeCache::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

Judge::Judge(LlmClient& client, const trace::TemplateSet& templates, JudgeOptions options,
             JudgeCache* cache)
    : client_(client), templates_(templates), options_(std::move(options)), cache_(cache) {}

JudgeVerdict Judge::judged(trace::TemplateId id, const trace::TemplateSet::Bindings& bindings,
                           int min_score, int max_score) {
    std::vector<std::string_view> fields;
    fields.reserve(bindings.size() * 2 + 2);
    std::string_view name = trace::template_name(id);
    fields.push_back(name);
    fields.push_back(options_.model_id);
    for (const auto& [key, value] : bindings) {
        fields.push_back(key);
        fields.push_back(value);
    }
    std::string cache_key = digest_fields(std::span<const std::string_view>(fields));

    if (cache_) {
        if (auto hit = cache_->get(cache_key)) return *hit;
    }
    for (int attempt = 0;; ++attempt) {
        TokenUsage usage;
        std::string reply = generate_judged_text(client_, templates_, id, bindings,
                                                 options_.model_id, options_.max_new_tokens,
                                                 options_.temperature, &usage);
        {
            std::lock_guard lock(mutex_);
            usage_ += usage;
        }
        try {
            JudgeVerdict verdict = parse_judge_reply(reply, min_score, max_score);
            if (cache_) cache_->put(cache_key, verdict);
            return verdict;
        } catch (const JudgeParseError&) {
            if (attempt >= 1) throw;
        }
    }
}

JudgeVerdict Judge::llm_match(const std::string& predicted,
                              std::span<const std::string> gold_answers) {
    nlohmann::json golds = nlohmann::json::array();
    for (const std::string& gold : gold_answers) golds.push_back(gold);
    return judged(trace::TemplateId::JudgeMatch,
                  {{"predicted", predicted}, {"golds", golds.dump()}}, 0, 1);
}

JudgeVerdict Judge::reasoning_quality(const std::string& question, const std::string& information,
                                      const std::string& think) {
    return judged(trace::TemplateId::ReasoningScore,
                  {{"question", question}, {"information", information}, {"think", think}}, 1, 5);
}

TokenUsage Judge::usage() const {
    std::lock_guard lock(mutex_);
    return usage_;
}

// ---------------------------------------------------------------------------
// Scoring
// ---------------------------------------------------------------------------

std::string injected_information_payload(PipelineMode mode, const TurnRecord& turn) {
    if (mode == PipelineMode::Context || mode == PipelineMode::Hybrid) {
        std::string cache = trace::trim(turn.cache_snapshot);
        return cache.empty() ? std::string(kNoHelpfulInformation) : cache;
    }
    if (turn.shown_documents.empty()) return "No new documents found.";
    return trace::render_information_block(turn.shown_documents);
}

EvalRecord score_episode(const Episode& episode, const ScoreOptions& options) {
    EvalRecord record;
    record.episode_id = episode.episode_id;
    record.question = episode.question;
    record.gold_answers = episode.gold_answers;
    record.predicted = episode.final_answer;
    record.em = exact_match(record.predicted, record.gold_answers);
    record.retrieval_count = episode.retrieval_count;
    for (const TurnRecord& turn : episode.turns)
        if (turn.executed) record.new_document_counts.push_back(turn.new_document_count);

    if (options.judge) {
        if (!record.predicted) {
            record.llm_match = 0;
            record.llm_match_justification = "no answer produced";
        } else if (options.skip_judge_on_em && record.em == 1) {
            record.llm_match = 1;
            record.llm_match_justification = "exact match";
        } else {
            try {
                JudgeVerdict verdict =
                    options.judge->llm_match(*record.predicted, record.gold_answers);
                record.llm_match = verdict.score;
                record.llm_match_justification = verdict.justification;
            } catch (const JudgeParseError&) {
                // stays absent: an unparseable judge is not a 0
            }
        }
        if (options.reasoning) {
            std::vector<int> scores;
            for (std::size_t i = 0; i + 1 < episode.turns.size(); ++i) {
                const TurnRecord& turn = episode.turns[i];
                const TurnRecord& next = episode.turns[i + 1];
                if (!turn.executed || next.think.empty()) continue;
                JudgeVerdict verdict = options.judge->reasoning_quality(
                    episode.question, injected_information_payload(episode.mode, turn),
                    next.think);
                scores.push_back(verdict.score);
            }
            record.reasoning_scores = std::move(scores);
        }
    }
    return record;
}

// ---------------------------------------------------------------------------
// Summary
// ---------------------------------------------------------------------------

BatchSummary summarize(std::span<const EvalRecord> records) {
    if (records.empty()) throw EmptyBatch();

    long em_sum = 0;
    long llm_sum = 0;
    long llm_n = 0;
    long reasoning_sum = 0;
    long reasoning_n = 0;
    long retrieval_sum = 0;
    std::map<int, std::pair<long, long>> groups;  // retrieval_count -> (em_sum, n)
    std::map<int, std::map<int, int>> heatmap;

    for (const EvalRecord& record : records) {
        em_sum += record.em;
        retrieval_sum += record.retrieval_count;
        if (record.llm_match) {
            llm_sum += *record.llm_match;
            ++llm_n;
        }
        if (record.reasoning_scores) {
            for (int score : *record.reasoning_scores) {
                reasoning_sum += score;
                ++reasoning_n;
            }
        }
        auto& [group_em, group_n] = groups[record.retrieval_count];
        group_em += record.em;
        ++group_n;
        for (std::size_t turn = 0; turn < record.new_document_counts.size(); ++turn)
            ++heatmap[static_cast<int>(turn)][record.new_document_counts[turn]];
    }

    BatchSummary summary;
    summary.n = static_cast<int>(records.size());
    summary.em_mean = static_cast<double>(em_sum) / summary.n;
    summary.llm_match_n = static_cast<int>(llm_n);
    if (llm_n > 0) summary.llm_match_mean = static_cast<double>(llm_sum) / llm_n;
    summary.reasoning_score_n = static_cast<int>(reasoning_n);
    if (reasoning_n > 0)
        summary.reasoning_score_mean = static_cast<double>(reasoning_sum) / reasoning_n;
    summary.avg_retrievals = static_cast<double>(retrieval_sum) / summary.n;
    for (const auto& [count, group] : groups) {
        SearchCountGroup g;
        g.retrieval_count = count;
        g.n = static_cast<int>(group.second);
        g.em_mean = static_cast<double>(group.first) / group.second;
        g.ci_half_width = 1.96 * std::sqrt(g.em_mean * (1.0 - g.em_mean) / group.second);
        summary.em_by_search_count.push_back(g);
    }
    summary.heatmap = std::move(heatmap);
    return summary;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

nlohmann::json record_to_json(const EvalRecord& record) {
    nlohmann::json j{
        {"em", record.em},
        {"episode_id", record.episode_id},
        {"gold_answers", record.gold_answers},
        {"llm_match", nullptr},
        {"llm_match_justification", nullptr},
        {"new_document_counts", record.new_document_counts},
        {"predicted", nullptr},
        {"question", record.question},
        {"reasoning_scores", nullptr},
        {"retrieval_count", record.retrieval_count},
    };
    if (record.llm_match) j["llm_match"] = *record.llm_match;
    if (record.llm_match_justification)
        j["llm_match_justification"] = *record.llm_match_justification;
    if (record.predicted) j["predicted"] = *record.predicted;
    if (record.reasoning_scores) j["reasoning_scores"] = *record.reasoning_scores;
    return j;
}

EvalRecord record_from_json(const nlohmann::json& j) {
    EvalRecord record;
    record.em = j.at("em").get<int>();
    record.episode_id = j.at("episode_id").get<std::string>();
    record.gold_answers = j.at("gold_answers").get<std::vector<std::string>>();
    if (j.contains("llm_match") && !j.at("llm_match").is_null())
        record.llm_match = j.at("llm_match").get<int>();
    if (j.contains("llm_match_justification") && !j.at("llm_match_justification").is_null())
        record.llm_match_justification = j.at("llm_match_justification").get<std::string>();
    if (j.contains("new_document_counts"))
        record.new_document_counts = j.at("new_document_counts").get<std::vector<int>>();
    if (j.contains("predicted") && !j.at("predicted").is_null())
        record.predicted = j.at("predicted").get<std::string>();
    record.question = j.at("question").get<std::string>();
    if (j.contains("reasoning_scores") && !j.at("reasoning_scores").is_null())
        record.reasoning_scores = j.at("reasoning_scores").get<std::vector<int>>();
    record.retrieval_count = j.at("retrieval_count").get<int>();
    return record;
}

nlohmann::json summary_to_json(const BatchSummary& summary) {
    nlohmann::json groups = nlohmann::json::array();
    for (const SearchCountGroup& g : summary.em_by_search_count) {
        groups.push_back(nlohmann::json{
            {"ci_half_width", g.ci_half_width},
            {"em_mean", g.em_mean},
            {"n", g.n},
            {"retrieval_count", g.retrieval_count},
        });
    }
    nlohmann::json heatmap = nlohmann::json::array();
    for (const auto& [turn, counts] : summary.heatmap) {
        nlohmann::json cells = nlohmann::json::array();
        for (const auto& [new_documents, count] : counts) {
            cells.push_back(nlohmann::json{
                {"count", count},
                {"new_documents", new_documents},
            });
        }
        heatmap.push_back(nlohmann::json{{"cells", std::move(cells)}, {"turn", turn}});
    }
    nlohmann::json j{
        {"avg_retrievals", summary.avg_retrievals},
        {"ci_method", "normal_approximation"},
        {"em_by_search_count", std::move(groups)},
        {"em_mean", summary.em_mean},
        {"heatmap", std::move(heatmap)},
        {"llm_match_mean", nullptr},
        {"llm_match_n", summary.llm_match_n},
        {"n", summary.n},
        {"reasoning_score_mean", nullptr},
        {"reasoning_score_n", summary.reasoning_score_n},
    };
    if (summary.llm_match_mean) j["llm_match_mean"] = *summary.llm_match_mean;
    if (summary.reasoning_score_mean) j["reasoning_score_mean"] = *summary.reasoning_score_mean;
    return j;
}

std::string search_count_table_tsv(const BatchSummary& summary) {
    std::ostringstream out;
    out << "retrieval_count\tn\tem_mean\tci_half_width\n";
    out.precision(10);
    for (const SearchCountGroup& g : summary.em_by_search_count)
        out << g.retrieval_count << '\t' << g.n << '\t' << g.em_mean << '\t' << g.ci_half_width
            << '\n';
    return out.str();
}

std::string heatmap_table_tsv(const BatchSummary& summary) {
    std::ostringstream out;
    out << "turn\tnew_documents\tcount\n";
    for (const auto& [turn, counts] : summary.heatmap)
        for (const auto& [new_documents, count] : counts)
            out << turn << '\t' << new_documents << '\t' << count << '\n';
    return out.str();
}

}  // namespace ragloop

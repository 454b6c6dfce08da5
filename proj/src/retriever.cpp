#include "ragloop/retriever.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "http_util.hpp"

namespace ragloop {

namespace {

void sort_candidates(std::vector<Document>& docs) {
    std::sort(docs.begin(), docs.end(), [](const Document& a, const Document& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.doc_id < b.doc_id;
    });
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char ch : text) {
        if (std::isalnum(static_cast<unsigned char>(ch))) {
            current += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

Corpus ingest_corpus_stream(std::istream& in, const std::string& source_uri) {
    Corpus corpus;
    corpus.source_uri = source_uri;
    std::set<std::string> seen_ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json record;
        try {
            record = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(e.what(), line_no);
        }
        if (!record.is_object() || !record.contains("title") || !record.contains("text")) {
            throw ParseError("record must be an object with title and text fields", line_no);
        }
        Document doc;
        doc.title = record["title"].get<std::string>();
        doc.body = record["text"].get<std::string>();
        if (record.contains("id") && !record["id"].is_null()) {
            doc.doc_id = record["id"].is_string() ? record["id"].get<std::string>()
                                                  : record["id"].dump();
        } else {
            doc.doc_id = content_doc_id(doc.title, doc.body);
        }
        if (doc.doc_id.empty()) throw ParseError("empty document id", line_no);
        if (!seen_ids.insert(doc.doc_id).second) throw DuplicateId(doc.doc_id);
        corpus.documents.push_back(std::move(doc));
    }
    return corpus;
}

Corpus ingest_corpus(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open corpus file: " + path);
    return ingest_corpus_stream(in, path);
}

std::vector<Document> top_k(const RankedRetrieval& ranked, int k) {
    if (k < 1) throw ConfigError("k must be >= 1");
    std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(k), ranked.candidates.size());
    return {ranked.candidates.begin(), ranked.candidates.begin() + static_cast<long>(n)};
}

// ---------------------------------------------------------------------------
// InMemoryRetriever
// ---------------------------------------------------------------------------

InMemoryRetriever::InMemoryRetriever(Corpus corpus) : corpus_(std::move(corpus)) {
    if (corpus_.documents.empty()) throw EmptyCorpus();
    term_freqs_.reserve(corpus_.documents.size());
    doc_lens_.reserve(corpus_.documents.size());
    long total_len = 0;
    for (const auto& doc : corpus_.documents) {
        std::unordered_map<std::string, int> freqs;
        auto tokens = tokenize(doc.title + " " + doc.body);
        for (auto& token : tokens) ++freqs[token];
        for (const auto& [term, _] : freqs) ++doc_freqs_[term];
        doc_lens_.push_back(static_cast<int>(tokens.size()));
        total_len += static_cast<long>(tokens.size());
        term_freqs_.push_back(std::move(freqs));
    }
    avg_doc_len_ = static_cast<double>(total_len) / static_cast<double>(corpus_.documents.size());
    if (avg_doc_len_ <= 0.0) avg_doc_len_ = 1.0;
}

RankedRetrieval InMemoryRetriever::retrieve(const std::string& query, int pool_size) {
    if (pool_size < 1) throw ConfigError("pool_size must be >= 1");

    // Ordered so scores accumulate in lexicographic term order; floating
    // addition order must not depend on hash layout or the ranking would
    // drift across platforms.
    std::map<std::string, int> query_terms;
    for (auto& token : tokenize(query)) ++query_terms[token];

    const double n_docs = static_cast<double>(corpus_.documents.size());
    std::vector<Document> scored;
    for (std::size_t d = 0; d < corpus_.documents.size(); ++d) {
        double score = 0.0;
        for (const auto& [term, qtf] : query_terms) {
            auto tf_it = term_freqs_[d].find(term);
            if (tf_it == term_freqs_[d].end()) continue;
            auto df_it = doc_freqs_.find(term);
            const double df = static_cast<double>(df_it->second);
            const double idf = std::log(1.0 + (n_docs - df + 0.5) / (df + 0.5));
            const double tf = static_cast<double>(tf_it->second);
            const double norm = 1.0 - kB + kB * static_cast<double>(doc_lens_[d]) / avg_doc_len_;
            score += qtf * idf * tf * (kK1 + 1.0) / (tf + kK1 * norm);
        }
        if (score > 0.0) {
            Document doc = corpus_.documents[d];
            doc.score = score;
            scored.push_back(std::move(doc));
        }
    }
    sort_candidates(scored);
    if (scored.size() > static_cast<std::size_t>(pool_size)) {
        scored.resize(static_cast<std::size_t>(pool_size));
    }
    return RankedRetrieval{query, std::move(scored), pool_size};
}

// ---------------------------------------------------------------------------
// RemoteRetriever
// ---------------------------------------------------------------------------

RemoteRetriever::RemoteRetriever(RemoteRetrieverConfig config,
                                 std::shared_ptr<ConcurrencyLimiter> limiter)
    : config_(std::move(config)), limiter_(std::move(limiter)) {
    if (config_.base_url.empty()) throw ConfigError("retriever base_url is empty");
    if (!limiter_) limiter_ = std::make_shared<ConcurrencyLimiter>(config_.max_concurrent);
}

namespace {

Document parse_remote_doc(const nlohmann::json& entry, const RemoteRetrieverConfig& cfg) {
    const nlohmann::json* doc_obj = &entry;
    double score = 0.0;
    if (entry.contains("document") && entry["document"].is_object()) {
        doc_obj = &entry["document"];
        if (entry.contains(cfg.score_field) && entry[cfg.score_field].is_number()) {
            score = entry[cfg.score_field].get<double>();
        }
    }
    if (doc_obj->contains(cfg.score_field) && (*doc_obj)[cfg.score_field].is_number()) {
        score = (*doc_obj)[cfg.score_field].get<double>();
    }

    Document doc;
    doc.score = score;
    if (doc_obj->contains(cfg.id_field) && !(*doc_obj)[cfg.id_field].is_null()) {
        const auto& id = (*doc_obj)[cfg.id_field];
        doc.doc_id = id.is_string() ? id.get<std::string>() : id.dump();
    }
    if (!cfg.contents_field.empty() && doc_obj->contains(cfg.contents_field) &&
        (*doc_obj)[cfg.contents_field].is_string()) {
        // Convention: first line is the (possibly quoted) title, rest is body.
        std::string contents = (*doc_obj)[cfg.contents_field].get<std::string>();
        std::size_t nl = contents.find('\n');
        std::string title = nl == std::string::npos ? contents : contents.substr(0, nl);
        std::string body = nl == std::string::npos ? "" : contents.substr(nl + 1);
        if (title.size() >= 2 && title.front() == '"' && title.back() == '"') {
            title = title.substr(1, title.size() - 2);
        }
        doc.title = trace::trim(title);
        doc.body = trace::trim(body);
    } else {
        if (doc_obj->contains(cfg.title_field) && (*doc_obj)[cfg.title_field].is_string()) {
            doc.title = (*doc_obj)[cfg.title_field].get<std::string>();
        }
        if (doc_obj->contains(cfg.text_field) && (*doc_obj)[cfg.text_field].is_string()) {
            doc.body = (*doc_obj)[cfg.text_field].get<std::string>();
        }
    }
    if (doc.doc_id.empty()) doc.doc_id = content_doc_id(doc.title, doc.body);
    return doc;
}

}  // namespace

RankedRetrieval RemoteRetriever::retrieve(const std::string& query, int pool_size) {
    if (pool_size < 1) throw ConfigError("pool_size must be >= 1");

    nlohmann::json body{{"queries", nlohmann::json::array({query})}, {"topk", pool_size}};
    detail::HttpRetryPolicy policy{config_.max_retries, config_.backoff_base_ms, config_.timeout_sec};

    nlohmann::json reply;
    try {
        ConcurrencyLimiter::Guard guard(*limiter_);
        reply = detail::post_json(config_.base_url, config_.path, body, {}, policy);
    } catch (const TransportError& e) {
        throw RetrieverUnavailable(e.what());
    } catch (const TimeoutError& e) {
        throw RetrieverUnavailable(e.what());
    }

    const nlohmann::json* per_query = nullptr;
    if (reply.is_object() && reply.contains("result") && reply["result"].is_array() &&
        !reply["result"].empty()) {
        per_query = &reply["result"][0];
    } else if (reply.is_array() && !reply.empty() && reply[0].is_array()) {
        per_query = &reply[0];
    } else if (reply.is_array()) {
        per_query = &reply;
    } else {
        throw ParseError("unrecognized retriever reply shape: " + reply.dump());
    }

    std::vector<Document> docs;
    std::set<std::string> seen;
    for (const auto& entry : *per_query) {
        Document doc = parse_remote_doc(entry, config_);
        if (seen.insert(doc.doc_id).second) docs.push_back(std::move(doc));
    }
    sort_candidates(docs);
    if (docs.size() > static_cast<std::size_t>(pool_size)) {
        docs.resize(static_cast<std::size_t>(pool_size));
    }
    return RankedRetrieval{query, std::move(docs), pool_size};
}

}  // namespace ragloop

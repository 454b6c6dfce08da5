#pragma once

#include <istream>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ragloop/backend.hpp"
#include "ragloop/document.hpp"

namespace ragloop {

/// Ranked candidate pool for one query: candidates sorted by
/// (score desc, doc_id asc), no duplicate ids, length <= pool_size.
struct RankedRetrieval {
    std::string query;
    std::vector<Document> candidates;
    int pool_size = 0;
};

struct Corpus {
    std::vector<Document> documents;
    std::string source_uri;
};

/// Loads a line-delimited record file, one JSON object per document:
/// {id, title, text}. A record without an id gets a content digest of
/// (title, text) as its id. Throws ParseError(line), DuplicateId, IoError.
Corpus ingest_corpus(const std::string& path);
Corpus ingest_corpus_stream(std::istream& in, const std::string& source_uri);

class Retriever {
public:
    virtual ~Retriever() = default;
    virtual RankedRetrieval retrieve(const std::string& query, int pool_size) = 0;
};

/// First min(k, |candidates|) documents of the pool.
std::vector<Document> top_k(const RankedRetrieval& ranked, int k);

// ---------------------------------------------------------------------------
// In-process lexical retriever
// ---------------------------------------------------------------------------

/// BM25 over a tokenized in-memory index (k1 = 1.2, b = 0.75, idf with the
/// +1 floor so scores stay non-negative). Terms are lowercased alphanumeric
/// runs over title + body. Score of document d for query q:
///
///   sum over distinct terms t of q:
///     qtf(t) * ln(1 + (N - df + 0.5)/(df + 0.5))
///            * tf * (k1 + 1) / (tf + k1 * (1 - b + b * len(d)/avg_len))
///
/// Documents sharing no term with the query are not returned. The index is
/// immutable after construction and shareable across threads.
class InMemoryRetriever : public Retriever {
public:
    explicit InMemoryRetriever(Corpus corpus);

    RankedRetrieval retrieve(const std::string& query, int pool_size) override;

    const Corpus& corpus() const { return corpus_; }

    static constexpr double kK1 = 1.2;
    static constexpr double kB = 0.75;

private:
    Corpus corpus_;
    std::vector<std::unordered_map<std::string, int>> term_freqs_;
    std::unordered_map<std::string, int> doc_freqs_;
    std::vector<int> doc_lens_;
    double avg_doc_len_ = 0.0;
};

/// Lowercased alphanumeric tokens.
std::vector<std::string> tokenize(std::string_view text);

// ---------------------------------------------------------------------------
// Remote retrieval service
// ---------------------------------------------------------------------------

/// Field names in the remote service's reply; adjust to match the deployed
/// server. When contents_field is set it takes precedence over title/text
/// fields and is split on its first line, with surrounding quotes stripped
/// from the title.
struct RemoteRetrieverConfig {
    std::string base_url;
    std::string path = "/retrieve";
    std::string id_field = "id";
    std::string title_field = "title";
    std::string text_field = "text";
    std::string contents_field = "contents";
    std::string score_field = "score";
    int max_retries = 3;
    int backoff_base_ms = 200;
    int timeout_sec = 60;
    int max_concurrent = 4;
};

/// POSTs {queries:[q], topk:pool_size} and accepts replies shaped either
/// {result:[[doc...]]} or a bare list, where each doc is flat or nested as
/// {document:{...}, score}. Results are re-sorted by (score desc, id asc)
/// and de-duplicated by id to uphold the RankedRetrieval invariant.
class RemoteRetriever : public Retriever {
public:
    explicit RemoteRetriever(RemoteRetrieverConfig config,
                             std::shared_ptr<ConcurrencyLimiter> limiter = nullptr);

    RankedRetrieval retrieve(const std::string& query, int pool_size) override;

private:
    RemoteRetrieverConfig config_;
    std::shared_ptr<ConcurrencyLimiter> limiter_;
};

}  // namespace ragloop

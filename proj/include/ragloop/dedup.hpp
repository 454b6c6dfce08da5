#pragma once

#include <set>
#include <span>
#include <string>
#include <vector>

#include "ragloop/retriever.hpp"

namespace ragloop {

/// Document ids already shown to the model within one episode. Grows
/// monotonically; never shared across episodes.
struct SeenSet {
    std::string episode_id;
    std::set<std::string> ids;

    bool contains(const std::string& doc_id) const { return ids.count(doc_id) > 0; }
};

/// First k unseen documents of the ranked pool, in rank order. Also reports
/// how many already-seen candidates were skipped during the scan and whether
/// the pool ran out before k unseen documents were found.
struct FilterResult {
    std::vector<Document> documents;
    int skipped_duplicates = 0;
    bool pool_exhausted = false;
};

/// Scans ranked.candidates in order, skipping ids in seen, until k unseen
/// documents are collected or the pool is exhausted. Does not mutate seen;
/// an empty result is a valid outcome.
FilterResult filter_unseen(const RankedRetrieval& ranked, const SeenSet& seen, int k);

/// seen' = seen ∪ ids(documents).
[[nodiscard]] SeenSet mark_seen(SeenSet seen, std::span<const Document> documents);

}  // namespace ragloop

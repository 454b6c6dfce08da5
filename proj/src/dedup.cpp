#include "ragloop/dedup.hpp"

namespace ragloop {

FilterResult filter_unseen(const RankedRetrieval& ranked, const SeenSet& seen, int k) {
    if (k < 1) throw ConfigError("k must be >= 1");
    FilterResult result;
    for (const auto& doc : ranked.candidates) {
        if (static_cast<int>(result.documents.size()) == k) break;
        if (seen.contains(doc.doc_id)) {
            ++result.skipped_duplicates;
            continue;
        }
        result.documents.push_back(doc);
    }
    result.pool_exhausted = static_cast<int>(result.documents.size()) < k;
    return result;
}

SeenSet mark_seen(SeenSet seen, std::span<const Document> documents) {
    for (const auto& doc : documents) seen.ids.insert(doc.doc_id);
    return seen;
}

}  // namespace ragloop

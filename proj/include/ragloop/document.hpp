#pragma once

#include <string>

#include "ragloop/hash.hpp"

namespace ragloop {

/// One retrievable passage. doc_id is stable and unique within a corpus;
/// score is the retriever's relevance for the query that produced it
/// (higher is better, 0 outside a retrieval context).
struct Document {
    std::string doc_id;
    std::string title;
    std::string body;
    double score = 0.0;
};

/// Fallback id for sources that provide none: content digest of (title, body).
inline std::string content_doc_id(const std::string& title, const std::string& body) {
    return digest_fields({title, body});
}

}  // namespace ragloop

#pragma once

#include <stdexcept>
#include <string>

namespace ragloop {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error("config error: " + what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error("io error: " + what) {}
};

/// A line-oriented input file failed to parse. line_no is 1-based, 0 if unknown.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line_no = 0)
        : Error(line_no ? "parse error at line " + std::to_string(line_no) + ": " + what
                        : "parse error: " + what),
          line_no(line_no) {}
    std::size_t line_no;
};

class DuplicateId : public Error {
public:
    explicit DuplicateId(const std::string& id) : Error("duplicate document id: " + id), id(id) {}
    std::string id;
};

class DuplicateQid : public Error {
public:
    explicit DuplicateQid(const std::string& qid) : Error("duplicate question id: " + qid), qid(qid) {}
    std::string qid;
};

class EmptyCorpus : public Error {
public:
    EmptyCorpus() : Error("corpus is empty") {}
};

class EmptyDocumentSet : public Error {
public:
    EmptyDocumentSet() : Error("document list is empty") {}
};

class EmptyBatch : public Error {
public:
    EmptyBatch() : Error("no records to summarize") {}
};

class UnboundPlaceholder : public Error {
public:
    explicit UnboundPlaceholder(const std::string& name)
        : Error("unbound placeholder: {" + name + "}"), name(name) {}
    std::string name;
};

class RetrieverUnavailable : public Error {
public:
    explicit RetrieverUnavailable(const std::string& what)
        : Error("retriever unavailable: " + what) {}
};

/// Transport-level failure that persisted through the retry budget.
class TransportError : public Error {
public:
    explicit TransportError(const std::string& what) : Error("transport error: " + what) {}
};

class TimeoutError : public Error {
public:
    explicit TimeoutError(const std::string& what) : Error("timeout: " + what) {}
};

/// The backend answered with a non-retryable error status.
class BackendRejected : public Error {
public:
    BackendRejected(int status, const std::string& body)
        : Error("backend rejected request, status " + std::to_string(status) + ": " + body),
          status(status),
          body(body) {}
    int status;
    std::string body;
};

class JudgeParseError : public Error {
public:
    explicit JudgeParseError(const std::string& what) : Error("judge parse error: " + what) {}
};

class SampleTooLarge : public Error {
public:
    SampleTooLarge(std::size_t requested, std::size_t available)
        : Error("sample size " + std::to_string(requested) + " exceeds dataset size " +
                std::to_string(available)) {}
};

/// Scripted mock ran out of steps.
class PolicyExhausted : public Error {
public:
    explicit PolicyExhausted(std::size_t steps)
        : Error("scripted policy exhausted after " + std::to_string(steps) + " steps") {}
};

/// Scripted mock received a prompt that does not match the next step.
class PolicyMismatch : public Error {
public:
    PolicyMismatch(std::size_t step, const std::string& expected, const std::string& prompt_tail)
        : Error("scripted policy mismatch at step " + std::to_string(step) + ": expected prompt containing \"" +
                expected + "\", got ...\"" + prompt_tail + "\"") {}
};

}  // namespace ragloop

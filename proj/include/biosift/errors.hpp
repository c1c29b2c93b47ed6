// Copyright 2026 the biosift authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace biosift {

// Exit codes used by the CLI: 0 success, 1 usage, 2 data, 3 backend.
enum class ExitCode : int {
    ok = 0,
    usage_error = 1,
    data_error = 2,
    backend_error = 3,
};

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed inputs, schema violations, contract breaches in data files.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Transport/protocol failures talking to a scoring backend.
struct BackendError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MalformedLine : DataError {
    MalformedLine(std::size_t line_no, const std::string& what)
        : DataError("line " + std::to_string(line_no) + ": " + what), line(line_no) {}
    std::size_t line;
};

struct DanglingInside : MalformedLine {
    using MalformedLine::MalformedLine;
};

struct UnknownTag : MalformedLine {
    using MalformedLine::MalformedLine;
};

struct TemplateMismatch : DataError {
    using DataError::DataError;
};

struct UnknownStyle : DataError {
    using DataError::DataError;
};

struct EmptyContinuation : DataError {
    using DataError::DataError;
};

struct EmptyCorpus : DataError {
    using DataError::DataError;
};

struct EmptySequence : DataError {
    using DataError::DataError;
};

struct NegativeSampleScoring : DataError {
    using DataError::DataError;
};

struct TokenizationMismatch : DataError {
    using DataError::DataError;
};

struct MissingScore : DataError {
    using DataError::DataError;
};

struct DuplicateScore : DataError {
    using DataError::DataError;
};

struct IdCollision : DataError {
    using DataError::DataError;
};

struct BackendUnavailable : BackendError {
    using BackendError::BackendError;
};

// Prefix+continuation does not fit the backend context window. The sample
// is flagged in the partial-failure report, never silently truncated.
struct ContextOverflow : BackendError {
    using BackendError::BackendError;
};

}  // namespace biosift

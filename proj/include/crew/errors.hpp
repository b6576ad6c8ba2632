// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace crew {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Configuration file problems: missing files, malformed JSON, bad values.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A stated operation precondition was violated by the caller.
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// Channel rejected a malformed message (missing kind-specific field).
class ChannelError : public Error {
public:
    ChannelError(const std::string& what, std::string field)
        : Error(what), field_name(std::move(field)) {}
    std::string field_name;
};

/// A dependency referenced by a subtask has no posted result yet.
class UnsatisfiedDependencyError : public Error {
public:
    UnsatisfiedDependencyError(const std::string& what, std::string subtask)
        : Error(what), subtask_id(std::move(subtask)) {}
    std::string subtask_id;
};

/// Base for model-backend failures.
class BackendError : public Error {
public:
    using Error::Error;
};

/// Scripted backend ran out of matching entries for a request.
class ScriptExhaustedError : public BackendError {
public:
    ScriptExhaustedError(const std::string& what, std::string digest)
        : BackendError(what), request_digest(std::move(digest)) {}
    std::string request_digest;
};

/// Wire backend gave up after exhausting its retry budget.
class TransportError : public BackendError {
public:
    TransportError(const std::string& what, int retries_used)
        : BackendError(what), retries(retries_used) {}
    int retries;
};

/// Planner reply stayed malformed through every format retry.
class PlannerFormatError : public Error {
public:
    PlannerFormatError(const std::string& what, std::string reply)
        : Error(what), last_reply(std::move(reply)) {}
    std::string last_reply;
};

/// Thrown by a tool handler to mark a failure the worker loop must not
/// feed back to the model as an observation.
class ToolFatalError : public Error {
public:
    using Error::Error;
};

/// Judge verdict stayed unparseable through the retry.
class EvalError : public Error {
public:
    using Error::Error;
};

} // namespace crew

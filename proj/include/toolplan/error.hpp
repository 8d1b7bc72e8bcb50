#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace toolplan {

enum class ErrorKind {
    EmptyInput,
    MalformedStep,
    MalformedArgs,
    ForwardDependency,
    SelfDependency,
    FileNotFound,
    SchemaViolation,
    DuplicateServer,
    DuplicateTool,
    EmptyRowSet,
    EmptyQuery,
    ZeroInformedTokens,
    NoActionableSteps,
    InvalidFraction,
    TeacherUnavailable,
    InvalidGoldPlan,
    DanglingPlaceholder,
    EmptyPool,
    UnresolvedPlaceholder,
    UnknownHandler,
    ArgValidation,
    EndpointError,
    MalformedVerdict,
    OutOfRangeScore,
    MissingResponse,
    InvalidInput,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library. `subject` carries the offending
/// marker name, JSON pointer, text span, scenario id or item id, depending
/// on the kind.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string message, std::optional<int> step = std::nullopt,
          std::string subject = {});

    ErrorKind kind() const noexcept { return kind_; }
    std::optional<int> step() const noexcept { return step_; }
    const std::string& subject() const noexcept { return subject_; }

private:
    ErrorKind kind_;
    std::optional<int> step_;
    std::string subject_;
};

}  // namespace toolplan

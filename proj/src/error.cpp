#include "toolplan/error.hpp"

namespace toolplan {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::EmptyInput: return "EmptyInput";
        case ErrorKind::MalformedStep: return "MalformedStep";
        case ErrorKind::MalformedArgs: return "MalformedArgs";
        case ErrorKind::ForwardDependency: return "ForwardDependency";
        case ErrorKind::SelfDependency: return "SelfDependency";
        case ErrorKind::FileNotFound: return "FileNotFound";
        case ErrorKind::SchemaViolation: return "SchemaViolation";
        case ErrorKind::DuplicateServer: return "DuplicateServer";
        case ErrorKind::DuplicateTool: return "DuplicateTool";
        case ErrorKind::EmptyRowSet: return "EmptyRowSet";
        case ErrorKind::EmptyQuery: return "EmptyQuery";
        case ErrorKind::ZeroInformedTokens: return "ZeroInformedTokens";
        case ErrorKind::NoActionableSteps: return "NoActionableSteps";
        case ErrorKind::InvalidFraction: return "InvalidFraction";
        case ErrorKind::TeacherUnavailable: return "TeacherUnavailable";
        case ErrorKind::InvalidGoldPlan: return "InvalidGoldPlan";
        case ErrorKind::DanglingPlaceholder: return "DanglingPlaceholder";
        case ErrorKind::EmptyPool: return "EmptyPool";
        case ErrorKind::UnresolvedPlaceholder: return "UnresolvedPlaceholder";
        case ErrorKind::UnknownHandler: return "UnknownHandler";
        case ErrorKind::ArgValidation: return "ArgValidation";
        case ErrorKind::EndpointError: return "EndpointError";
        case ErrorKind::MalformedVerdict: return "MalformedVerdict";
        case ErrorKind::OutOfRangeScore: return "OutOfRangeScore";
        case ErrorKind::MissingResponse: return "MissingResponse";
        case ErrorKind::InvalidInput: return "InvalidInput";
    }
    return "Unknown";
}

Error::Error(ErrorKind kind, std::string message, std::optional<int> step, std::string subject)
    : std::runtime_error(std::move(message)), kind_(kind), step_(step), subject_(std::move(subject)) {}

}  // namespace toolplan

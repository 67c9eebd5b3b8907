#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hsps {

/// Root of every error thrown by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or physically inconsistent inputs. The CLI maps these to exit code 2.
class InputError : public Error
{
public:
    using Error::Error;
};

/// A formula argument lies outside its domain (negative mean, k < 0, ...).
class DomainError : public InputError
{
public:
    using InputError::InputError;
};

/// The b <-> b0 relation diverges for b0 >= 1.
class DivergenceError : public DomainError
{
public:
    using DomainError::DomainError;
};

/// A structured-text file violates its schema. Carries the offending line (0 if
/// unknown) and optionally the file it came from.
class SchemaError : public InputError
{
public:
    SchemaError(std::size_t line, const std::string& message, const std::string& source = {})
        : InputError((source.empty() ? "" : source + ": ") + (line ? "line " + std::to_string(line) + ": " : "")
                     + message)
        , line_(line)
        , message_(message)
    {}

    std::size_t line() const noexcept { return line_; }
    /// The message without file and line prefix.
    const std::string& message() const noexcept { return message_; }

private:
    std::size_t line_;
    std::string message_;
};

/// Failure discovered while computing. The CLI maps these to exit code 3.
class ComputationError : public Error
{
public:
    using Error::Error;
};

/// g2(0) requested where no photon can be present (P_{m>=1} = 0).
class UndefinedStatisticError : public ComputationError
{
public:
    using ComputationError::ComputationError;
};

/// No sign change of g2(0) - 1 over the search bracket.
class NoCrossingError : public ComputationError
{
public:
    using ComputationError::ComputationError;
};

/// rate * dead_time >= 1: the non-paralyzable correction has no finite value.
class SaturationError : public ComputationError
{
public:
    using ComputationError::ComputationError;
};

/// Corrected count rate below the dark-count floor.
class BelowDarkFloorError : public ComputationError
{
public:
    using ComputationError::ComputationError;
};

/// Measurements admit no solution of the gated click model.
class InconsistentMeasurementsError : public ComputationError
{
public:
    using ComputationError::ComputationError;
};

/// Root solver did not converge within its iteration budget.
class ConvergenceError : public ComputationError
{
public:
    using ComputationError::ComputationError;
};

/// Wraps a failure inside a multi-stage pipeline with the stage label.
class StageError : public ComputationError
{
public:
    StageError(std::string stage, const std::string& message)
        : ComputationError("[" + stage + "] " + message)
        , stage_(std::move(stage))
    {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

/// A simulation would exceed its configured event budget.
class EventBudgetError : public ComputationError
{
public:
    EventBudgetError(const std::string& message, std::size_t generated)
        : ComputationError(message)
        , generated_(generated)
    {}

    /// Events generated before the run was aborted.
    std::size_t generated() const noexcept { return generated_; }

private:
    std::size_t generated_;
};

/// Statistics requested from an empty set of gate records.
class EmptyReportError : public ComputationError
{
public:
    using ComputationError::ComputationError;
};

} // namespace hsps

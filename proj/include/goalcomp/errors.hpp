#pragma once

#include <stdexcept>
#include <string>

namespace goalcomp {

// Encoder asked to emit more bits than the per-sensor budget allows.
class BudgetExceededError : public std::runtime_error {
public:
    explicit BudgetExceededError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite or runaway loss during a training phase.
class TrainingDivergedError : public std::runtime_error {
public:
    TrainingDivergedError(int phase, int epoch, const std::string& detail)
        : std::runtime_error("training diverged in phase " + std::to_string(phase) +
                             ", epoch " + std::to_string(epoch) + ": " + detail),
          phase(phase),
          epoch(epoch) {}

    int phase;
    int epoch;
};

// Malformed input bytes (bundle, dataset cache, IDX).
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// Container format version this build does not understand.
class UnsupportedVersionError : public ParseError {
public:
    explicit UnsupportedVersionError(const std::string& what) : ParseError(what) {}
};

// A caller broke a documented protocol, e.g. joint training with an unfrozen teacher.
class ContractError : public std::logic_error {
public:
    explicit ContractError(const std::string& what) : std::logic_error(what) {}
};

// A numeric kernel produced NaN/Inf. Training loops convert this into
// TrainingDivergedError with phase/epoch context.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace goalcomp

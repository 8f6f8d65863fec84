#pragma once

#include <stdexcept>
#include <string>

namespace contactforge {

// Raised when user-supplied data (files, arguments, records) violates a
// precondition. The CLI maps it to exit code 2; every other exception is an
// internal failure (exit code 1).
class InputError : public std::runtime_error {
  public:
    InputError(std::string stage, const std::string& what)
        : std::runtime_error(what), stage_(std::move(stage)) {}

    const std::string& stage() const noexcept { return stage_; }

  private:
    std::string stage_;
};

// Numerical failure during training (non-finite loss).
class DivergenceError : public std::runtime_error {
  public:
    DivergenceError(long iteration, const std::string& what)
        : std::runtime_error(what), iteration_(iteration) {}

    long iteration() const noexcept { return iteration_; }

  private:
    long iteration_;
};

}  // namespace contactforge

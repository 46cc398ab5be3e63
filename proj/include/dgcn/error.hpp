#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dgcn {

class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text. `line()` is 1-based.
class parse_error : public error {
public:
    parse_error(std::size_t line, const std::string& what)
        : error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class validation_error : public error {
public:
    using error::error;
};

class lookup_error : public error {
public:
    using error::error;
};

class range_error : public error {
public:
    using error::error;
};

/// A caller broke a documented precondition (shape, length, ordering).
class contract_error : public error {
public:
    using error::error;
};

class config_error : public error {
public:
    using error::error;
};

/// Kendall tau is undefined when one of the vectors is entirely tied.
class undefined_correlation : public error {
public:
    using error::error;
};

class training_error : public error {
public:
    training_error(int iteration, const std::string& what)
        : error("iteration " + std::to_string(iteration) + ": " + what), iteration_(iteration) {}
    int iteration() const { return iteration_; }

private:
    int iteration_;
};

/// Pipeline failure tagged with the stage that raised it.
class stage_error : public error {
public:
    stage_error(std::string stage, const std::string& what)
        : error("[" + stage + "] " + what), stage_(std::move(stage)) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

}  // namespace dgcn

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace qtflow {

/// Two fields (or a field and an operator) disagree on grid shape/BC.
class GridMismatchError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// 2*F_B(Q) + A0 <= 0: the quadratization shift is too small for the
/// tensor encountered. Runs must abort on this, never clamp.
class NonpositiveRadicandError : public std::runtime_error {
public:
    NonpositiveRadicandError(double radicand, std::ptrdiff_t node,
                             const std::string& what)
        : std::runtime_error(what), radicand_(radicand), node_(node) {}

    double radicand() const { return radicand_; }
    /// Offending node index, or -1 for a pointwise (non-field) evaluation.
    std::ptrdiff_t node() const { return node_; }

private:
    double radicand_;
    std::ptrdiff_t node_;
};

/// Auxiliary variable lost positivity after an update and the run is
/// configured to abort on that.
class RPositivityLostError : public std::runtime_error {
public:
    RPositivityLostError(double r_min, long step, const std::string& what)
        : std::runtime_error(what), r_min_(r_min), step_(step) {}

    double r_min() const { return r_min_; }
    long step() const { return step_; }

private:
    double r_min_;
    long step_;
};

/// Requested interpolation time falls between snapshots that were not saved.
class StrideTooCoarseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The fine-step reference failed its self-consistency gate.
class ReferenceUnconvergedError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed text input (config file or field file); carries the line
/// number and, when known, the offending key/field name.
class ParseError : public std::runtime_error {
public:
    ParseError(long line, std::string field, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) +
                             (field.empty() ? "" : " (" + field + ")") +
                             ": " + what),
          line_(line),
          field_(std::move(field)) {}

    long line() const { return line_; }
    const std::string& field() const { return field_; }

private:
    long line_;
    std::string field_;
};

/// Well-formed input whose values break invariants; reports every
/// violation at once, not just the first.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(std::vector<std::string> violations)
        : std::runtime_error(join(violations)),
          violations_(std::move(violations)) {}

    const std::vector<std::string>& violations() const { return violations_; }

private:
    static std::string join(const std::vector<std::string>& v) {
        std::string out = "invalid configuration:";
        for (const std::string& s : v) out += "\n  - " + s;
        return out;
    }

    std::vector<std::string> violations_;
};

}  // namespace qtflow

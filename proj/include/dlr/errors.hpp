#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace dlr {

/// Coarse error categories. The CLI maps these onto its exit codes.
enum class ErrorKind {
    invalid_input,
    degenerate_spec,
    numerical,
    infeasible,
    capacity,
    uncovered_realization,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

struct InvalidInput : Error {
    explicit InvalidInput(const std::string& what) : Error(ErrorKind::invalid_input, what) {}
};

struct DegenerateSpec : Error {
    explicit DegenerateSpec(const std::string& what) : Error(ErrorKind::degenerate_spec, what) {}
};

struct NumericalError : Error {
    explicit NumericalError(const std::string& what) : Error(ErrorKind::numerical, what) {}
};

struct CapacityError : Error {
    explicit CapacityError(const std::string& what) : Error(ErrorKind::capacity, what) {}
};

/// A robust program has no feasible point. `binding` names the lines or
/// vertices that could not be covered, when that is known.
struct Infeasible : Error {
    Infeasible(const std::string& what, std::vector<std::string> binding_ = {})
        : Error(ErrorKind::infeasible, what), binding(std::move(binding_)) {}
    std::vector<std::string> binding;
};

/// A realized rating vector that the procured reserves cannot cover.
struct UncoveredRealization : Error {
    UncoveredRealization(const std::string& what, std::vector<std::string> lines_)
        : Error(ErrorKind::uncovered_realization, what), violated_lines(std::move(lines_)) {}
    std::vector<std::string> violated_lines;
};

namespace detail {

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw InvalidInput(msg);
}

}  // namespace detail
}  // namespace dlr

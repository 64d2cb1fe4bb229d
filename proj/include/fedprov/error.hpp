#pragma once

#include <stdexcept>
#include <string>

namespace fedprov {

enum class ErrorKind {
    incompatible,           // structural mismatch between parameter sets or inputs
    empty_data,
    infeasible_partition,
    insufficient_population,
    insufficient_colluders,
    out_of_bounds,
    invalid_argument,
    not_fitted,
    parse,
    io,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace fedprov

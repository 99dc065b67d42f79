#pragma once

#include <stdexcept>
#include <string>

namespace defreg {

// Contract violations raised by the library. `kind` is stable and machine
// checkable; `what()` carries the human-readable detail.
enum class ErrorKind {
    dims_mismatch,
    shape_mismatch,
    even_window,
    range_violation,
    missing_labels,
    config_invalid,
    layout_mismatch,
    group_too_small,
    empty_dataset,
    bad_spec,
    bad_magic,
    unsupported_datatype,
    truncated,
    non_positive_pixdim,
    io_failure,
    parse_error,
    count_mismatch,
    landmark_out_of_bounds,
    json_invalid,
    unknown_key,
    domain_error,
    spec_invalid,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

const char* error_kind_name(ErrorKind kind);

} // namespace defreg

#pragma once

#include <stdexcept>
#include <string>

namespace logmosaic {

enum class ErrorCode {
    bad_config,
    insufficient_data,
    degenerate_geometry,
    singular_transform,
    no_valid_start,
    search_diverged,
    initialization_failed,
    insufficient_area,
    registration_failed,
    io_error,
};

const char* to_string(ErrorCode code);

// Single exception type for recoverable pipeline failures. Precondition
// violations (bad coordinates, mismatched dimensions) use the std exceptions.
class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

  private:
    ErrorCode code_;
};

}  // namespace logmosaic

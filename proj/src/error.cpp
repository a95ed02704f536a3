#include "logmosaic/error.hpp"

namespace logmosaic {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::bad_config: return "bad_config";
        case ErrorCode::insufficient_data: return "insufficient_data";
        case ErrorCode::degenerate_geometry: return "degenerate_geometry";
        case ErrorCode::singular_transform: return "singular_transform";
        case ErrorCode::no_valid_start: return "no_valid_start";
        case ErrorCode::search_diverged: return "search_diverged";
        case ErrorCode::initialization_failed: return "initialization_failed";
        case ErrorCode::insufficient_area: return "insufficient_area";
        case ErrorCode::registration_failed: return "registration_failed";
        case ErrorCode::io_error: return "io_error";
    }
    return "unknown";
}

}  // namespace logmosaic

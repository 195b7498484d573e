#pragma once

#include <stdexcept>
#include <string>

namespace smoothboost {

// Internal error taxonomy.  The C boundary maps each type onto one of the
// sb_status codes; inside the core we just throw.

struct invalid_argument_error : std::runtime_error {
    explicit invalid_argument_error(const std::string& what) : std::runtime_error(what) {}
};

struct io_error : std::runtime_error {
    explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

// Training cannot proceed: constant response, no usable split column, etc.
struct degenerate_data_error : std::runtime_error {
    explicit degenerate_data_error(const std::string& what) : std::runtime_error(what) {}
};

// A model file parsed but failed structural validation.
struct corrupt_model_error : std::runtime_error {
    explicit corrupt_model_error(const std::string& what) : std::runtime_error(what) {}
};

// A model file is from a format revision this build does not understand.
struct unsupported_version_error : std::runtime_error {
    explicit unsupported_version_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace smoothboost

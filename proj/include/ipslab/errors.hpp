#ifndef IPSLAB_ERRORS_HPP
#define IPSLAB_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ipslab {

struct parameter_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct horizon_exceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct configuration_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A windowed run could not certify that boundary effects stayed clear of the
// observables; widen the window and rerun.
struct width_certificate_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct insufficient_data : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct unsupported_combination : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct usage_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

}  // namespace ipslab

#endif

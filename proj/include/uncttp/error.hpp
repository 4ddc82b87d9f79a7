#pragma once

#include <stdexcept>
#include <string>

namespace uncttp {

/// Base of every error raised by the library. `kind()` is the stable name
/// the CLI prints in its structured error line.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message)
        : std::runtime_error(message), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define UNCTTP_DEFINE_ERROR(Name)                                             \
    class Name : public Error {                                               \
    public:                                                                   \
        explicit Name(const std::string& message) : Error(#Name, message) {}  \
    }

// provider
UNCTTP_DEFINE_ERROR(TransportError);
UNCTTP_DEFINE_ERROR(AuthError);
UNCTTP_DEFINE_ERROR(CapabilityError);
UNCTTP_DEFINE_ERROR(UnknownInstance);
// prompting
UNCTTP_DEFINE_ERROR(TemplateError);
UNCTTP_DEFINE_ERROR(InvalidInstance);
// selection
UNCTTP_DEFINE_ERROR(InsufficientData);
UNCTTP_DEFINE_ERROR(EmbedderError);
UNCTTP_DEFINE_ERROR(DegenerateClustering);
// evaluation
UNCTTP_DEFINE_ERROR(LeakageError);
UNCTTP_DEFINE_ERROR(AllDropped);
UNCTTP_DEFINE_ERROR(MissingRecords);
// data / cli
UNCTTP_DEFINE_ERROR(FormatError);
UNCTTP_DEFINE_ERROR(UnknownLabel);
UNCTTP_DEFINE_ERROR(InfeasibleBalance);
UNCTTP_DEFINE_ERROR(ConfigError);

#undef UNCTTP_DEFINE_ERROR

}  // namespace uncttp

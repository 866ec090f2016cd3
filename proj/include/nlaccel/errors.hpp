#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nlaccel {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

#define NLACCEL_ERROR(Name) \
    struct Name : Error {   \
        using Error::Error; \
    }

NLACCEL_ERROR(NotPositiveDefinite);
NLACCEL_ERROR(ConvergenceFailure);
NLACCEL_ERROR(EmptyWindow);
NLACCEL_ERROR(SingularSystem);
NLACCEL_ERROR(DimensionMismatch);
NLACCEL_ERROR(InconsistentCoefficients);
NLACCEL_ERROR(ProxFailure);
NLACCEL_ERROR(LineSearchFailure);
NLACCEL_ERROR(NonFiniteIterate);
NLACCEL_ERROR(SpectrumOutOfRange);
NLACCEL_ERROR(NormalizationInsideRegion);
NLACCEL_ERROR(ZeroLeadingCoefficient);
NLACCEL_ERROR(EmptyDataset);
NLACCEL_ERROR(ConfigError);
NLACCEL_ERROR(IoError);

#undef NLACCEL_ERROR

struct ParseError : Error {
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line(line) {}
    std::size_t line;
};

}  // namespace nlaccel

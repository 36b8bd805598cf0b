#pragma once

#include <stdexcept>
#include <string>

namespace canweyl {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DomainError : Error { using Error::Error; };
struct QuadratureError : Error { using Error::Error; };
struct NotSupported : Error { using Error::Error; };
struct NotMonotone : Error { using Error::Error; };
struct NoRankOneLimit : Error { using Error::Error; };
struct IndivisibleStart : Error { using Error::Error; };
struct BracketError : Error { using Error::Error; };
struct InvalidBracket : Error { using Error::Error; };
struct ParameterOutOfRange : Error { using Error::Error; };
struct StepFailure : Error { using Error::Error; };
struct DegenerateDisc : Error { using Error::Error; };
struct InsufficientSamples : Error { using Error::Error; };
struct PotentialTooLarge : Error { using Error::Error; };
struct IvpFailure : Error { using Error::Error; };
struct InconclusiveNearEndpoint : Error { using Error::Error; };

/// Disc radius stagnated above the requested certificate at the truncation cap.
struct SlowShrink : Error {
    SlowShrink(const std::string& what, double achieved)
        : Error(what), achieved_radius(achieved) {}
    double achieved_radius;
};

struct ParseError : Error {
    ParseError(const std::string& what, int line_, int column_)
        : Error(what), line(line_), column(column_) {}
    int line, column;
};

struct SchemaError : Error {
    SchemaError(const std::string& what, std::string key_)
        : Error(what), key(std::move(key_)) {}
    std::string key;
};

}  // namespace canweyl

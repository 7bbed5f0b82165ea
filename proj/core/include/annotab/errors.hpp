#pragma once

#include <stdexcept>
#include <string>

namespace annotab {

struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct ParseError : Error { using Error::Error; };
struct EmptyFile : Error { using Error::Error; };
struct EmptyName : Error { using Error::Error; };
struct MissingRow : Error { using Error::Error; };
struct NoItemsFound : Error { using Error::Error; };
struct MalformedAnnotation : Error { using Error::Error; };
struct BackendUnavailable : Error { using Error::Error; };
struct RateLimited : Error { using Error::Error; };
struct ReplayMiss : Error { using Error::Error; };
struct StoreIoError : Error { using Error::Error; };
struct SchemaError : Error { using Error::Error; };
struct PreconditionViolated : Error { using Error::Error; };
struct EmptyInput : Error { using Error::Error; };
struct DegenerateProblem : Error { using Error::Error; };
struct NumericalFailure : Error { using Error::Error; };
struct SingleClass : Error { using Error::Error; };
struct AllZeroDifferences : Error { using Error::Error; };
struct ZeroDenominator : Error { using Error::Error; };
struct BrokenChain : Error { using Error::Error; };
struct MissingPrerequisite : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

}  // namespace annotab

#pragma once
#include <stdexcept>
#include <string>

namespace ovtl {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// grid too coarse for a requested cube, cone level or dilate
struct ResolutionError : Error { using Error::Error; };
// parameter outside the operation's domain (p < 1, sigma <= d/2, ...)
struct DomainError : Error { using Error::Error; };
struct ValidationError : Error { using Error::Error; };
// multiplier theorem does not apply to the given sequences
struct HypothesisError : Error { using Error::Error; };
struct GridMismatch : Error { using Error::Error; };
struct FormatError : Error { using Error::Error; };

} // namespace ovtl

#pragma once

#include <stdexcept>
#include <string>

namespace slowmix {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct InvalidKappa : Error { using Error::Error; };
struct DegenerateProfile : Error { using Error::Error; };
struct QuadratureTooCoarse : Error { using Error::Error; };
struct HorizonExceeded : Error { using Error::Error; };
struct NotMeanZero : Error { using Error::Error; };
struct NoDecayWithinHorizon : Error { using Error::Error; };
struct InsufficientData : Error { using Error::Error; };
struct NoRoot : Error { using Error::Error; };
struct OnDiagonal : Error { using Error::Error; };
struct ConfigInvalid : Error { using Error::Error; };
struct UnknownKind : Error { using Error::Error; };

} // namespace slowmix

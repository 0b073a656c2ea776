#pragma once

#include <stdexcept>

namespace mpmab {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParameterViolation : Error { using Error::Error; };
struct NonUniqueOptimalMatching : Error { using Error::Error; };
struct AttackProbabilityOne : Error { using Error::Error; };
struct DuplicateSend : Error { using Error::Error; };
struct IncompleteRound : Error { using Error::Error; };
struct InstanceTooLarge : Error { using Error::Error; };
struct NoConvergence : Error { using Error::Error; };
struct ZeroTransition : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };
struct ValidationError : Error { using Error::Error; };
struct InvalidSpec : Error { using Error::Error; };
struct SimulationStalled : Error { using Error::Error; };

}  // namespace mpmab

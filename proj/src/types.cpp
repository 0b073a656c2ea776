#include "mpmab/types.hpp"

namespace mpmab {

const char* to_string(Phase p) {
  switch (p) {
    case Phase::Exploration: return "exploration";
    case Phase::Matching: return "matching";
    case Phase::Exploitation: return "exploitation";
  }
  return "unknown";
}

}  // namespace mpmab

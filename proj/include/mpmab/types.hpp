#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace mpmab {

// Convention used throughout: player and arm *ids* are 1-based (they appear in
// profiles, formulas and all external output); storage positions in matrices
// and vectors are 0-based.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Entry k-1 holds the arm id played by player k.
using ActionProfile = Eigen::VectorXi;

// Entry m-1 is 1 if arm m is attacked at this step.
using AttackVector = Eigen::VectorXi;

enum class Phase { Exploration = 0, Matching = 1, Exploitation = 2 };

struct PhaseTag {
  Phase phase = Phase::Exploration;
  int epoch = 1;
};

const char* to_string(Phase p);

inline int phase_index(Phase p) { return static_cast<int>(p); }

}  // namespace mpmab

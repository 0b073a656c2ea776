#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "mpmab/types.hpp"

namespace mpmab {

struct CommBudget {
  // bits[phase][player-1]
  std::array<std::vector<std::int64_t>, 3> bits;

  std::int64_t total(int player) const {
    std::int64_t sum = 0;
    for (const auto& phase_bits : bits) sum += phase_bits[player - 1];
    return sum;
  }
};

// Reliable synchronous one-bit broadcast bus. Each player may send at most
// one bit per round; a round is delivered once all K bits are present.
class BitBus {
 public:
  explicit BitBus(int K);

  void set_phase(Phase phase) { phase_ = phase; }
  Phase phase() const { return phase_; }

  void broadcast_bit(int sender, int bit);  // sender is a 1-based player id
  bool round_full() const { return pending_ == K_; }
  int bits_pending() const { return pending_; }

  // Returns the round's bits indexed by player and clears the buffer.
  std::vector<std::uint8_t> collect_round();

  std::int64_t bits_sent(int sender, Phase phase) const;
  CommBudget budget_report() const;

 private:
  int K_;
  Phase phase_ = Phase::Exploration;
  std::vector<int> round_;  // -1 while unset
  int pending_ = 0;
  std::array<std::vector<std::int64_t>, 3> counts_;
};

}  // namespace mpmab

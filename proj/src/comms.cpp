#include "mpmab/comms.hpp"

#include <string>

#include "mpmab/errors.hpp"

namespace mpmab {

BitBus::BitBus(int K) : K_(K), round_(K, -1) {
  for (auto& c : counts_) c.assign(K, 0);
}

void BitBus::broadcast_bit(int sender, int bit) {
  const int idx = sender - 1;
  if (idx < 0 || idx >= K_) throw ParameterViolation("sender out of range");
  if (round_[idx] != -1)
    throw DuplicateSend("player " + std::to_string(sender) + " already sent this round");
  round_[idx] = bit != 0 ? 1 : 0;
  ++pending_;
  counts_[phase_index(phase_)][idx] += 1;
}

std::vector<std::uint8_t> BitBus::collect_round() {
  if (pending_ < K_)
    throw IncompleteRound("round holds " + std::to_string(pending_) + " of " +
                          std::to_string(K_) + " bits");
  std::vector<std::uint8_t> bits(K_);
  for (int i = 0; i < K_; ++i) {
    bits[i] = static_cast<std::uint8_t>(round_[i]);
    round_[i] = -1;
  }
  pending_ = 0;
  return bits;
}

std::int64_t BitBus::bits_sent(int sender, Phase phase) const {
  return counts_[phase_index(phase)][sender - 1];
}

CommBudget BitBus::budget_report() const {
  CommBudget budget;
  budget.bits = counts_;
  return budget;
}

}  // namespace mpmab

#include <stdexcept>

#include "tmc/tm.hpp"

namespace tmc::tm {

TsetlinAutomaton::TsetlinAutomaton(int states_per_action, int state)
    : n_(states_per_action), state_(state) {
  if (n_ < 1) throw std::invalid_argument("TsetlinAutomaton: N must be >= 1");
  if (state_ < 1 || state_ > 2 * n_) throw std::invalid_argument("TsetlinAutomaton: state out of range");
}

void TsetlinAutomaton::transition(Signal signal) {
  const bool include = action() == Action::Include;
  switch (signal) {
    case Signal::Reward:
      if (include) {
        if (state_ > 1) --state_;
      } else if (state_ < 2 * n_) {
        ++state_;
      }
      break;
    case Signal::Penalty:
      state_ += include ? 1 : -1;
      break;
    case Signal::Inaction:
      break;
  }
}

TsetlinAutomaton ta_transition(TsetlinAutomaton a, Signal signal) {
  a.transition(signal);
  return a;
}

}  // namespace tmc::tm

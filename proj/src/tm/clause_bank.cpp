#include <bit>
#include <stdexcept>

#if defined(__SSE2__)
#include <emmintrin.h>
#endif

#include "tmc/tm.hpp"

namespace tmc::tm {

ClauseBank::ClauseBank(int clauses, int features, int states_per_action)
    : clauses_(clauses),
      features_(features),
      n_(states_per_action),
      // Every automaton starts at N + 1, the weakest exclude state.
      states_(static_cast<std::size_t>(clauses) * 2 * features, static_cast<std::uint16_t>(states_per_action + 1)),
      weights_(clauses, 1),
      included_list_(clauses) {
  if (clauses < 2 || clauses % 2 != 0) throw std::invalid_argument("ClauseBank: clause count must be even");
  if (features < 1) throw std::invalid_argument("ClauseBank: need at least one feature");
}

void ClauseBank::set_state(int j, int k, int state) {
  if (state < 1 || state > 2 * n_) throw std::invalid_argument("ClauseBank: state out of range");
  states_[index(j, k)] = static_cast<std::uint16_t>(state);
}

void ClauseBank::refresh(int j) {
  const int literals = 2 * features_;
  if (scratch_.size() < static_cast<std::size_t>(literals)) scratch_.resize(literals);
  const std::uint16_t* s = &states_[index(j, 0)];
  std::uint32_t* out = scratch_.data();
  std::size_t count = 0;
  int k = 0;
#if defined(__SSE2__)
  // Sixteen states per step; the sign flip makes the signed compare unsigned.
  const __m128i flip = _mm_set1_epi16(static_cast<short>(0x8000));
  const __m128i bound = _mm_xor_si128(_mm_set1_epi16(static_cast<short>(n_ + 1)), flip);
  for (; k + 16 <= literals; k += 16) {
    const __m128i lo = _mm_xor_si128(_mm_loadu_si128(reinterpret_cast<const __m128i*>(s + k)), flip);
    const __m128i hi = _mm_xor_si128(_mm_loadu_si128(reinterpret_cast<const __m128i*>(s + k + 8)), flip);
    const __m128i in = _mm_packs_epi16(_mm_cmplt_epi16(lo, bound), _mm_cmplt_epi16(hi, bound));
    auto mask = static_cast<unsigned>(_mm_movemask_epi8(in));
    while (mask != 0) {
      out[count++] = static_cast<std::uint32_t>(k + std::countr_zero(mask));
      mask &= mask - 1;
    }
  }
#endif
  for (; k < literals; ++k) {
    out[count] = static_cast<std::uint32_t>(k);
    count += s[k] <= n_;
  }
  included_list_[j].assign(out, out + count);
}

std::uint64_t ClauseBank::satisfied_word(int j, const PatchSet& x, int w) const {
  std::uint64_t acc = x.word_mask(w);
  for (const std::uint32_t k : included_list_[j]) {
    const auto f = static_cast<int>(k);
    acc &= f < features_ ? x.row(f)[w] : ~x.row(f - features_)[w];
    if (acc == 0) break;
  }
  return acc;
}

bool ClauseBank::satisfied_by(int j, const PatchSet& x, int p) const {
  return (satisfied_word(j, x, p >> 6) >> (p & 63)) & 1U;
}

bool ClauseBank::evaluate(int j, const PatchSet& x, EvalMode mode) const {
  if (x.geometry().features() != features_) throw std::invalid_argument("clause: literal count mismatch");
  if (empty(j)) return mode == EvalMode::Train;
  for (int w = 0; w < x.patch_words(); ++w) {
    if (satisfied_word(j, x, w)) return true;
  }
  return false;
}

void ClauseBank::satisfying_patches(int j, const PatchSet& x, std::vector<int>& out) const {
  out.clear();
  const bool all = empty(j);
  for (int w = 0; w < x.patch_words(); ++w) {
    for (std::uint64_t m = all ? x.word_mask(w) : satisfied_word(j, x, w); m != 0; m &= m - 1) {
      out.push_back(64 * w + std::countr_zero(m));
    }
  }
}

bool clause_eval(const ClauseBank& bank, int j, const PatchSet& x, EvalMode mode) {
  return bank.evaluate(j, x, mode);
}

}  // namespace tmc::tm

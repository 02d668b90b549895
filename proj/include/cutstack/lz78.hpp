#pragma once

// LZ78 incremental parsing with (phrase index, bit) tokens.

#include <cstdint>
#include <ostream>
#include <vector>

#include "cutstack/exact.hpp"

namespace cutstack {

struct Lz78Token {
  std::uint32_t prefix;  // 0 is the empty phrase
  int bit;               // -1 for a trailing pointer-only phrase
};

/// Phrase i (1-based) costs ceil(log2 i) + 1 bits; a trailing incomplete phrase
/// repeats an earlier one and costs only its ceil(log2 i) pointer bits.
struct Lz78Parse {
  std::vector<Lz78Token> phrases;
  std::uint64_t code_length = 0;
  std::size_t input_length = 0;

  std::size_t complete_phrases() const {
    return phrases.empty() || phrases.back().bit >= 0 ? phrases.size() : phrases.size() - 1;
  }
};

unsigned ceil_log2(std::uint64_t i);

Lz78Parse lz78_encode(const BitString& x);
BitString lz78_decode(const Lz78Parse& parse);

/// The code as a bit string (pointer bits MSB first, then the bit), and back.
BitString lz78_bits(const Lz78Parse& parse);
BitString lz78_decode_bits(const BitString& code, std::size_t n);

/// code_length(x^n)/n at each checkpoint n.
std::vector<Rational> ratio_series(const BitString& x, const std::vector<std::size_t>& checkpoints);

/// Columns n, code_bits, ratio_decimal_20dp, ratio_exact.
void write_ratio_csv(std::ostream& os, const BitString& x, const std::vector<std::size_t>& checkpoints);

}  // namespace cutstack

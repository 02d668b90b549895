#include "cutstack/lz78.hpp"

#include <map>
#include <string>

#include "cutstack/error.hpp"

namespace cutstack {

unsigned ceil_log2(std::uint64_t i) {
  unsigned b = 0;
  while ((std::uint64_t{1} << b) < i) ++b;
  return b;
}

Lz78Parse lz78_encode(const BitString& x) {
  Lz78Parse out;
  out.input_length = x.size();
  // trie: (node, bit) -> child phrase index
  std::map<std::pair<std::uint32_t, int>, std::uint32_t> trie;
  std::uint32_t node = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const int b = x[k];
    auto it = trie.find({node, b});
    if (it != trie.end()) {
      node = it->second;
      continue;
    }
    const auto i = static_cast<std::uint32_t>(out.phrases.size() + 1);
    out.phrases.push_back({node, b});
    out.code_length += ceil_log2(i) + 1;
    trie[{node, b}] = i;
    node = 0;
  }
  if (node != 0) {
    const auto i = static_cast<std::uint32_t>(out.phrases.size() + 1);
    out.phrases.push_back({node, -1});
    out.code_length += ceil_log2(i);
  }
  return out;
}

namespace {

std::vector<std::string> phrase_table(const std::vector<Lz78Token>& tokens) {
  std::vector<std::string> dict{""};
  for (const auto& t : tokens) {
    if (t.prefix >= dict.size()) throw Error(Module::code, "bad_pointer", "phrase pointer out of range");
    dict.push_back(dict[t.prefix] + (t.bit < 0 ? "" : std::string(1, t.bit ? '1' : '0')));
  }
  return dict;
}

}  // namespace

BitString lz78_decode(const Lz78Parse& parse) {
  auto dict = phrase_table(parse.phrases);
  std::string s;
  for (std::size_t i = 1; i < dict.size(); ++i) s += dict[i];
  return BitString(s);
}

BitString lz78_bits(const Lz78Parse& parse) {
  BitString out;
  for (std::size_t i = 0; i < parse.phrases.size(); ++i) {
    const unsigned w = ceil_log2(i + 1);
    for (unsigned b = w; b-- > 0;) out.push_back((parse.phrases[i].prefix >> b) & 1u);
    if (parse.phrases[i].bit >= 0) out.push_back(parse.phrases[i].bit);
  }
  return out;
}

BitString lz78_decode_bits(const BitString& code, std::size_t n) {
  std::vector<std::string> dict{""};
  std::string s;
  std::size_t pos = 0;
  while (s.size() < n) {
    const unsigned w = ceil_log2(dict.size());
    if (pos + w > code.size()) throw Error(Module::code, "truncated", "code ends inside a pointer");
    std::uint32_t p = 0;
    for (unsigned b = 0; b < w; ++b) p = (p << 1) | static_cast<std::uint32_t>(code[pos++]);
    if (p >= dict.size()) throw Error(Module::code, "bad_pointer", "phrase pointer out of range");
    std::string phrase = dict[p];
    // A pointer that exactly fills the remaining length is the trailing partial phrase.
    if (s.size() + phrase.size() == n && p != 0) {
      s += phrase;
      break;
    }
    if (pos >= code.size()) throw Error(Module::code, "truncated", "code ends before a phrase bit");
    phrase.push_back(code[pos++] ? '1' : '0');
    s += phrase;
    dict.push_back(std::move(phrase));
  }
  if (s.size() != n || pos != code.size()) throw Error(Module::code, "length_mismatch", "decoded length disagrees with n");
  return BitString(s);
}

std::vector<Rational> ratio_series(const BitString& x, const std::vector<std::size_t>& checkpoints) {
  std::vector<Rational> out;
  std::size_t prev = 0;
  for (auto n : checkpoints) {
    if (n == 0 || n > x.size() || n < prev) throw Error(Module::code, "bad_checkpoint", "checkpoints must increase within 1..l(x)");
    prev = n;
    out.push_back(ratio(static_cast<long>(lz78_encode(x.prefix(n)).code_length), static_cast<long>(n)));
  }
  return out;
}

void write_ratio_csv(std::ostream& os, const BitString& x, const std::vector<std::size_t>& checkpoints) {
  auto ratios = ratio_series(x, checkpoints);
  os << "n,code_bits,ratio_decimal_20dp,ratio_exact\n";
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    const Rational bits = ratios[i] * static_cast<unsigned long>(checkpoints[i]);
    os << checkpoints[i] << ',' << bits.get_num().get_str() << ',' << to_decimal(ratios[i], 20) << ','
       << to_string(ratios[i]) << '\n';
  }
}

}  // namespace cutstack

#include <doctest.h>

#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "cutstack/lz78.hpp"

using namespace cutstack;

namespace {

// Independent parse on std::string with a phrase dictionary.
struct NaiveParse {
  std::vector<std::string> phrases;
  std::uint64_t bits = 0;
};

NaiveParse naive(const std::string& x) {
  NaiveParse out;
  std::map<std::string, std::size_t> dict;
  std::string cur;
  for (char c : x) {
    cur += c;
    if (!dict.count(cur)) {
      dict[cur] = dict.size() + 1;
      out.phrases.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) out.phrases.push_back(cur);
  for (std::size_t i = 1; i <= out.phrases.size(); ++i) {
    unsigned b = 0;
    while ((std::uint64_t{1} << b) < i) ++b;
    const bool partial = i == out.phrases.size() && !cur.empty();
    out.bits += b + (partial ? 0 : 1);
  }
  return out;
}

std::string joined(const Lz78Parse& p, const BitString& x) {
  std::string out;
  std::size_t pos = 0;
  std::vector<std::size_t> len{0};
  for (const auto& t : p.phrases) {
    std::size_t l = len[t.prefix] + (t.bit >= 0 ? 1 : 0);
    len.push_back(l);
    if (!out.empty()) out += '|';
    out += x.str().substr(pos, l);
    pos += l;
  }
  return out;
}

}  // namespace

TEST_CASE("LZ78 golden parse") {
  std::ifstream in(std::string(CUTSTACK_GOLDEN_DIR) + "/lz78_0010111010.txt");
  REQUIRE(in);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string input, phrases, code;
    std::uint64_t bits = 0;
    ss >> input >> phrases >> bits >> code;
    BitString x(input);
    auto p = lz78_encode(x);
    CHECK(joined(p, x) == phrases);
    CHECK(p.phrases.size() == 5);
    CHECK(p.code_length == bits);
    CHECK(lz78_bits(p).str() == code);
    CHECK(lz78_decode_bits(BitString(code), x.size()) == x);
  }
}

TEST_CASE("LZ78 all-zero string of length 1024") {
  BitString z(std::string(1024, '0'));
  auto p = lz78_encode(z);
  CHECK(p.code_length == naive(z.str()).bits);
  CHECK(p.code_length == 251);
  auto r = ratio_series(z, {1024});
  CHECK(r[0] == ratio(251, 1024));
  CHECK(p.complete_phrases() == 44);
}

TEST_CASE("LZ78 agrees with a naive parser and round-trips") {
  for (unsigned len = 0; len <= 12; ++len)
    for (std::uint64_t v = 0; v < (std::uint64_t{1} << len); ++v) {
      BitString x = BitString::from_uint(v, len);
      auto p = lz78_encode(x);
      auto n = naive(x.str());
      REQUIRE(p.phrases.size() == n.phrases.size());
      REQUIRE(p.code_length == n.bits);
      REQUIRE(lz78_decode(p) == x);
      REQUIRE(lz78_decode_bits(lz78_bits(p), len) == x);
    }
}

TEST_CASE("LZ78 ratio CSV") {
  std::ostringstream os;
  write_ratio_csv(os, BitString("0010111010"), {5, 10});
  const std::string s = os.str();
  CHECK(s.rfind("n,code_bits,ratio_decimal_20dp,ratio_exact\n", 0) == 0);
  CHECK(s.find("10,13,1.30000000000000000000,13/10") != std::string::npos);
}

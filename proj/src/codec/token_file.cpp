#include "apollo/codec/token_file.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "apollo/error.hpp"

namespace apollo::codec {
namespace {

template <typename T>
void put_le(std::ostream& out, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t,
                                                  std::conditional_t<sizeof(T) == 2, std::uint16_t,
                                                                     std::uint8_t>>>;
  const auto bits = std::bit_cast<U>(value);
  char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
  out.write(buf, sizeof(T));
}

template <typename T>
T get_le(std::istream& in, const char* field) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t,
                                                  std::conditional_t<sizeof(T) == 2, std::uint16_t,
                                                                     std::uint8_t>>>;
  unsigned char buf[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof(T))) {
    throw InputError(std::string("token file truncated while reading ") + field);
  }
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<U>(buf[i]) << (8 * i);
  return std::bit_cast<T>(bits);
}

}  // namespace

void write_tokens(std::ostream& out, const TokenSequence& seq) {
  out.write(kTokenFileMagic.data(), kTokenFileMagic.size());
  put_le<std::uint16_t>(out, kTokenFileVersion);
  put_le<std::uint8_t>(out, static_cast<std::uint8_t>(seq.config.rounding));
  put_le<std::uint8_t>(out, seq.norm.degenerate ? 1 : 0);
  put_le<std::uint32_t>(out, seq.config.quant_factor);
  put_le<double>(out, seq.norm.min_val);
  put_le<double>(out, seq.norm.max_val);
  put_le<std::uint64_t>(out, seq.tokens.size());
  for (Token t : seq.tokens) put_le<std::uint32_t>(out, t);
  if (!out) throw RuntimeError("failed writing token stream");
}

TokenSequence read_tokens(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kTokenFileMagic) {
    throw InputError("not a token file (bad magic)");
  }
  const auto version = get_le<std::uint16_t>(in, "version");
  if (version != kTokenFileVersion) {
    throw InputError("unsupported token file version " + std::to_string(version));
  }
  const auto rounding = get_le<std::uint8_t>(in, "rounding mode");
  if (rounding > 1) throw InputError("unknown rounding mode " + std::to_string(rounding));
  const auto flags = get_le<std::uint8_t>(in, "flags");

  TokenSequence seq;
  seq.config.rounding = static_cast<RoundingMode>(rounding);
  seq.config.quant_factor = get_le<std::uint32_t>(in, "quant factor");
  if (seq.config.quant_factor < 1) throw InputError("quant factor must be >= 1");
  seq.norm.degenerate = (flags & 1U) != 0;
  seq.norm.min_val = get_le<double>(in, "min_val");
  seq.norm.max_val = get_le<double>(in, "max_val");
  if (!(seq.norm.max_val >= seq.norm.min_val)) {
    throw InputError("token file has max_val < min_val");
  }
  const auto count = get_le<std::uint64_t>(in, "length");
  seq.tokens.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, 1U << 24)));
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto t = get_le<std::uint32_t>(in, "token");
    if (t > seq.config.quant_factor) {
      throw InputError("token " + std::to_string(t) + " at index " + std::to_string(i) +
                       " exceeds quant factor");
    }
    seq.tokens.push_back(t);
  }
  return seq;
}

void write_token_file(const std::filesystem::path& path, const TokenSequence& seq) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeError("cannot open " + path.string() + " for writing");
  write_tokens(out, seq);
}

TokenSequence read_token_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  return read_tokens(in);
}

}  // namespace apollo::codec

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "apollo/codec/codec.hpp"

namespace apollo::codec {

/// On-disk token stream, all fields little-endian:
///
///   offset  size  field
///        0     4  magic "APQT"
///        4     2  version (1)
///        6     1  rounding mode (0 floor, 1 nearest)
///        7     1  flags (bit 0: degenerate normalization record)
///        8     4  quant factor Q
///       12     8  min_val (IEEE-754 binary64)
///       20     8  max_val (IEEE-754 binary64)
///       28     8  token count N
///       36   4*N  token IDs (uint32)
inline constexpr std::array<char, 4> kTokenFileMagic{'A', 'P', 'Q', 'T'};
inline constexpr std::uint16_t kTokenFileVersion = 1;
inline constexpr std::size_t kTokenFileHeaderSize = 36;

void write_tokens(std::ostream& out, const TokenSequence& seq);
TokenSequence read_tokens(std::istream& in);

void write_token_file(const std::filesystem::path& path, const TokenSequence& seq);
TokenSequence read_token_file(const std::filesystem::path& path);

}  // namespace apollo::codec

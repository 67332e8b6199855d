#pragma once

// Text format for architecture pairs and the stable genotype hash.
//
//   normal:
//   node1: (c_k-1,sep_conv_3x3) + (c_k-2,skip_connect)
//   node2: (c_k-1,skip_connect) + (node1,max_pool_3x3)
//   reduction:
//   node1: ...
//
// Inputs are `c_k-1`, `c_k-2` or `node<j>`. Blank lines and lines starting
// with '#' are ignored by the parser. Members may appear in either order; the
// parser canonicalizes them. The serializer always writes canonical order and
// terminates every line with '\n'.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include "cmabnas/search_space.hpp"

namespace cmabnas {

class GenotypeParseError : public std::runtime_error
{
public:
    GenotypeParseError(std::size_t line, const std::string& reason);

    std::size_t line() const noexcept { return line_; }
    const std::string& reason() const noexcept { return reason_; }

private:
    std::size_t line_;
    std::string reason_;
};

std::string serialize_genotype(const SearchSpaceConfig& config, const ArchitecturePair& pair);
ArchitecturePair parse_genotype(const SearchSpaceConfig& config, std::string_view text);

/// 64-bit FNV-1a (offset basis 0xcbf29ce484222325, prime 0x100000001b3) over
/// the serialized genotype bytes.
std::uint64_t genotype_hash(const SearchSpaceConfig& config, const ArchitecturePair& pair);
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

/// Lower-case, zero-padded, 16 hex digits.
std::string format_hash(std::uint64_t hash);
/// Throws std::invalid_argument on anything but 1..16 hex digits.
std::uint64_t parse_hash(std::string_view text);

} // namespace cmabnas

#pragma once

#include <filesystem>
#include <variant>

#include "cscn/models.hpp"

namespace cscn {

using AnyModel = std::variant<CsrNetParams, AsrNetParams>;

inline Architecture model_architecture(const AnyModel& m) {
  return std::holds_alternative<CsrNetParams>(m) ? Architecture::csrnet
                                                 : Architecture::asrnet;
}

// "CSCN" container: magic, version u32, architecture u8, B u32, m u32,
// matrix seed u64 (zero for ASRNet), then per-layer records in network order.
// Each record: kind u8 (1 = FC, 2 = conv), four u32 dims (FC: out, in,
// has_bias, 0; conv: out, in, k, k), weights then biases as float32
// row-major. Everything little-endian; round trips are bit-identical.
void save_model(const CsrNetParams& params, const std::filesystem::path& path);
void save_model(const AsrNetParams& params, const std::filesystem::path& path);
void save_model(const AnyModel& params, const std::filesystem::path& path);

AnyModel load_model(const std::filesystem::path& path);

// Typed loads; reject files carrying the other architecture tag.
CsrNetParams load_csrnet(const std::filesystem::path& path);
AsrNetParams load_asrnet(const std::filesystem::path& path);

}  // namespace cscn

#pragma once

// TGBH head model file, little-endian:
//   "TGBH" | version u32 | D u32 | region_count u32 | region sizes u32[] |
//   filters u32 | hidden u32 | N u32 | seed u64 | float32 tensors in
//   HeadParams::tensors() order

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "tagrec/head.hpp"

namespace tagrec {

inline constexpr char kModelMagic[4] = {'T', 'G', 'B', 'H'};
inline constexpr std::uint32_t kModelVersion = 1;

void write_model(std::ostream& out, const HeadModel& model);
HeadModel read_model(std::istream& in);

void save_model(const HeadModel& model, const std::filesystem::path& path);
HeadModel load_model(const std::filesystem::path& path);

}  // namespace tagrec

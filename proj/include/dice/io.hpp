#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace dice {

// Round-trip decimal (17 significant digits).
std::string fmt(double v);
std::string fmt(long long v);
inline std::string fmt(int v) { return fmt(static_cast<long long>(v)); }

std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t v);

void write_text_file(const std::string& path, std::string_view data);

}  // namespace dice

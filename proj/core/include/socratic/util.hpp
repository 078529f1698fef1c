#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace socratic {

std::string_view trim_view(std::string_view s) noexcept;
inline std::string trim(std::string_view s) { return std::string(trim_view(s)); }

bool starts_with_icase(std::string_view s, std::string_view prefix) noexcept;

/// FNV-1a, 64 bit. Stable across platforms and runs; used for seeds and
/// mock determinism, never for security.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL) noexcept;

/// One step of splitmix64; returns the next output and advances `state`.
std::uint64_t splitmix64(std::uint64_t& state) noexcept;

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double value);

std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace socratic

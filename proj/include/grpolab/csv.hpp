#ifndef GRPOLAB_CSV_HPP_
#define GRPOLAB_CSV_HPP_

#include <cstdint>
#include <string>
#include <string_view>

namespace grpolab {

// Locale-independent decimal formatting with 12 significant digits; the CSV
// byte-determinism contract depends on it.
std::string format_double(double value);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view content);

// FNV-1a, used for config hashes and the manifest file inventory.
std::uint64_t fnv1a(std::string_view bytes);
std::string to_hex(std::uint64_t value);

}  // namespace grpolab

#endif  // GRPOLAB_CSV_HPP_

#ifndef CISNET_COMMON_HPP
#define CISNET_COMMON_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace cisnet {

/// Error thrown on contract violations (bad shapes, malformed files, ...).
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

using Shape = std::vector<int64_t>;

int64_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Writes `content` to `path` via a temp file + rename so readers never see
/// a partially written file.
void write_file_atomic(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

/// FNV-1a 64-bit hash, used for config fingerprints and RNG stream tags.
uint64_t fnv1a64(const std::string& text);

std::string to_hex(uint64_t value);

}  // namespace cisnet

#endif

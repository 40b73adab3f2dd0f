#ifndef CISNET_CONFIG_HPP
#define CISNET_CONFIG_HPP

#include <string>
#include <utility>
#include <vector>

#include "cisnet/common.hpp"

namespace cisnet {

/// Plain-text `key = value` configuration with optional [section] headers and
/// '#' comments. Order-preserving; duplicate keys within a section are errors.
class KeyValueConfig {
public:
  static KeyValueConfig parse(const std::string& text);
  std::string serialize() const;

  void set(const std::string& section, const std::string& key, const std::string& value);
  bool has(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key) const;
  std::string get_or(const std::string& section, const std::string& key,
                     const std::string& fallback) const;

  /// Key/value pairs of one section, in file order. "" is the unnamed section.
  const std::vector<std::pair<std::string, std::string>>& entries(
      const std::string& section) const;
  std::vector<std::string> sections() const;

private:
  struct Section {
    std::string name;
    std::vector<std::pair<std::string, std::string>> entries;
  };
  Section* find(const std::string& name);
  const Section* find(const std::string& name) const;
  std::vector<Section> sections_;
};

}  // namespace cisnet

#endif

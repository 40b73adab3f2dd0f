#include "cisnet/config.hpp"

#include <sstream>

namespace cisnet {

namespace {
std::string trim(const std::string& s) {
  const size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}
}  // namespace

KeyValueConfig KeyValueConfig::parse(const std::string& text) {
  KeyValueConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw Error("config line " + std::to_string(lineno) + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw Error("config line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw Error("config line " + std::to_string(lineno) + ": empty key");
    if (cfg.has(section, key))
      throw Error("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    cfg.set(section, key, value);
  }
  return cfg;
}

std::string KeyValueConfig::serialize() const {
  std::ostringstream out;
  for (const Section& s : sections_) {
    if (!s.name.empty()) out << "[" << s.name << "]\n";
    for (const auto& [k, v] : s.entries) out << k << " = " << v << "\n";
  }
  return out.str();
}

KeyValueConfig::Section* KeyValueConfig::find(const std::string& name) {
  for (Section& s : sections_)
    if (s.name == name) return &s;
  return nullptr;
}

const KeyValueConfig::Section* KeyValueConfig::find(const std::string& name) const {
  for (const Section& s : sections_)
    if (s.name == name) return &s;
  return nullptr;
}

void KeyValueConfig::set(const std::string& section, const std::string& key,
                         const std::string& value) {
  Section* s = find(section);
  if (!s) {
    sections_.push_back({section, {}});
    s = &sections_.back();
  }
  for (auto& [k, v] : s->entries)
    if (k == key) {
      v = value;
      return;
    }
  s->entries.emplace_back(key, value);
}

bool KeyValueConfig::has(const std::string& section, const std::string& key) const {
  const Section* s = find(section);
  if (!s) return false;
  for (const auto& [k, v] : s->entries)
    if (k == key) return true;
  return false;
}

std::string KeyValueConfig::get(const std::string& section, const std::string& key) const {
  const Section* s = find(section);
  if (s)
    for (const auto& [k, v] : s->entries)
      if (k == key) return v;
  throw Error("missing config key '" + key + "'" +
              (section.empty() ? "" : " in section [" + section + "]"));
}

std::string KeyValueConfig::get_or(const std::string& section, const std::string& key,
                                   const std::string& fallback) const {
  return has(section, key) ? get(section, key) : fallback;
}

const std::vector<std::pair<std::string, std::string>>& KeyValueConfig::entries(
    const std::string& section) const {
  static const std::vector<std::pair<std::string, std::string>> empty;
  const Section* s = find(section);
  return s ? s->entries : empty;
}

std::vector<std::string> KeyValueConfig::sections() const {
  std::vector<std::string> names;
  for (const Section& s : sections_) names.push_back(s.name);
  return names;
}

}  // namespace cisnet

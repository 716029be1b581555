#include "nsedit/config.hpp"

#include <cstdint>
#include <fstream>
#include <sstream>

#include "nsedit/errors.hpp"

namespace nsedit {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

KeyValueConfig KeyValueConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::file_not_found, path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_string(ss.str());
  } catch (const Error& e) {
    throw Error(Errc::config_error, path + ": " + e.what());
  }
}

KeyValueConfig KeyValueConfig::parse_string(const std::string& text) {
  KeyValueConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw Error(Errc::config_error, "line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) {
      throw Error(Errc::config_error, "line " + std::to_string(lineno) + ": empty key");
    }
    cfg.entries_[key] = value;
  }
  return cfg;
}

bool KeyValueConfig::has(const std::string& key) const { return entries_.count(key) > 0; }

std::string KeyValueConfig::get(const std::string& key, const std::string& fallback) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    throw Error(Errc::config_error, key + ": not a number: " + it->second);
  }
}

long KeyValueConfig::get_int(const std::string& key, long fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  try {
    return std::stol(it->second);
  } catch (const std::exception&) {
    throw Error(Errc::config_error, key + ": not an integer: " + it->second);
  }
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  const std::string& v = it->second;
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw Error(Errc::config_error, key + ": not a boolean: " + v);
}

std::vector<double> KeyValueConfig::get_doubles(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return {};
  std::vector<double> out;
  std::istringstream ss(it->second);
  std::string token;
  while (std::getline(ss, token, ',')) {
    const std::string t = trim(token);
    if (t.empty()) continue;
    try {
      out.push_back(std::stod(t));
    } catch (const std::exception&) {
      throw Error(Errc::config_error, key + ": not a number list: " + it->second);
    }
  }
  return out;
}

void KeyValueConfig::set(const std::string& key, const std::string& value) {
  entries_[key] = value;
}

std::string KeyValueConfig::canonical_text() const {
  std::ostringstream os;
  for (const auto& [k, v] : entries_) {  // std::map iterates sorted
    os << k << " = " << v << '\n';
  }
  return os.str();
}

std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

std::string KeyValueConfig::hash() const { return fnv1a_hex(canonical_text()); }

}  // namespace nsedit

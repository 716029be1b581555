#ifndef NSEDIT_CONFIG_HPP
#define NSEDIT_CONFIG_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace nsedit {

// Flat "dotted.key = value" configuration document. Lines starting with '#'
// and blank lines are ignored. Keys are unique; later assignments win.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig parse_file(const std::string& path);
  static KeyValueConfig parse_string(const std::string& text);

  bool has(const std::string& key) const;
  std::string get(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long get_int(const std::string& key, long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key) const;  // comma separated

  void set(const std::string& key, const std::string& value);

  // canonical text: keys sorted, single "key = value" per line
  std::string canonical_text() const;
  // FNV-1a 64 of the canonical text, as 16 hex digits
  std::string hash() const;

  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
};

std::string fnv1a_hex(const std::string& data);

}  // namespace nsedit

#endif

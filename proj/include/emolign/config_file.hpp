#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace emolign {

// Plain-text key=value configuration. '#' starts a comment, blank lines are
// ignored, keys are unique. Reads are tracked so callers can reject keys that
// no consumer recognized.
class KeyValues {
 public:
  KeyValues() = default;

  static KeyValues parse_file(const std::string& path);
  static KeyValues parse_text(const std::string& text, const std::string& origin);

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  void set(const std::string& key, const std::string& value);

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;

  // Keys present in the file that no get_* call ever touched.
  std::vector<std::string> unused_keys() const;
  void reject_unknown() const;  // throws ValidationError when unused keys exist

  const std::string& origin() const { return origin_; }

 private:
  std::map<std::string, std::string> entries_;
  mutable std::set<std::string> used_;
  std::string origin_ = "<memory>";
};

}  // namespace emolign

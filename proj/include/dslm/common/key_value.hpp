#pragma once

#include <map>
#include <string>
#include <vector>

namespace dslm {

// Flat `key = value` text with `#` comments. Keys keep file order for error
// messages; duplicates are rejected.
class KeyValueFile {
 public:
  static KeyValueFile parse(const std::string& text, const std::string& origin = "<config>");
  static KeyValueFile load(const std::string& path);

  bool contains(const std::string& key) const { return values_.count(key) != 0; }
  const std::string& get(const std::string& key) const;
  const std::vector<std::string>& keys() const { return order_; }
  void set(const std::string& key, const std::string& value);
  std::string to_string() const;

  // Throws naming the first key not in `known`.
  void reject_unknown(const std::vector<std::string>& known) const;

 private:
  std::map<std::string, std::string> values_;
  std::vector<std::string> order_;
  std::string origin_;
};

double parse_double(const std::string& text, const std::string& what);
long long parse_int(const std::string& text, const std::string& what);
std::vector<int> parse_int_list(const std::string& text, const std::string& what);
std::string join_ints(const std::vector<int>& values);

}  // namespace dslm

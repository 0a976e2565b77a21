#include "dslm/common/key_value.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "dslm/common/error.hpp"

namespace dslm {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

KeyValueFile KeyValueFile::parse(const std::string& text, const std::string& origin) {
  KeyValueFile kv;
  kv.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(origin + ":" + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw Error(origin + ":" + std::to_string(line_no) + ": empty key");
    if (kv.contains(key)) {
      throw Error(origin + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    kv.set(key, value);
  }
  return kv;
}

KeyValueFile KeyValueFile::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path);
}

const std::string& KeyValueFile::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw Error(origin_ + ": missing key '" + key + "'");
  return it->second;
}

void KeyValueFile::set(const std::string& key, const std::string& value) {
  if (!contains(key)) order_.push_back(key);
  values_[key] = value;
}

std::string KeyValueFile::to_string() const {
  std::string out;
  for (const auto& k : order_) out += k + " = " + values_.at(k) + "\n";
  return out;
}

void KeyValueFile::reject_unknown(const std::vector<std::string>& known) const {
  for (const auto& k : order_) {
    if (std::find(known.begin(), known.end(), k) == known.end()) {
      throw Error(origin_ + ": unknown config key '" + k + "'");
    }
  }
}

double parse_double(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw Error("invalid number for " + what + ": '" + text + "'");
  }
}

long long parse_int(const std::string& text, const std::string& what) {
  long long v = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw Error("invalid integer for " + what + ": '" + text + "'");
  }
  return v;
}

std::vector<int> parse_int_list(const std::string& text, const std::string& what) {
  std::vector<int> out;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) out.push_back(static_cast<int>(parse_int(tok, what)));
  return out;
}

std::string join_ints(const std::vector<int>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ' ';
    out += std::to_string(values[i]);
  }
  return out;
}

}  // namespace dslm

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mtsim {

// Minimal TOML reader covering what run configs need: [section] headers,
// bare keys, strings, integers, floats, booleans and single-line string
// arrays, with # comments. Keys are exposed as "section.key". Every lookup
// marks its key consumed so callers can reject unknown keys afterwards.
class TomlTable {
 public:
  // Throws ConfigError with a line number on syntax errors.
  static TomlTable parse(const std::string& text);

  std::optional<long long> take_int(const std::string& key);
  std::optional<double> take_double(const std::string& key);  // accepts ints
  std::optional<bool> take_bool(const std::string& key);
  std::optional<std::string> take_string(const std::string& key);
  std::optional<std::vector<std::string>> take_string_array(const std::string& key);

  // Throws ConfigError naming the first key nobody consumed.
  void ensure_all_consumed() const;

 private:
  struct Value {
    enum class Type { String, Integer, Float, Boolean, StringArray };
    Type type = Type::String;
    std::string str;
    long long integer = 0;
    double real = 0.0;
    bool boolean = false;
    std::vector<std::string> strings;
    int line = 0;
    mutable bool consumed = false;
  };

  const Value* find(const std::string& key) const;

  std::map<std::string, Value> values_;
  std::vector<std::string> order_;
};

}  // namespace mtsim

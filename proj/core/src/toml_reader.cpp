#include "mtsim/toml_reader.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>
#include <sstream>

#include "mtsim/errors.hpp"

namespace mtsim {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Cut a trailing comment, respecting quoted strings.
std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (c == '"' && (i == 0 || line[i - 1] != '\\')) in_string = !in_string;
    if (c == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

bool valid_key(const std::string& k) {
  if (k.empty()) return false;
  for (char c : k)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-')
      return false;
  return true;
}

std::string parse_quoted(const std::string& raw, int line_no) {
  if (raw.size() < 2 || raw.front() != '"' || raw.back() != '"')
    throw ConfigError("config line " + std::to_string(line_no) +
                      ": malformed string " + raw);
  std::string out;
  for (std::size_t i = 1; i + 1 < raw.size(); ++i) {
    if (raw[i] == '\\' && i + 2 < raw.size()) {
      ++i;
      switch (raw[i]) {
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        default:
          throw ConfigError("config line " + std::to_string(line_no) +
                            ": unsupported escape \\" + raw[i]);
      }
    } else {
      out += raw[i];
    }
  }
  return out;
}

}  // namespace

TomlTable TomlTable::parse(const std::string& text) {
  TomlTable table;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("config line " + std::to_string(line_no) +
                          ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!valid_key(section))
        throw ConfigError("config line " + std::to_string(line_no) +
                          ": invalid section name '" + section + "'");
      continue;
    }

    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (!valid_key(key))
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": invalid key '" + key + "'");
    if (val.empty())
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": missing value for '" + key + "'");

    std::string full = section.empty() ? key : section + "." + key;
    if (table.values_.count(full))
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": duplicate key '" + full + "'");

    Value v;
    v.line = line_no;
    if (val.front() == '"') {
      v.type = Value::Type::String;
      v.str = parse_quoted(val, line_no);
    } else if (val == "true" || val == "false") {
      v.type = Value::Type::Boolean;
      v.boolean = val == "true";
    } else if (val.front() == '[') {
      if (val.back() != ']')
        throw ConfigError("config line " + std::to_string(line_no) +
                          ": arrays must close on the same line");
      v.type = Value::Type::StringArray;
      std::string body = trim(val.substr(1, val.size() - 2));
      while (!body.empty()) {
        std::size_t comma = std::string::npos;
        bool in_string = false;
        for (std::size_t i = 0; i < body.size(); ++i) {
          char c = body[i];
          if (c == '"' && (i == 0 || body[i - 1] != '\\')) in_string = !in_string;
          if (c == ',' && !in_string) {
            comma = i;
            break;
          }
        }
        std::string item = trim(comma == std::string::npos ? body : body.substr(0, comma));
        if (!item.empty()) v.strings.push_back(parse_quoted(item, line_no));
        if (comma == std::string::npos) break;
        body = trim(body.substr(comma + 1));
      }
    } else {
      const char* begin = val.data();
      const char* end = begin + val.size();
      long long iv = 0;
      auto [p, ec] = std::from_chars(begin, end, iv);
      if (ec == std::errc() && p == end) {
        v.type = Value::Type::Integer;
        v.integer = iv;
      } else {
        char* dend = nullptr;
        double dv = std::strtod(begin, &dend);
        if (dend != end)
          throw ConfigError("config line " + std::to_string(line_no) +
                            ": cannot parse value '" + val + "'");
        v.type = Value::Type::Float;
        v.real = dv;
      }
    }
    table.values_.emplace(full, std::move(v));
    table.order_.push_back(full);
  }
  return table;
}

const TomlTable::Value* TomlTable::find(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return nullptr;
  it->second.consumed = true;
  return &it->second;
}

std::optional<long long> TomlTable::take_int(const std::string& key) {
  const Value* v = find(key);
  if (!v) return std::nullopt;
  if (v->type != Value::Type::Integer)
    throw ConfigError("config key '" + key + "' (line " + std::to_string(v->line) +
                      ") expects an integer");
  return v->integer;
}

std::optional<double> TomlTable::take_double(const std::string& key) {
  const Value* v = find(key);
  if (!v) return std::nullopt;
  if (v->type == Value::Type::Integer) return static_cast<double>(v->integer);
  if (v->type != Value::Type::Float)
    throw ConfigError("config key '" + key + "' (line " + std::to_string(v->line) +
                      ") expects a number");
  return v->real;
}

std::optional<bool> TomlTable::take_bool(const std::string& key) {
  const Value* v = find(key);
  if (!v) return std::nullopt;
  if (v->type != Value::Type::Boolean)
    throw ConfigError("config key '" + key + "' (line " + std::to_string(v->line) +
                      ") expects true or false");
  return v->boolean;
}

std::optional<std::string> TomlTable::take_string(const std::string& key) {
  const Value* v = find(key);
  if (!v) return std::nullopt;
  if (v->type != Value::Type::String)
    throw ConfigError("config key '" + key + "' (line " + std::to_string(v->line) +
                      ") expects a quoted string");
  return v->str;
}

std::optional<std::vector<std::string>> TomlTable::take_string_array(
    const std::string& key) {
  const Value* v = find(key);
  if (!v) return std::nullopt;
  if (v->type != Value::Type::StringArray)
    throw ConfigError("config key '" + key + "' (line " + std::to_string(v->line) +
                      ") expects an array of strings");
  return v->strings;
}

void TomlTable::ensure_all_consumed() const {
  for (const std::string& key : order_) {
    auto it = values_.find(key);
    if (it != values_.end() && !it->second.consumed)
      throw ConfigError("unknown config key '" + key + "' (line " +
                        std::to_string(it->second.line) + ")");
  }
}

}  // namespace mtsim

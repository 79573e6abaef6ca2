#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

namespace vlmplan::toml {

class TomlError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Parses the TOML subset used by case manifests and harness.toml into a JSON
// tree: key/value pairs (basic and literal strings, integers, floats,
// booleans), possibly multi-line arrays, table headers ([a.b."c d"]), dotted
// and quoted keys, and # comments. Arrays of tables, inline tables, and
// dates are not supported. Throws TomlError with a line number.
nlohmann::json parse(std::string_view text);

}  // namespace vlmplan::toml

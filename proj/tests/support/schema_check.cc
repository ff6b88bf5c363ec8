#include "support/schema_check.h"

#include <set>

#include <json.hpp>

namespace gdec::testing {

namespace {

bool conforms(const nlohmann::json& value, const gdec::Schema& schema, std::string& why) {
  using Kind = gdec::Schema::Kind;
  switch (schema.kind) {
    case Kind::kString:
      if (!value.is_string()) {
        why = "expected string";
        return false;
      }
      return true;
    case Kind::kNumber:
      if (!value.is_number()) {
        why = "expected number";
        return false;
      }
      return true;
    case Kind::kBoolean:
      if (!value.is_boolean()) {
        why = "expected boolean";
        return false;
      }
      return true;
    case Kind::kObject: {
      if (!value.is_object()) {
        why = "expected object";
        return false;
      }
      std::set<std::string> expected;
      for (const auto& [key, child] : schema.properties) expected.insert(key);
      for (const auto& [key, v] : value.items()) {
        if (expected.count(key) == 0) {
          why = "unexpected key \"" + key + "\"";
          return false;
        }
      }
      for (const auto& [key, child] : schema.properties) {
        if (!value.contains(key)) {
          why = "missing key \"" + key + "\"";
          return false;
        }
        if (!conforms(value[key], child, why)) return false;
      }
      return true;
    }
    case Kind::kArray: {
      if (!value.is_array()) {
        why = "expected array";
        return false;
      }
      for (const auto& item : value) {
        if (!conforms(item, schema.items.front(), why)) return false;
      }
      return true;
    }
  }
  why = "corrupt schema";
  return false;
}

}  // namespace

bool json_conforms(const std::string& text, const gdec::Schema& schema, std::string* why) {
  std::string reason;
  nlohmann::json value = nlohmann::json::parse(text, nullptr, false);
  if (value.is_discarded()) {
    reason = "not valid JSON";
  } else if (conforms(value, schema, reason)) {
    if (why) why->clear();
    return true;
  }
  if (why) *why = reason;
  return false;
}

}  // namespace gdec::testing

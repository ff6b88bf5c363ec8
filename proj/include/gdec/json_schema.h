/*!
 * \file gdec/json_schema.h
 * \brief Supported JSON-schema subset: object with all-required properties,
 *        string, number, boolean, array-of-T. Anything else raises
 *        UnsupportedSchemaError naming the feature.
 */
#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace gdec {

struct Schema {
  enum class Kind { kObject, kArray, kString, kNumber, kBoolean };

  Kind kind = Kind::kString;
  /// kObject: properties in declaration order; every property is required.
  std::vector<std::pair<std::string, Schema>> properties;
  /// kArray: exactly one element, the item schema.
  std::vector<Schema> items;
};

/// Parses a schema document. Property order follows the JSON text, which is
/// also the only key order the generated constraints accept.
Schema parse_schema(const std::string& json_text);
Schema load_schema(const std::string& path);

using SchemaPtr = std::shared_ptr<const Schema>;

}  // namespace gdec

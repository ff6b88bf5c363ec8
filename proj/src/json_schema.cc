#include "gdec/json_schema.h"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "gdec/error.h"

namespace gdec {

namespace {

using ordered_json = nlohmann::ordered_json;

// Keywords that carry no constraint semantics for this subset.
bool is_annotation(const std::string& key) {
  return key == "$schema" || key == "$id" || key == "title" || key == "description" ||
         key == "examples" || key == "default";
}

Schema parse_node(const ordered_json& node, const std::string& where) {
  if (!node.is_object()) {
    throw UnsupportedSchemaError(where + ": schema node must be an object");
  }
  if (!node.contains("type")) {
    if (node.contains("anyOf") || node.contains("oneOf") || node.contains("allOf")) {
      throw UnsupportedSchemaError(where + ": anyOf/oneOf/allOf are not supported");
    }
    throw UnsupportedSchemaError(where + ": missing \"type\"");
  }
  if (!node["type"].is_string()) {
    throw UnsupportedSchemaError(where + ": \"type\" must be a single string");
  }
  const std::string type = node["type"].get<std::string>();

  // Reject unknown constraint keywords so nothing is silently ignored.
  for (const auto& [key, value] : node.items()) {
    if (key == "type" || is_annotation(key)) continue;
    if (type == "object" && (key == "properties" || key == "required")) continue;
    if (type == "object" && key == "additionalProperties") {
      if (!value.is_boolean() || value.get<bool>()) {
        throw UnsupportedSchemaError(where + ": additionalProperties must be false");
      }
      continue;
    }
    if (type == "array" && key == "items") continue;
    throw UnsupportedSchemaError(where + ": unsupported keyword \"" + key + "\"");
  }

  Schema out;
  if (type == "string") {
    out.kind = Schema::Kind::kString;
  } else if (type == "number") {
    out.kind = Schema::Kind::kNumber;
  } else if (type == "boolean") {
    out.kind = Schema::Kind::kBoolean;
  } else if (type == "object") {
    out.kind = Schema::Kind::kObject;
    const auto props_it = node.find("properties");
    if (props_it == node.end() || !props_it->is_object()) {
      throw UnsupportedSchemaError(where + ": object needs a \"properties\" object");
    }
    std::set<std::string> required;
    if (auto req_it = node.find("required"); req_it != node.end()) {
      if (!req_it->is_array()) throw UnsupportedSchemaError(where + ": \"required\" must be an array");
      for (const auto& r : *req_it) {
        if (!r.is_string()) throw UnsupportedSchemaError(where + ": \"required\" entries must be strings");
        required.insert(r.get<std::string>());
      }
    }
    for (const auto& [name, child] : props_it->items()) {
      if (required.count(name) == 0) {
        throw UnsupportedSchemaError(where + ": optional property \"" + name +
                                     "\" (all properties must be listed in \"required\")");
      }
      required.erase(name);
      for (unsigned char c : name) {
        if (c < 0x20 || c == '"' || c == '\\') {
          throw UnsupportedSchemaError(where + ": property name \"" + name +
                                       "\" contains characters that require escaping");
        }
      }
      out.properties.emplace_back(name, parse_node(child, where + "/" + name));
    }
    if (!required.empty()) {
      throw UnsupportedSchemaError(where + ": required property \"" + *required.begin() +
                                   "\" is not declared in \"properties\"");
    }
  } else if (type == "array") {
    out.kind = Schema::Kind::kArray;
    const auto items_it = node.find("items");
    if (items_it == node.end()) {
      throw UnsupportedSchemaError(where + ": array needs an \"items\" schema");
    }
    out.items.push_back(parse_node(*items_it, where + "/items"));
  } else {
    throw UnsupportedSchemaError(where + ": unsupported type \"" + type + "\"");
  }
  return out;
}

}  // namespace

Schema parse_schema(const std::string& json_text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("schema is not valid JSON: ") + e.what());
  }
  return parse_node(doc, "$");
}

Schema load_schema(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_schema(buf.str());
}

}  // namespace gdec

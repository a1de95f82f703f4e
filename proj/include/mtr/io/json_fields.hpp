#pragma once

#include <set>
#include <string>

#include <json.hpp>

#include "mtr/core/error.hpp"

namespace mtr::io {

/// Reads optional typed fields from a JSON object and rejects unknown keys.
///
///   FieldReader r(doc, "generator config");
///   r.get("base_channels", config.base_channels);
///   r.finish();
class FieldReader {
 public:
  FieldReader(const nlohmann::json& doc, std::string context)
      : doc_(doc), context_(std::move(context)) {
    if (!doc_.is_object()) throw SchemaError(context_ + ": expected a JSON object");
  }

  template <class T>
  bool get(const std::string& key, T& out) {
    seen_.insert(key);
    auto it = doc_.find(key);
    if (it == doc_.end() || it->is_null()) return false;
    try {
      out = it->template get<T>();
    } catch (const nlohmann::json::exception&) {
      throw SchemaError(context_ + ": field '" + key + "' has the wrong type");
    }
    return true;
  }

  const nlohmann::json* child(const std::string& key) {
    seen_.insert(key);
    auto it = doc_.find(key);
    return it == doc_.end() || it->is_null() ? nullptr : &*it;
  }

  void finish() const {
    for (const auto& item : doc_.items()) {
      if (!seen_.count(item.key())) {
        throw SchemaError(context_ + ": unknown field '" + item.key() + "'");
      }
    }
  }

 private:
  const nlohmann::json& doc_;
  std::string context_;
  std::set<std::string> seen_;
};

}  // namespace mtr::io

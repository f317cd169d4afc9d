#include "dpcopula/schema_config.hpp"

#include <fstream>
#include <sstream>

#include "dpcopula/errors.hpp"

namespace dpcopula {

using nlohmann::json;

namespace {

BinRule bin_rule_from_json(const json& j, const std::string& attribute) {
  if (!j.is_object()) throw ConfigError("attribute '" + attribute + "': binning must be an object");
  BinRule rule;
  rule.lower = j.at("lower").get<double>();
  rule.upper = j.at("upper").get<double>();
  rule.edges = j.at("edges").get<std::vector<double>>();
  const std::string closed = j.value("closed", "left");
  if (closed == "left") {
    rule.closure = BinClosure::left;
  } else if (closed == "right") {
    rule.closure = BinClosure::right;
  } else {
    throw ConfigError("attribute '" + attribute + "': 'closed' must be \"left\" or \"right\"");
  }
  return rule;
}

}  // namespace

AttributeSchema schema_from_json(const json& doc) {
  try {
    if (!doc.is_object() || !doc.contains("attributes") || !doc["attributes"].is_array()) {
      throw ConfigError("schema document needs an \"attributes\" array");
    }
    std::vector<AttributeSpec> specs;
    for (const auto& a : doc["attributes"]) {
      AttributeSpec spec;
      spec.name = a.at("name").get<std::string>();
      spec.kind = parse_attribute_kind(a.value("kind", "categorical"));
      if (a.contains("binning")) spec.binning = bin_rule_from_json(a["binning"], spec.name);
      if (a.contains("vocabulary")) {
        if (spec.binning) throw ConfigError("attribute '" + spec.name + "' has both a vocabulary and a binning rule");
        spec.vocabulary = a["vocabulary"].get<std::vector<std::string>>();
      }
      specs.push_back(std::move(spec));
    }
    return AttributeSchema(std::move(specs));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed schema document: ") + e.what());
  }
}

json schema_to_json(const AttributeSchema& schema) {
  json attrs = json::array();
  for (const auto& a : schema.attributes()) {
    json j;
    j["name"] = a.name;
    j["kind"] = std::string(to_string(a.kind));
    if (a.binning) {
      j["binning"] = {{"lower", a.binning->lower},
                      {"upper", a.binning->upper},
                      {"edges", a.binning->edges},
                      {"closed", a.binning->closure == BinClosure::left ? "left" : "right"}};
    } else {
      j["vocabulary"] = a.vocabulary;
    }
    attrs.push_back(std::move(j));
  }
  return json{{"attributes", std::move(attrs)}};
}

AttributeSchema parse_schema(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("schema is not valid JSON: ") + e.what());
  }
  return schema_from_json(doc);
}

AttributeSchema load_schema(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open schema " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_schema(ss.str());
}

}  // namespace dpcopula

#include "docforge/kie_schema.hpp"

#include <set>

#include <nlohmann/json.hpp>

namespace docforge::reward {

using nlohmann::json;

namespace {

KieType parse_type(const json& v, const std::string& path);

std::vector<KieField> parse_fields(const json& obj, const std::string& path) {
    if (!obj.is_object()) {
        throw SchemaParseError("schema at " + path + ": expected an object");
    }
    if (obj.empty()) {
        throw SchemaParseError("schema at " + path + ": object must declare fields");
    }
    std::vector<KieField> fields;
    std::set<std::string> seen;
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        KieField f;
        f.name = it.key();
        if (!f.name.empty() && f.name.back() == '?') {
            f.name.pop_back();
            f.required = false;
        }
        if (f.name.empty()) {
            throw SchemaParseError("schema at " + path + ": empty field name");
        }
        if (!seen.insert(f.name).second) {
            throw SchemaParseError("schema at " + path + ": duplicate field \"" +
                                   f.name + "\"");
        }
        f.type = parse_type(it.value(), path + "." + f.name);
        fields.push_back(std::move(f));
    }
    return fields;
}

KieType parse_type(const json& v, const std::string& path) {
    KieType t;
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        if (s == "string") {
            t.kind = KieType::Kind::String;
        } else if (s == "number") {
            t.kind = KieType::Kind::Number;
        } else {
            throw SchemaParseError("schema at " + path + ": unknown type \"" + s +
                                   "\" (want string|number)");
        }
    } else if (v.is_object()) {
        t.kind = KieType::Kind::Object;
        t.fields = parse_fields(v, path);
    } else if (v.is_array()) {
        if (v.size() != 1) {
            throw SchemaParseError("schema at " + path +
                                   ": array type takes exactly one element type");
        }
        t.kind = KieType::Kind::Array;
        t.element = std::make_shared<KieType>(parse_type(v[0], path + "[]"));
    } else {
        throw SchemaParseError("schema at " + path + ": unsupported declaration");
    }
    return t;
}

json type_to_json(const KieType& t) {
    switch (t.kind) {
        case KieType::Kind::String: return "string";
        case KieType::Kind::Number: return "number";
        case KieType::Kind::Array: return json::array({type_to_json(*t.element)});
        case KieType::Kind::Object: {
            json obj = json::object();
            for (const KieField& f : t.fields) {
                obj[f.required ? f.name : f.name + "?"] = type_to_json(f.type);
            }
            return obj;
        }
    }
    return "string";
}

}  // namespace

KieSchema parse_kie_schema(std::string_view text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw SchemaParseError(std::string("schema is not valid JSON: ") + e.what());
    }
    KieSchema schema;
    schema.fields = parse_fields(root, "$");
    return schema;
}

std::string serialize_kie_schema(const KieSchema& schema) {
    json obj = json::object();
    for (const KieField& f : schema.fields) {
        obj[f.required ? f.name : f.name + "?"] = type_to_json(f.type);
    }
    return obj.dump();
}

}  // namespace docforge::reward

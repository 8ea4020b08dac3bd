#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace docforge::reward {

class SchemaParseError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct KieField;

struct KieType {
    enum class Kind { String, Number, Object, Array };

    Kind kind = Kind::String;
    std::vector<KieField> fields;       // Object
    std::shared_ptr<KieType> element;   // Array
};

struct KieField {
    std::string name;
    bool required = true;
    KieType type;
};

// A strict JSON schema for KIE prompting and validation. The root is an
// object.
struct KieSchema {
    std::vector<KieField> fields;
};

// Schema file format, a plain JSON object:
//   {"name": "string", "total": "number",
//    "items": [{"desc": "string"}], "meta": {"id": "string"},
//    "note?": "string"}
// A one-element array declares array-of-T; a "?" name suffix marks the
// field optional. Throws SchemaParseError on malformed or duplicate fields.
KieSchema parse_kie_schema(std::string_view text);

// Canonical serialization of the same format (sorted keys, compact).
std::string serialize_kie_schema(const KieSchema& schema);

}  // namespace docforge::reward

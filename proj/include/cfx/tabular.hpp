#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "cfx/error.hpp"
#include "cfx/values.hpp"

namespace cfx {

enum class FeatureKind { categorical, continuous };

/// One column of the tabular schema.
struct FeatureSpec {
    std::string name;
    FeatureKind kind = FeatureKind::categorical;
    std::vector<std::string> allowed_values;  // categorical only
    double range_min = 0.0;                   // continuous only
    double range_max = 0.0;
    bool integral = false;  // continuous range declared with integer bounds
    bool mutable_feature = true;

    bool allows(const std::string& v) const {
        return std::find(allowed_values.begin(), allowed_values.end(), v) != allowed_values.end();
    }
    bool in_range(double v) const { return v >= range_min && v <= range_max; }
};

struct LabelSpec {
    std::string name;
    std::string class0;
    std::string class1;
    std::string desired;  // equals class0 or class1

    int desired_index() const { return desired == class1 ? 1 : 0; }
    const std::string& class_value(int index) const { return index == 1 ? class1 : class0; }
    std::optional<int> index_of(const std::string& v) const {
        if (v == class0) return 0;
        if (v == class1) return 1;
        return std::nullopt;
    }
};

class DatasetSchema {
public:
    std::string name;
    std::string description;  // inserted into the prompts' dataset-info section
    std::vector<FeatureSpec> features;
    LabelSpec label;

    std::size_t feature_count() const { return features.size(); }

    int feature_index(std::string_view fname) const {
        for (std::size_t i = 0; i < features.size(); ++i)
            if (features[i].name == fname) return static_cast<int>(i);
        return -1;
    }

    const FeatureSpec& feature(std::string_view fname) const {
        int idx = feature_index(fname);
        if (idx < 0) throw ValidationError("unknown feature " + std::string(fname));
        return features[static_cast<std::size_t>(idx)];
    }

    void validate() const {
        if (name.empty()) throw ValidationError("schema has no dataset name");
        if (features.empty()) throw ValidationError("schema declares no features");
        std::set<std::string> seen;
        for (const auto& f : features) {
            if (f.name.empty()) throw ValidationError("feature with empty name");
            if (!seen.insert(f.name).second)
                throw ValidationError("duplicate feature name " + f.name);
            if (f.kind == FeatureKind::categorical) {
                if (f.allowed_values.empty())
                    throw ValidationError("categorical feature " + f.name + " lists no values");
            } else {
                if (!(f.range_min <= f.range_max))
                    throw ValidationError("feature " + f.name + " has malformed range");
            }
        }
        if (label.name.empty()) throw ValidationError("schema has no label entry");
        if (seen.count(label.name)) throw ValidationError("label name collides with feature " + label.name);
        if (label.class0.empty() || label.class1.empty() || label.class0 == label.class1)
            throw ValidationError("label must declare exactly two distinct classes");
        if (label.desired != label.class0 && label.desired != label.class1)
            throw ValidationError("desired class " + label.desired + " is not a label class");
    }
};

/// One row: feature values aligned to schema order, plus an optional label.
struct Instance {
    std::vector<Value> values;
    std::optional<std::string> label;

    const Value& at(const DatasetSchema& schema, std::string_view fname) const {
        int idx = schema.feature_index(fname);
        if (idx < 0) throw ValidationError("unknown feature " + std::string(fname));
        return values[static_cast<std::size_t>(idx)];
    }

    bool same_features(const Instance& other) const {
        if (values.size() != other.values.size()) return false;
        for (std::size_t i = 0; i < values.size(); ++i)
            if (!values_equal(values[i], other.values[i])) return false;
        return true;
    }
};

/// Validates a single instance against a schema. `where` names the source
/// row in error messages (e.g. "row 12"); empty for standalone instances.
inline void validate_instance(const Instance& inst, const DatasetSchema& schema,
                              const std::string& where = {}) {
    auto fail = [&](const std::string& msg) {
        throw ValidationError(where.empty() ? msg : where + ": " + msg);
    };
    if (inst.values.size() != schema.feature_count())
        fail("expected " + std::to_string(schema.feature_count()) + " values, got " +
             std::to_string(inst.values.size()));
    for (std::size_t i = 0; i < schema.features.size(); ++i) {
        const FeatureSpec& f = schema.features[i];
        const Value& v = inst.values[i];
        if (f.kind == FeatureKind::continuous) {
            if (!is_numeric(v)) fail("feature " + f.name + " expects a numeric value");
            if (!f.in_range(as_number(v)))
                fail("feature " + f.name + " value " + format_number(as_number(v)) +
                     " outside range " + format_number(f.range_min) + ".." +
                     format_number(f.range_max));
        } else {
            if (is_numeric(v)) fail("feature " + f.name + " expects a categorical value");
            if (!f.allows(as_text(v)))
                fail("feature " + f.name + " value '" + as_text(v) + "' not in allowed set");
        }
    }
    if (inst.label) {
        if (!schema.label.index_of(*inst.label))
            fail("label value '" + *inst.label + "' is not a declared class");
    }
}

class Dataset {
public:
    DatasetSchema schema;
    std::vector<Instance> rows;

    /// Feature-only membership index; built on first use.
    bool contains_features(const Instance& inst) const {
        if (index_.empty() && !rows.empty()) build_index();
        return index_.count(feature_key(inst)) > 0;
    }

    static std::string feature_key(const Instance& inst) {
        std::string key;
        for (const auto& v : inst.values) {
            key += format_value(v);
            key += '\x1f';
        }
        return key;
    }

private:
    void build_index() const {
        index_.reserve(rows.size() * 2);
        for (const auto& r : rows) index_.insert(feature_key(r));
    }
    mutable std::unordered_set<std::string> index_;
};

// ---------------------------------------------------------------------------
// Schema document
//
// Plain text, one entry per feature:
//
//   dataset adult
//   description whether a person will earn more than 50k$ a year
//
//   feature age
//     kind continuous
//     range 17..90
//     mutable true
//
//   feature workclass
//     kind categorical
//     values Government, Other, Private, Self-Employed
//     mutable true
//
//   label income
//     classes 0, 1
//     desired 1
//
// '#' starts a comment line. Keys are indentation-insensitive.
// ---------------------------------------------------------------------------

namespace detail {

inline std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return std::string(s.substr(b, e - b));
}

inline std::vector<std::string> split_comma_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    std::string last = trim(cur);
    if (!last.empty() || !out.empty()) out.push_back(last);
    return out;
}

inline bool integral_bound(const std::string& tok) {
    if (tok.empty()) return false;
    std::size_t i = (tok[0] == '-' || tok[0] == '+') ? 1 : 0;
    if (i == tok.size()) return false;
    for (; i < tok.size(); ++i)
        if (tok[i] < '0' || tok[i] > '9') return false;
    return true;
}

}  // namespace detail

inline DatasetSchema parse_schema(const std::string& text) {
    DatasetSchema schema;
    FeatureSpec* current = nullptr;
    bool in_label = false;
    bool label_seen = false;
    std::istringstream in(text);
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = detail::trim(raw);
        if (line.empty() || line[0] == '#') continue;
        std::size_t sp = line.find(' ');
        std::string key = sp == std::string::npos ? line : line.substr(0, sp);
        std::string rest = sp == std::string::npos ? "" : detail::trim(line.substr(sp + 1));

        if (key == "dataset") {
            schema.name = rest;
        } else if (key == "description") {
            schema.description = rest;
        } else if (key == "feature") {
            if (rest.empty()) throw ParseError("feature entry without a name", lineno);
            schema.features.push_back(FeatureSpec{});
            current = &schema.features.back();
            current->name = rest;
            in_label = false;
        } else if (key == "label") {
            if (rest.empty()) throw ParseError("label entry without a name", lineno);
            if (label_seen) throw ParseError("more than one label entry", lineno);
            schema.label.name = rest;
            label_seen = true;
            in_label = true;
            current = nullptr;
        } else if (key == "kind") {
            if (!current) throw ParseError("kind outside a feature entry", lineno);
            if (rest == "categorical") current->kind = FeatureKind::categorical;
            else if (rest == "continuous") current->kind = FeatureKind::continuous;
            else throw ParseError("unknown kind '" + rest + "'", lineno);
        } else if (key == "values") {
            if (!current) throw ParseError("values outside a feature entry", lineno);
            current->allowed_values = detail::split_comma_list(rest);
            for (const auto& v : current->allowed_values)
                if (v.empty()) throw ParseError("empty value in list", lineno);
        } else if (key == "range") {
            if (!current) throw ParseError("range outside a feature entry", lineno);
            std::size_t dots = rest.find("..");
            if (dots == std::string::npos) throw ParseError("range must be written lo..hi", lineno);
            std::string lo = detail::trim(rest.substr(0, dots));
            std::string hi = detail::trim(rest.substr(dots + 2));
            auto plo = parse_number(lo);
            auto phi = parse_number(hi);
            if (!plo || !phi) throw ParseError("malformed numeric range '" + rest + "'", lineno);
            current->range_min = *plo;
            current->range_max = *phi;
            current->integral = detail::integral_bound(lo) && detail::integral_bound(hi);
        } else if (key == "mutable") {
            if (!current) throw ParseError("mutable outside a feature entry", lineno);
            if (rest == "true") current->mutable_feature = true;
            else if (rest == "false") current->mutable_feature = false;
            else throw ParseError("mutable must be true or false", lineno);
        } else if (key == "classes") {
            if (!in_label) throw ParseError("classes outside the label entry", lineno);
            auto cls = detail::split_comma_list(rest);
            if (cls.size() != 2) throw ParseError("label must list exactly two classes", lineno);
            schema.label.class0 = cls[0];
            schema.label.class1 = cls[1];
        } else if (key == "desired") {
            if (!in_label) throw ParseError("desired outside the label entry", lineno);
            schema.label.desired = rest;
        } else {
            throw ParseError("unknown schema key '" + key + "'", lineno);
        }
    }
    schema.validate();
    return schema;
}

inline DatasetSchema load_schema(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open schema file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_schema(buf.str());
}

// ---------------------------------------------------------------------------
// CSV (RFC 4180): quoted fields, doubled quotes, CRLF tolerated.
// ---------------------------------------------------------------------------

inline std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    bool field_started = false;
    std::size_t line = 1;
    std::size_t i = 0;
    auto end_field = [&]() {
        fields.push_back(field);
        field.clear();
        field_started = false;
    };
    auto end_record = [&]() {
        end_field();
        records.push_back(std::move(fields));
        fields.clear();
    };
    while (i < text.size()) {
        char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                if (c == '\n') ++line;
                field += c;
            }
        } else if (c == '"' && !field_started && field.empty()) {
            quoted = true;
            field_started = true;
        } else if (c == ',') {
            end_field();
        } else if (c == '\r') {
            // swallow; the following \n (if any) ends the record
        } else if (c == '\n') {
            end_record();
            ++line;
        } else {
            field += c;
            field_started = true;
        }
        ++i;
    }
    if (quoted) throw ParseError("unterminated quoted field", line);
    if (field_started || !field.empty() || !fields.empty()) end_record();
    return records;
}

inline std::string csv_escape(const std::string& s) {
    bool needs_quote = s.find_first_of(",\"\n\r") != std::string::npos;
    if (!needs_quote) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

inline std::string csv_line(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out += ',';
        out += csv_escape(fields[i]);
    }
    out += '\n';
    return out;
}

// ---------------------------------------------------------------------------
// Dataset ingestion and serialization
// ---------------------------------------------------------------------------

inline Value parse_feature_value(const std::string& token, const FeatureSpec& f,
                                 const std::string& where) {
    if (f.kind == FeatureKind::continuous) {
        auto num = parse_number(token);
        if (!num)
            throw ValidationError(where + ": feature " + f.name + " value '" + token +
                                  "' is not numeric");
        return Value{*num};
    }
    return Value{token};
}

inline Dataset load_dataset_from_string(const std::string& csv_text, const DatasetSchema& schema) {
    auto records = parse_csv(csv_text);
    if (records.empty()) throw ParseError("CSV has no header row");
    std::vector<std::string> expected;
    for (const auto& f : schema.features) expected.push_back(f.name);
    expected.push_back(schema.label.name);
    if (records[0] != expected) {
        std::string got;
        for (std::size_t i = 0; i < records[0].size(); ++i) {
            if (i) got += ',';
            got += records[0][i];
        }
        throw ValidationError("CSV header does not match schema columns (got: " + got + ")");
    }
    Dataset ds;
    ds.schema = schema;
    ds.rows.reserve(records.size() - 1);
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r];
        std::string where = "row " + std::to_string(r);
        if (rec.size() != expected.size())
            throw ValidationError(where + ": expected " + std::to_string(expected.size()) +
                                  " fields, got " + std::to_string(rec.size()));
        Instance inst;
        inst.values.reserve(schema.feature_count());
        for (std::size_t c = 0; c < schema.feature_count(); ++c)
            inst.values.push_back(parse_feature_value(rec[c], schema.features[c], where));
        inst.label = rec.back();
        validate_instance(inst, schema, where);
        ds.rows.push_back(std::move(inst));
    }
    return ds;
}

inline Dataset load_dataset(const std::filesystem::path& path, const DatasetSchema& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open dataset file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return load_dataset_from_string(buf.str(), schema);
}

/// Deterministic table used both in prompts and in counterfactual CSV output.
/// Header + one line per instance; the label column is included when every
/// instance carries a label.
inline std::string serialize_instances(const std::vector<Instance>& instances,
                                       const DatasetSchema& schema) {
    bool with_label = !instances.empty();
    for (const auto& inst : instances)
        if (!inst.label) with_label = false;
    std::string out;
    std::vector<std::string> header;
    for (const auto& f : schema.features) header.push_back(f.name);
    if (with_label) header.push_back(schema.label.name);
    out += csv_line(header);
    for (const auto& inst : instances) {
        std::vector<std::string> fields;
        for (const auto& v : inst.values) fields.push_back(format_value(v));
        if (with_label) fields.push_back(*inst.label);
        out += csv_line(fields);
    }
    return out;
}

/// Exact feature-vector membership (the novelty/memorization signal).
/// The label is deliberately ignored.
inline bool contains_instance(const Dataset& dataset, const Instance& instance) {
    validate_instance(instance, dataset.schema);
    return dataset.contains_features(instance);
}

/// Prompt text describing the dataset: name, task, column kinds and legal
/// values. Generated from the schema so prompts cannot drift from validation.
inline std::string dataset_info_text(const DatasetSchema& schema) {
    std::string out = "The dataset '" + schema.name + "' is used to predict " +
                      schema.description + ".\nColumns:\n";
    for (const auto& f : schema.features) {
        out += "- " + f.name + ": ";
        if (f.kind == FeatureKind::continuous) {
            out += "continuous, range " + format_number(f.range_min) + ".." +
                   format_number(f.range_max);
        } else {
            out += "categorical, one of ";
            for (std::size_t i = 0; i < f.allowed_values.size(); ++i) {
                if (i) out += ", ";
                out += f.allowed_values[i];
            }
        }
        if (!f.mutable_feature) out += " (immutable)";
        out += '\n';
    }
    out += "- " + schema.label.name + ": label, classes " + schema.label.class0 + " and " +
           schema.label.class1 + "; the desired class is " + schema.label.desired + "\n";
    return out;
}

}  // namespace cfx

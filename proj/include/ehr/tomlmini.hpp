/*
 * Copyright 2026 the ehrtok authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

// Minimal TOML reader covering the subset used by the config files:
// tables, arrays of tables, dotted table headers, basic strings, integers,
// floats, booleans, homogeneous arrays, and # comments.
namespace ehr::toml {

class Value {
  public:
    enum class Kind { String, Integer, Float, Boolean, Array, Table };

    Kind kind = Kind::Table;
    std::string str;
    std::int64_t integer = 0;
    double real = 0.0;
    bool boolean = false;
    std::vector<Value> array;
    std::map<std::string, Value> table;

    bool is_table() const { return kind == Kind::Table; }
    bool is_array() const { return kind == Kind::Array; }
    bool contains(const std::string& key) const;

    // Table lookup; throws ConfigError when missing or wrong kind.
    const Value& at(const std::string& key) const;

    std::string as_string() const;
    std::int64_t as_int() const;
    double as_double() const;  // accepts integers
    bool as_bool() const;
    std::vector<double> as_double_array() const;
    std::vector<std::int64_t> as_int_array() const;
    std::vector<std::string> as_string_array() const;

    // Convenience getters with defaults, for optional keys.
    std::string get_string(const std::string& key, const std::string& dflt) const;
    std::int64_t get_int(const std::string& key, std::int64_t dflt) const;
    double get_double(const std::string& key, double dflt) const;
    bool get_bool(const std::string& key, bool dflt) const;
};

Value parse(const std::string& text);
Value parse_file(const std::string& path);

}  // namespace ehr::toml

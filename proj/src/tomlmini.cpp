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
#include "ehr/tomlmini.hpp"

#include <cctype>
#include <charconv>

#include "ehr/util.hpp"

namespace ehr::toml {

namespace {

struct Cursor {
    const std::string& text;
    std::size_t pos = 0;
    std::size_t line = 1;

    bool eof() const { return pos >= text.size(); }
    char peek() const { return text[pos]; }
    char take() {
        const char c = text[pos++];
        if (c == '\n') ++line;
        return c;
    }

    void skip_ws_inline() {
        while (!eof() && (peek() == ' ' || peek() == '\t')) take();
    }

    void skip_comment() {
        if (!eof() && peek() == '#') {
            while (!eof() && peek() != '\n') take();
        }
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw ConfigError("toml parse error (line " + std::to_string(line) +
                          "): " + what);
    }
};

bool is_bare_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

std::string parse_key_part(Cursor& cur) {
    cur.skip_ws_inline();
    if (cur.eof()) cur.fail("expected key");
    std::string key;
    if (cur.peek() == '"') {
        cur.take();
        while (!cur.eof() && cur.peek() != '"') key.push_back(cur.take());
        if (cur.eof()) cur.fail("unterminated quoted key");
        cur.take();
    } else {
        while (!cur.eof() && is_bare_char(cur.peek())) key.push_back(cur.take());
    }
    if (key.empty()) cur.fail("empty key");
    cur.skip_ws_inline();
    return key;
}

std::vector<std::string> parse_dotted_key(Cursor& cur) {
    std::vector<std::string> parts{parse_key_part(cur)};
    while (!cur.eof() && cur.peek() == '.') {
        cur.take();
        parts.push_back(parse_key_part(cur));
    }
    return parts;
}

Value parse_value(Cursor& cur);

Value parse_string(Cursor& cur) {
    Value v;
    v.kind = Value::Kind::String;
    cur.take();  // opening quote
    while (!cur.eof() && cur.peek() != '"') {
        char c = cur.take();
        if (c == '\\') {
            if (cur.eof()) cur.fail("dangling escape");
            const char esc = cur.take();
            switch (esc) {
                case 'n': c = '\n'; break;
                case 't': c = '\t'; break;
                case 'r': c = '\r'; break;
                case '"': c = '"'; break;
                case '\\': c = '\\'; break;
                default: cur.fail("unsupported escape");
            }
        }
        v.str.push_back(c);
    }
    if (cur.eof()) cur.fail("unterminated string");
    cur.take();  // closing quote
    return v;
}

Value parse_array(Cursor& cur) {
    Value v;
    v.kind = Value::Kind::Array;
    cur.take();  // '['
    for (;;) {
        // Arrays may span lines.
        while (!cur.eof()) {
            cur.skip_ws_inline();
            cur.skip_comment();
            if (!cur.eof() && (cur.peek() == '\n' || cur.peek() == '\r')) {
                cur.take();
            } else {
                break;
            }
        }
        if (cur.eof()) cur.fail("unterminated array");
        if (cur.peek() == ']') {
            cur.take();
            return v;
        }
        v.array.push_back(parse_value(cur));
        while (!cur.eof()) {
            cur.skip_ws_inline();
            cur.skip_comment();
            if (!cur.eof() && (cur.peek() == '\n' || cur.peek() == '\r')) {
                cur.take();
            } else {
                break;
            }
        }
        if (cur.eof()) cur.fail("unterminated array");
        if (cur.peek() == ',') {
            cur.take();
        } else if (cur.peek() == ']') {
            cur.take();
            return v;
        } else {
            cur.fail("expected ',' or ']' in array");
        }
    }
}

Value parse_scalar(Cursor& cur) {
    std::string tok;
    while (!cur.eof() && cur.peek() != ',' && cur.peek() != ']' &&
           cur.peek() != '\n' && cur.peek() != '\r' && cur.peek() != '#') {
        tok.push_back(cur.take());
    }
    while (!tok.empty() && (tok.back() == ' ' || tok.back() == '\t'))
        tok.pop_back();
    if (tok.empty()) cur.fail("expected value");

    Value v;
    if (tok == "true" || tok == "false") {
        v.kind = Value::Kind::Boolean;
        v.boolean = tok == "true";
        return v;
    }
    const bool looks_float = tok.find_first_of(".eE") != std::string::npos &&
                             tok.find_first_of("0123456789") != std::string::npos;
    if (!looks_float) {
        std::int64_t iv = 0;
        const auto [ptr, ec] =
            std::from_chars(tok.data(), tok.data() + tok.size(), iv);
        if (ec == std::errc() && ptr == tok.data() + tok.size()) {
            v.kind = Value::Kind::Integer;
            v.integer = iv;
            return v;
        }
    }
    {
        double dv = 0.0;
        const auto [ptr, ec] =
            std::from_chars(tok.data(), tok.data() + tok.size(), dv);
        if (ec == std::errc() && ptr == tok.data() + tok.size()) {
            v.kind = Value::Kind::Float;
            v.real = dv;
            return v;
        }
    }
    cur.fail("cannot parse value '" + tok + "'");
}

Value parse_value(Cursor& cur) {
    cur.skip_ws_inline();
    if (cur.eof()) cur.fail("expected value");
    if (cur.peek() == '"') return parse_string(cur);
    if (cur.peek() == '[') return parse_array(cur);
    return parse_scalar(cur);
}

Value* descend(Value* node, const std::vector<std::string>& path,
               Cursor& cur) {
    for (const auto& part : path) {
        if (!node->is_table()) cur.fail("key collides with non-table value");
        Value& child = node->table[part];
        // A dotted path may pass through the last element of an array of
        // tables appended earlier.
        if (child.is_array() && !child.array.empty() &&
            child.array.back().is_table()) {
            node = &child.array.back();
        } else {
            node = &child;
        }
    }
    return node;
}

}  // namespace

bool Value::contains(const std::string& key) const {
    return is_table() && table.count(key) != 0;
}

const Value& Value::at(const std::string& key) const {
    if (!is_table()) throw ConfigError("toml: '" + key + "' lookup on non-table");
    const auto it = table.find(key);
    if (it == table.end()) throw ConfigError("toml: missing key '" + key + "'");
    return it->second;
}

std::string Value::as_string() const {
    if (kind != Kind::String) throw ConfigError("toml: expected string");
    return str;
}

std::int64_t Value::as_int() const {
    if (kind != Kind::Integer) throw ConfigError("toml: expected integer");
    return integer;
}

double Value::as_double() const {
    if (kind == Kind::Float) return real;
    if (kind == Kind::Integer) return static_cast<double>(integer);
    throw ConfigError("toml: expected number");
}

bool Value::as_bool() const {
    if (kind != Kind::Boolean) throw ConfigError("toml: expected boolean");
    return boolean;
}

std::vector<double> Value::as_double_array() const {
    if (!is_array()) throw ConfigError("toml: expected array");
    std::vector<double> out;
    out.reserve(array.size());
    for (const auto& v : array) out.push_back(v.as_double());
    return out;
}

std::vector<std::int64_t> Value::as_int_array() const {
    if (!is_array()) throw ConfigError("toml: expected array");
    std::vector<std::int64_t> out;
    out.reserve(array.size());
    for (const auto& v : array) out.push_back(v.as_int());
    return out;
}

std::vector<std::string> Value::as_string_array() const {
    if (!is_array()) throw ConfigError("toml: expected array");
    std::vector<std::string> out;
    out.reserve(array.size());
    for (const auto& v : array) out.push_back(v.as_string());
    return out;
}

std::string Value::get_string(const std::string& key,
                              const std::string& dflt) const {
    return contains(key) ? at(key).as_string() : dflt;
}

std::int64_t Value::get_int(const std::string& key, std::int64_t dflt) const {
    return contains(key) ? at(key).as_int() : dflt;
}

double Value::get_double(const std::string& key, double dflt) const {
    return contains(key) ? at(key).as_double() : dflt;
}

bool Value::get_bool(const std::string& key, bool dflt) const {
    return contains(key) ? at(key).as_bool() : dflt;
}

Value parse(const std::string& text) {
    Value root;
    Cursor cur{text};
    Value* current = &root;

    while (!cur.eof()) {
        cur.skip_ws_inline();
        cur.skip_comment();
        if (cur.eof()) break;
        if (cur.peek() == '\n' || cur.peek() == '\r') {
            cur.take();
            continue;
        }

        if (cur.peek() == '[') {
            cur.take();
            const bool array_of_tables = !cur.eof() && cur.peek() == '[';
            if (array_of_tables) cur.take();
            const auto path = parse_dotted_key(cur);
            if (cur.eof() || cur.take() != ']') cur.fail("expected ']'");
            if (array_of_tables && (cur.eof() || cur.take() != ']'))
                cur.fail("expected ']]'");

            Value* node = &root;
            for (std::size_t i = 0; i + 1 < path.size(); ++i) {
                node = descend(node, {path[i]}, cur);
            }
            Value& leaf = node->table[path.back()];
            if (array_of_tables) {
                if (leaf.kind == Value::Kind::Table && leaf.table.empty() &&
                    leaf.array.empty()) {
                    leaf.kind = Value::Kind::Array;
                }
                if (!leaf.is_array()) cur.fail("redefinition as array of tables");
                leaf.array.emplace_back();
                current = &leaf.array.back();
            } else {
                if (!leaf.is_table()) cur.fail("redefinition as table");
                current = &leaf;
            }
            continue;
        }

        const auto path = parse_dotted_key(cur);
        if (cur.eof() || cur.take() != '=') cur.fail("expected '='");
        Value value = parse_value(cur);
        cur.skip_ws_inline();
        cur.skip_comment();
        if (!cur.eof() && cur.peek() != '\n' && cur.peek() != '\r')
            cur.fail("trailing characters after value");

        Value* node = current;
        for (std::size_t i = 0; i + 1 < path.size(); ++i) {
            node = descend(node, {path[i]}, cur);
        }
        if (!node->is_table()) cur.fail("key collides with non-table value");
        node->table[path.back()] = std::move(value);
    }
    return root;
}

Value parse_file(const std::string& path) { return parse(read_file(path)); }

}  // namespace ehr::toml

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
#include "ehr/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ehr/util.hpp"

using nlohmann::json;

namespace ehr {

namespace {

std::optional<double> parse_optional_number(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    const auto& v = j.at(key);
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        if (s.empty()) return std::nullopt;
        double d = 0.0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), d);
        if (ec == std::errc() && ptr == s.data() + s.size()) return d;
        throw ParseError(std::string("non-numeric ") + key);
    }
    throw ParseError(std::string("bad type for ") + key);
}

std::optional<double> parse_optional_field(const std::string& s,
                                           const char* key) {
    if (s.empty()) return std::nullopt;
    double d = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), d);
    if (ec == std::errc() && ptr == s.data() + s.size()) return d;
    throw ParseError(std::string("non-numeric ") + key);
}

std::string require_string(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null())
        throw ParseError(std::string("missing ") + key);
    if (j.at(key).is_string()) return j.at(key).get<std::string>();
    if (j.at(key).is_number_integer())
        return std::to_string(j.at(key).get<std::int64_t>());
    throw ParseError(std::string("bad type for ") + key);
}

std::int64_t require_time(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null())
        throw ParseError(std::string("missing ") + key);
    const auto& v = j.at(key);
    if (v.is_number_integer()) return v.get<std::int64_t>();
    if (v.is_number()) return static_cast<std::int64_t>(v.get<double>());
    if (v.is_string()) {
        const auto t = parse_time(v.get<std::string>());
        if (t) return *t;
    }
    throw ParseError(std::string("unparseable ") + key);
}

Event parse_event_json(const std::string& line) {
    const json j = json::parse(line);
    Event e;
    e.subject_id = require_string(j, "subject_id");
    e.admission_id = require_string(j, "admission_id");
    e.time = require_time(j, "time");
    e.code = require_string(j, "code");
    e.numeric_value = parse_optional_number(j, "numeric_value");
    e.ref_lo = parse_optional_number(j, "ref_lo");
    e.ref_hi = parse_optional_number(j, "ref_hi");
    return e;
}

const char* kCsvHeader =
    "subject_id,admission_id,time,code,numeric_value,ref_lo,ref_hi";

Event parse_event_csv(const std::string& line) {
    const auto fields = split_csv(line);
    if (fields.size() != 7) throw ParseError("expected 7 CSV fields");
    Event e;
    e.subject_id = fields[0];
    e.admission_id = fields[1];
    if (e.subject_id.empty()) throw ParseError("missing subject_id");
    if (e.admission_id.empty()) throw ParseError("missing admission_id");
    const auto t = parse_time(fields[2]);
    if (!t) throw ParseError("unparseable time");
    e.time = *t;
    e.code = fields[3];
    e.numeric_value = parse_optional_field(fields[4], "numeric_value");
    e.ref_lo = parse_optional_field(fields[5], "ref_lo");
    e.ref_hi = parse_optional_field(fields[6], "ref_hi");
    return e;
}

void validate_event(const Event& e, const std::set<std::string>& families) {
    if (e.code.empty()) throw ParseError("empty code");
    const auto fam = e.family();
    if (families.count(fam) == 0)
        throw ParseError("unknown code family '" + fam + "'");
    if (e.ref_lo && e.ref_hi && *e.ref_lo > *e.ref_hi)
        throw ParseError("ref_lo > ref_hi");
}

}  // namespace

std::vector<Admission> ingest(const std::string& events_path,
                              const std::string& demographics_path,
                              const IngestOptions& opts,
                              IngestReport& report) {
    report = IngestReport{};
    const std::set<std::string> families(opts.families.begin(),
                                         opts.families.end());

    // Demographics file is the admission registry; it carries the admit and
    // discharge times events are anchored to.
    std::map<std::string, Admission> admissions;
    {
        std::ifstream in(demographics_path);
        if (!in)
            throw std::runtime_error("cannot open demographics file: " +
                                     demographics_path);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            ++report.demographic_rows;
            try {
                const json j = json::parse(line);
                Admission a;
                a.admission_id = require_string(j, "admission_id");
                a.subject_id = require_string(j, "subject_id");
                a.admit_time = require_time(j, "admit_time");
                a.discharge_time = j.contains("discharge_time") &&
                                           !j.at("discharge_time").is_null()
                                       ? require_time(j, "discharge_time")
                                       : a.admit_time;
                if (a.discharge_time < a.admit_time)
                    throw ParseError("discharge_time before admit_time");
                for (const auto& attr : scaffold_attributes()) {
                    if (j.contains(attr) && j.at(attr).is_string())
                        a.demographics[attr] = j.at(attr).get<std::string>();
                }
                if (admissions.count(a.admission_id))
                    throw ParseError("duplicate admission_id");
                admissions.emplace(a.admission_id, std::move(a));
            } catch (const std::exception& ex) {
                report.rejected.push_back({line_no, std::string("demographics: ") +
                                                        ex.what()});
            }
        }
    }

    {
        std::ifstream in(events_path);
        if (!in)
            throw std::runtime_error("cannot open events file: " + events_path);
        std::string line;
        std::size_t line_no = 0;
        bool saw_header = false;
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            if (opts.format == EventFormat::Csv && !saw_header) {
                saw_header = true;
                if (line != kCsvHeader)
                    throw std::runtime_error(
                        "events CSV header mismatch; expected: " +
                        std::string(kCsvHeader));
                continue;
            }
            ++report.event_rows;
            try {
                Event e = opts.format == EventFormat::Jsonl
                              ? parse_event_json(line)
                              : parse_event_csv(line);
                validate_event(e, families);
                const auto it = admissions.find(e.admission_id);
                if (it == admissions.end())
                    throw ParseError("admission_id not in demographics file");
                if (it->second.subject_id != e.subject_id)
                    throw ParseError("subject_id disagrees with demographics");
                it->second.events.push_back(std::move(e));
                ++report.events_kept;
            } catch (const std::exception& ex) {
                report.rejected.push_back({line_no, ex.what()});
            }
        }
    }

    std::vector<Admission> out;
    out.reserve(admissions.size());
    for (auto& [_, a] : admissions) {
        std::stable_sort(
            a.events.begin(), a.events.end(),
            [](const Event& x, const Event& y) { return x.time < y.time; });
        if (!a.events.empty())
            a.discharge_time = std::max(a.discharge_time, a.events.back().time);
        out.push_back(std::move(a));
    }
    std::sort(out.begin(), out.end(), [](const Admission& x, const Admission& y) {
        return std::tie(x.subject_id, x.admit_time, x.admission_id) <
               std::tie(y.subject_id, y.admit_time, y.admission_id);
    });
    report.admissions = out.size();
    return out;
}

namespace {

json event_to_json(const Event& e) {
    json j;
    j["subject_id"] = e.subject_id;
    j["admission_id"] = e.admission_id;
    j["time"] = e.time;
    j["code"] = e.code;
    j["numeric_value"] =
        e.numeric_value ? json(*e.numeric_value) : json(nullptr);
    j["ref_lo"] = e.ref_lo ? json(*e.ref_lo) : json(nullptr);
    j["ref_hi"] = e.ref_hi ? json(*e.ref_hi) : json(nullptr);
    return j;
}

}  // namespace

void write_events_jsonl(const std::vector<Admission>& admissions,
                        const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    for (const auto& a : admissions) {
        for (const auto& e : a.events) out << event_to_json(e).dump() << '\n';
    }
}

void write_events_csv(const std::vector<Admission>& admissions,
                      const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << kCsvHeader << '\n';
    for (const auto& a : admissions) {
        for (const auto& e : a.events) {
            out << e.subject_id << ',' << e.admission_id << ',' << e.time << ','
                << e.code << ','
                << (e.numeric_value ? format_g17(*e.numeric_value) : "") << ','
                << (e.ref_lo ? format_g17(*e.ref_lo) : "") << ','
                << (e.ref_hi ? format_g17(*e.ref_hi) : "") << '\n';
        }
    }
}

void write_demographics_jsonl(const std::vector<Admission>& admissions,
                              const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    for (const auto& a : admissions) {
        json j;
        j["admission_id"] = a.admission_id;
        j["subject_id"] = a.subject_id;
        j["admit_time"] = a.admit_time;
        j["discharge_time"] = a.discharge_time;
        for (const auto& [k, v] : a.demographics) j[k] = v;
        out << j.dump() << '\n';
    }
}

std::string ingest_report_json(const IngestReport& report) {
    json j;
    j["event_rows"] = report.event_rows;
    j["events_kept"] = report.events_kept;
    j["demographic_rows"] = report.demographic_rows;
    j["admissions"] = report.admissions;
    j["rejected_rows"] = json::array();
    for (const auto& r : report.rejected) {
        j["rejected_rows"].push_back({{"line", r.line_no}, {"reason", r.reason}});
    }
    j["warnings"] = report.warnings;
    return j.dump(2) + "\n";
}

}  // namespace ehr

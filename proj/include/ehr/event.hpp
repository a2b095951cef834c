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
#include <optional>
#include <string>
#include <vector>

namespace ehr {

// One timestamped clinical observation. An event is numeric iff
// numeric_value is present; the unit is implied by the code string
// (e.g. "LAB//50971//mEq/L").
struct Event {
    std::string subject_id;
    std::string admission_id;
    std::int64_t time = 0;  // epoch seconds, UTC
    std::string code;
    std::optional<double> numeric_value;
    std::optional<double> ref_lo;
    std::optional<double> ref_hi;

    bool is_numeric() const { return numeric_value.has_value(); }
    std::string family() const;  // prefix before the first "//"
};

// Scaffold attributes in their fixed emission order. The first seven form
// the prefix scaffold; discharge_type is the suffix.
inline const std::vector<std::string>& scaffold_attributes() {
    static const std::vector<std::string> attrs = {
        "race",    "language", "sex",            "age",
        "insurance", "marital", "admission_type", "discharge_type"};
    return attrs;
}

struct Admission {
    std::string admission_id;
    std::string subject_id;
    std::int64_t admit_time = 0;
    std::int64_t discharge_time = 0;
    std::vector<Event> events;  // time-sorted, input order on ties
    std::map<std::string, std::string> demographics;

    double los_hours() const {
        return static_cast<double>(discharge_time - admit_time) / 3600.0;
    }
};

enum class Split { Train, Validation, Test };

const char* split_name(Split s);
std::optional<Split> split_from_name(const std::string& name);

struct SplitAssignment {
    std::map<std::string, Split> by_subject;

    Split of(const std::string& subject_id) const;
    std::size_t count(Split s) const;
};

// Default family list; ingest rejects rows whose code prefix is not in the
// configured list.
inline const std::vector<std::string>& default_families() {
    static const std::vector<std::string> fams = {
        "LAB",           "VITAL",
        "INFUSION_START", "INFUSION_END",
        "SUBJECT_WEIGHT_AT_INFUSION",
        "FLUID_OUTPUT",  "MEDICATION",
        "TRANSFER",      "ICU_ADMISSION",
        "ICU_DISCHARGE", "PROCEDURE",
        "PROCEDURE_END", "MEDS_DEATH"};
    return fams;
}

// Keep a first-24h prefix of the admission: events with
// time <= admit_time + 24h are retained (closed boundary), demographics and
// admission scaffold are kept. Idempotent.
Admission cut_first_24h(const Admission& a);

inline constexpr std::int64_t kSecondsPerDay = 86400;

}  // namespace ehr

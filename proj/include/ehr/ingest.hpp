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

#include <string>
#include <vector>

#include "ehr/event.hpp"

namespace ehr {

enum class EventFormat { Jsonl, Csv };

struct RowRejection {
    std::size_t line_no = 0;  // 1-based
    std::string reason;
};

struct IngestReport {
    std::size_t event_rows = 0;
    std::size_t events_kept = 0;
    std::size_t demographic_rows = 0;
    std::size_t admissions = 0;
    std::vector<RowRejection> rejected;
    std::vector<std::string> warnings;
};

struct IngestOptions {
    EventFormat format = EventFormat::Jsonl;
    std::vector<std::string> families = default_families();
};

// Reads an event file plus its companion demographics file and assembles
// admissions: events sorted by time (stable on ties), admissions sorted by
// (subject_id, admit_time, admission_id). Malformed rows are rejected and
// reported with their line number; an unreadable file throws.
std::vector<Admission> ingest(const std::string& events_path,
                              const std::string& demographics_path,
                              const IngestOptions& opts, IngestReport& report);

// Serializers for the canonical on-disk formats. write_events emits the
// JSONL event schema (time as epoch seconds); formats round-trip through
// ingest preserving the event multiset per admission.
void write_events_jsonl(const std::vector<Admission>& admissions,
                        const std::string& path);
void write_events_csv(const std::vector<Admission>& admissions,
                      const std::string& path);
void write_demographics_jsonl(const std::vector<Admission>& admissions,
                              const std::string& path);
std::string ingest_report_json(const IngestReport& report);

}  // namespace ehr

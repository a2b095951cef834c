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

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ehr/event.hpp"

namespace ehr {

// One clause of an outcome definition. Binary outcomes OR their
// components; regression outcomes carry exactly one.
struct OutcomeComponent {
    enum class Aggregate { Max, Min, Exists, Duration };

    std::vector<std::string> code_group;  // matched as code == g or g + "//..."
    Aggregate aggregate = Aggregate::Exists;
    std::optional<double> threshold;      // binary only
    std::string direction = "ge";         // ge | gt | le | lt
};

struct OutcomeSpec {
    enum class Kind { Binary, Regression };
    enum class Window { Post24h, WholeStay };

    std::string name;
    Kind kind = Kind::Binary;
    Window window = Window::Post24h;
    // Met within the first 24h -> ineligible (leakage-safe exclusion).
    bool exclusion_24h = false;
    // Threshold outcomes: no qualifying post-24h measurement -> ineligible.
    bool require_post24h_measurement = false;
    // Eligible only when some component event exists in the outcome window
    // (e.g. ICU length-of-stay restricted to admissions with an ICU stay).
    bool require_event = false;
    std::vector<OutcomeComponent> components;
};

struct LabelRow {
    std::string admission_id;
    bool eligible = false;
    std::optional<double> label;
};

struct OutcomeSummary {
    std::string name;
    std::size_t eligible_n = 0;
    std::size_t positives = 0;  // binary
    std::size_t negatives = 0;
    double mean = 0.0;  // regression
    double sd = 0.0;
};

// Labels one admission. The first-24h window is closed (time <= admit+24h,
// matching the tokenizer cut) and the post-24h window is its open
// complement (time > admit+24h).
LabelRow label(const Admission& a, const OutcomeSpec& spec);

struct CohortLabels {
    // outcome name -> rows aligned with the admission order passed in.
    std::map<std::string, std::vector<LabelRow>> rows;
    std::vector<OutcomeSummary> summaries;
};

CohortLabels label_cohort(const std::vector<Admission>& admissions,
                          const std::vector<OutcomeSpec>& specs);

std::vector<OutcomeSpec> load_outcome_config(const std::string& path);
std::vector<OutcomeSpec> parse_outcome_config(const std::string& text);

// CSV: admission_id,outcome,eligible,label
void write_labels_csv(const CohortLabels& labels, const std::string& path);
std::map<std::string, std::vector<LabelRow>> read_labels_csv(
    const std::string& path);

// The benchmark's 30 outcomes (17 binary, 13 regression) over the
// synthetic generator's code inventory.
std::string default_outcome_config_toml();

}  // namespace ehr

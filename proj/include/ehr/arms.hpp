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
#include <string>
#include <vector>

#include "ehr/event.hpp"

namespace ehr {

// CSV mapping table (domain,source_code,target_category); source codes are
// the identifier segment of "<FAMILY>//<id>//<unit>" codes within their
// domain.
struct MappingTable {
    std::map<std::string, std::map<std::string, std::string>> by_domain;

    static MappingTable from_csv(const std::string& path,
                                 std::vector<std::string>* errors = nullptr);
};

enum class ArmKind { Native, Mapped, Randomized, FrequencyMatched };

const char* arm_name(ArmKind k);
std::optional<ArmKind> arm_from_name(const std::string& s);

// Realized source-to-target map per domain. The randomized and
// frequency-matched arms reuse exactly the mapped arm's target set; only
// the code string of mapped events ever changes.
struct ArmAssignment {
    ArmKind arm = ArmKind::Native;
    std::uint64_t seed = 0;
    std::map<std::string, std::map<std::string, std::string>> map;
};

struct DomainCoverage {
    std::string domain;
    std::size_t mapped_events = 0;
    std::size_t total_events = 0;
    double fraction = 0.0;
};

// Cycling assignment: source k (callers pass sources sorted) takes
// targets[k mod |targets|].
std::map<std::string, std::string> cycle_assign(
    const std::vector<std::string>& sources_sorted,
    const std::vector<std::string>& targets_in_order);

// Greedy frequency matching: sources in descending train count (ties by
// code string) each take the target with the largest remaining count;
// the source count is then subtracted, negatives permitted. Ties keep the
// first target in list order.
std::map<std::string, std::string> greedy_frequency_assign(
    const std::vector<std::pair<std::string, std::size_t>>& source_counts,
    const std::vector<std::pair<std::string, std::size_t>>& target_counts);

// Builds the realized arm from the train split. Sources and targets are
// the mapping rows realized in train; target frequencies count train
// events rewritten to each target by the mapped arm.
ArmAssignment build_arm(const std::vector<Admission>& train,
                        const MappingTable& table, ArmKind kind,
                        std::uint64_t seed);

// Rewrites mapped codes to "<FAMILY>//<category>//<unit>", preserving the
// unit suffix; timestamps and values are untouched, unmapped codes pass
// through.
std::vector<Admission> apply_arm(const std::vector<Admission>& admissions,
                                 const ArmAssignment& arm,
                                 std::vector<DomainCoverage>* coverage = nullptr);

std::string arm_to_json(const ArmAssignment& arm);
std::string coverage_to_json(const std::vector<DomainCoverage>& coverage);

}  // namespace ehr

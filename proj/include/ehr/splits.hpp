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

#include <array>
#include <string>
#include <vector>

#include "ehr/event.hpp"

namespace ehr {

// Patient-level split: every admission of a subject lands in the same
// split. Counts follow the ratios by largest remainder, so exact-multiple
// cohorts split exactly. Deterministic in (subjects, seed). Fewer than 3
// subjects puts everyone in train and records a warning.
SplitAssignment split_subjects(const std::vector<std::string>& subjects,
                               const std::array<double, 3>& ratios,
                               std::uint64_t seed,
                               std::vector<std::string>* warnings = nullptr);

void write_splits_csv(const SplitAssignment& splits, const std::string& path);
SplitAssignment read_splits_csv(const std::string& path);

std::vector<Admission> admissions_in_split(const std::vector<Admission>& all,
                                           const SplitAssignment& splits,
                                           Split split);

}  // namespace ehr

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
#include "ehr/event.hpp"

#include <algorithm>
#include <stdexcept>

namespace ehr {

std::string Event::family() const {
    const auto pos = code.find("//");
    return pos == std::string::npos ? code : code.substr(0, pos);
}

const char* split_name(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Validation: return "validation";
        case Split::Test: return "test";
    }
    return "?";
}

std::optional<Split> split_from_name(const std::string& name) {
    if (name == "train") return Split::Train;
    if (name == "validation" || name == "val") return Split::Validation;
    if (name == "test") return Split::Test;
    return std::nullopt;
}

Split SplitAssignment::of(const std::string& subject_id) const {
    const auto it = by_subject.find(subject_id);
    if (it == by_subject.end())
        throw std::out_of_range("subject not in split assignment: " +
                                subject_id);
    return it->second;
}

std::size_t SplitAssignment::count(Split s) const {
    std::size_t n = 0;
    for (const auto& [_, v] : by_subject) {
        if (v == s) ++n;
    }
    return n;
}

Admission cut_first_24h(const Admission& a) {
    Admission out = a;
    const std::int64_t cutoff = a.admit_time + kSecondsPerDay;
    out.events.clear();
    out.events.reserve(a.events.size());
    for (const auto& e : a.events) {
        if (e.time <= cutoff) out.events.push_back(e);
    }
    return out;
}

}  // namespace ehr

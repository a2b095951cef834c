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
#include "ehr/splits.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "ehr/rng.hpp"
#include "ehr/util.hpp"

namespace ehr {

SplitAssignment split_subjects(const std::vector<std::string>& subjects,
                               const std::array<double, 3>& ratios,
                               std::uint64_t seed,
                               std::vector<std::string>* warnings) {
    const double total = ratios[0] + ratios[1] + ratios[2];
    if (std::abs(total - 1.0) > 1e-9)
        throw ConfigError("split ratios must sum to 1");
    if (subjects.empty()) throw ConfigError("no subjects to split");

    std::vector<std::string> uniq(subjects);
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());

    SplitAssignment out;
    if (uniq.size() < 3) {
        if (warnings)
            warnings->push_back(
                "fewer than 3 subjects; assigning all to train");
        for (const auto& s : uniq) out.by_subject[s] = Split::Train;
        return out;
    }

    Rng rng(seed);
    rng.shuffle(uniq);

    // Largest-remainder apportionment over the three splits.
    const double n = static_cast<double>(uniq.size());
    std::array<std::size_t, 3> counts{};
    std::array<double, 3> frac{};
    std::size_t assigned = 0;
    for (int i = 0; i < 3; ++i) {
        const double target = ratios[static_cast<std::size_t>(i)] * n;
        counts[static_cast<std::size_t>(i)] =
            static_cast<std::size_t>(std::floor(target));
        frac[static_cast<std::size_t>(i)] =
            target - std::floor(target);
        assigned += counts[static_cast<std::size_t>(i)];
    }
    while (assigned < uniq.size()) {
        int best = 0;
        for (int i = 1; i < 3; ++i) {
            if (frac[static_cast<std::size_t>(i)] >
                frac[static_cast<std::size_t>(best)])
                best = i;
        }
        ++counts[static_cast<std::size_t>(best)];
        frac[static_cast<std::size_t>(best)] = -1.0;
        ++assigned;
    }

    std::size_t idx = 0;
    const std::array<Split, 3> order{Split::Train, Split::Validation,
                                     Split::Test};
    for (int i = 0; i < 3; ++i) {
        for (std::size_t k = 0; k < counts[static_cast<std::size_t>(i)]; ++k) {
            out.by_subject[uniq[idx++]] = order[static_cast<std::size_t>(i)];
        }
    }
    return out;
}

void write_splits_csv(const SplitAssignment& splits, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "subject_id,split\n";
    for (const auto& [subject, split] : splits.by_subject) {
        out << subject << ',' << split_name(split) << '\n';
    }
}

SplitAssignment read_splits_csv(const std::string& path) {
    SplitAssignment out;
    const auto lines = read_lines(path);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const auto fields = split_csv(lines[i]);
        if (fields.size() != 2)
            throw ParseError("bad splits row at line " + std::to_string(i + 1));
        const auto s = split_from_name(fields[1]);
        if (!s)
            throw ParseError("unknown split '" + fields[1] + "' at line " +
                             std::to_string(i + 1));
        out.by_subject[fields[0]] = *s;
    }
    return out;
}

std::vector<Admission> admissions_in_split(const std::vector<Admission>& all,
                                           const SplitAssignment& splits,
                                           Split split) {
    std::vector<Admission> out;
    for (const auto& a : all) {
        const auto it = splits.by_subject.find(a.subject_id);
        if (it != splits.by_subject.end() && it->second == split)
            out.push_back(a);
    }
    return out;
}

}  // namespace ehr

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
#include "ehr/arms.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

#include "ehr/rng.hpp"
#include "ehr/util.hpp"

using nlohmann::json;

namespace ehr {

namespace {

// Splits "<FAMILY>//<id>[//rest]" into id and the preserved remainder.
struct CodeParts {
    std::string family;
    std::string id;
    std::string rest;  // includes leading "//" when present
    bool ok = false;
};

CodeParts split_code(const std::string& code) {
    CodeParts p;
    const auto first = code.find("//");
    if (first == std::string::npos) return p;
    p.family = code.substr(0, first);
    const auto second = code.find("//", first + 2);
    if (second == std::string::npos) {
        p.id = code.substr(first + 2);
    } else {
        p.id = code.substr(first + 2, second - first - 2);
        p.rest = code.substr(second);
    }
    p.ok = !p.family.empty() && !p.id.empty();
    return p;
}

}  // namespace

MappingTable MappingTable::from_csv(const std::string& path,
                                    std::vector<std::string>* errors) {
    MappingTable table;
    const auto lines = read_lines(path);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto& line = lines[i];
        if (line.empty()) continue;
        if (i == 0 && starts_with(line, "domain,")) continue;  // header
        const auto fields = split_csv(line);
        if (fields.size() != 3 || fields[0].empty() || fields[1].empty() ||
            fields[2].empty()) {
            if (errors)
                errors->push_back("mapping row " + std::to_string(i + 1) +
                                  ": expected domain,source_code,target_category");
            continue;
        }
        auto& domain = table.by_domain[fields[0]];
        if (domain.count(fields[1])) {
            if (errors)
                errors->push_back("mapping row " + std::to_string(i + 1) +
                                  ": duplicate source '" + fields[1] + "'");
            continue;
        }
        domain[fields[1]] = fields[2];
    }
    return table;
}

const char* arm_name(ArmKind k) {
    switch (k) {
        case ArmKind::Native: return "native";
        case ArmKind::Mapped: return "mapped";
        case ArmKind::Randomized: return "randomized";
        case ArmKind::FrequencyMatched: return "freqmatch";
    }
    return "?";
}

std::optional<ArmKind> arm_from_name(const std::string& s) {
    if (s == "native") return ArmKind::Native;
    if (s == "mapped") return ArmKind::Mapped;
    if (s == "randomized") return ArmKind::Randomized;
    if (s == "freqmatch" || s == "frequency_matched")
        return ArmKind::FrequencyMatched;
    return std::nullopt;
}

std::map<std::string, std::string> cycle_assign(
    const std::vector<std::string>& sources_sorted,
    const std::vector<std::string>& targets_in_order) {
    if (targets_in_order.empty())
        throw std::invalid_argument("cycle_assign: no targets");
    std::map<std::string, std::string> out;
    for (std::size_t k = 0; k < sources_sorted.size(); ++k) {
        out[sources_sorted[k]] = targets_in_order[k % targets_in_order.size()];
    }
    return out;
}

std::map<std::string, std::string> greedy_frequency_assign(
    const std::vector<std::pair<std::string, std::size_t>>& source_counts,
    const std::vector<std::pair<std::string, std::size_t>>& target_counts) {
    if (target_counts.empty())
        throw std::invalid_argument("greedy_frequency_assign: no targets");

    std::vector<std::pair<std::string, std::size_t>> sources = source_counts;
    std::sort(sources.begin(), sources.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    std::vector<double> remaining;
    remaining.reserve(target_counts.size());
    for (const auto& [_, n] : target_counts)
        remaining.push_back(static_cast<double>(n));

    std::map<std::string, std::string> out;
    for (const auto& [source, count] : sources) {
        std::size_t best = 0;
        for (std::size_t t = 1; t < remaining.size(); ++t) {
            if (remaining[t] > remaining[best]) best = t;  // ties keep first
        }
        out[source] = target_counts[best].first;
        remaining[best] -= static_cast<double>(count);
    }
    return out;
}

ArmAssignment build_arm(const std::vector<Admission>& train,
                        const MappingTable& table, ArmKind kind,
                        std::uint64_t seed) {
    ArmAssignment arm;
    arm.arm = kind;
    arm.seed = seed;
    if (kind == ArmKind::Native) return arm;

    // Realized per-domain source counts over train events.
    std::map<std::string, std::map<std::string, std::size_t>> source_counts;
    for (const auto& a : train) {
        for (const auto& e : a.events) {
            const auto parts = split_code(e.code);
            if (!parts.ok) continue;
            const auto dom_it = table.by_domain.find(parts.family);
            if (dom_it == table.by_domain.end()) continue;
            if (dom_it->second.count(parts.id) == 0) continue;
            ++source_counts[parts.family][parts.id];
        }
    }

    for (const auto& [domain, counts] : source_counts) {
        const auto& domain_table = table.by_domain.at(domain);

        if (kind == ArmKind::Mapped) {
            for (const auto& [source, _] : counts) {
                arm.map[domain][source] = domain_table.at(source);
            }
            continue;
        }

        // Mapped-arm realized target set, in sorted order, with train
        // frequencies accumulated through the mapped assignment.
        std::map<std::string, std::size_t> target_counts;
        for (const auto& [source, n] : counts) {
            target_counts[domain_table.at(source)] += n;
        }
        std::vector<std::string> sources;
        sources.reserve(counts.size());
        for (const auto& [source, _] : counts) sources.push_back(source);
        std::sort(sources.begin(), sources.end());

        if (kind == ArmKind::Randomized) {
            std::vector<std::string> targets;
            targets.reserve(target_counts.size());
            for (const auto& [t, _] : target_counts) targets.push_back(t);
            // One shuffle per domain, seeded independently of iteration order.
            Rng rng(seed, fnv1a64(domain));
            rng.shuffle(targets);
            arm.map[domain] = cycle_assign(sources, targets);
        } else {
            std::vector<std::pair<std::string, std::size_t>> src_counts(
                counts.begin(), counts.end());
            std::vector<std::pair<std::string, std::size_t>> tgt_counts(
                target_counts.begin(), target_counts.end());
            arm.map[domain] = greedy_frequency_assign(src_counts, tgt_counts);
        }
    }
    return arm;
}

std::vector<Admission> apply_arm(const std::vector<Admission>& admissions,
                                 const ArmAssignment& arm,
                                 std::vector<DomainCoverage>* coverage) {
    std::map<std::string, DomainCoverage> cov;
    for (const auto& [domain, _] : arm.map) {
        cov[domain].domain = domain;
    }

    std::vector<Admission> out = admissions;
    for (auto& a : out) {
        for (auto& e : a.events) {
            const auto parts = split_code(e.code);
            if (!parts.ok) continue;
            const auto dom_it = arm.map.find(parts.family);
            if (dom_it == arm.map.end()) continue;
            auto& c = cov[parts.family];
            ++c.total_events;
            const auto tgt_it = dom_it->second.find(parts.id);
            if (tgt_it == dom_it->second.end()) continue;
            e.code = parts.family + "//" + tgt_it->second + parts.rest;
            ++c.mapped_events;
        }
    }
    if (coverage) {
        coverage->clear();
        for (auto& [_, c] : cov) {
            c.fraction = c.total_events == 0
                             ? 0.0
                             : static_cast<double>(c.mapped_events) /
                                   static_cast<double>(c.total_events);
            coverage->push_back(c);
        }
    }
    return out;
}

std::string arm_to_json(const ArmAssignment& arm) {
    json j;
    j["arm"] = arm_name(arm.arm);
    j["seed"] = arm.seed;
    json map = json::object();
    for (const auto& [domain, entries] : arm.map) {
        json dom = json::object();
        for (const auto& [source, target] : entries) dom[source] = target;
        map[domain] = std::move(dom);
    }
    j["map"] = std::move(map);
    return j.dump(2) + "\n";
}

std::string coverage_to_json(const std::vector<DomainCoverage>& coverage) {
    json arr = json::array();
    for (const auto& c : coverage) {
        arr.push_back({{"domain", c.domain},
                       {"mapped_events", c.mapped_events},
                       {"total_events", c.total_events},
                       {"fraction", c.fraction}});
    }
    return arr.dump(2) + "\n";
}

}  // namespace ehr

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
#include "ehr/outcomes.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "ehr/tomlmini.hpp"
#include "ehr/util.hpp"

namespace ehr {

namespace {

bool code_matches(const std::string& code, const std::string& group_entry) {
    return code == group_entry ||
           (code.size() > group_entry.size() + 1 &&
            starts_with(code, group_entry) &&
            code.compare(group_entry.size(), 2, "//") == 0);
}

bool in_group(const Event& e, const std::vector<std::string>& group) {
    return std::any_of(group.begin(), group.end(), [&](const std::string& g) {
        return code_matches(e.code, g);
    });
}

enum class WindowKind { First24h, Post24h, WholeStay };

bool in_window(const Event& e, const Admission& a, WindowKind w) {
    const std::int64_t cutoff = a.admit_time + kSecondsPerDay;
    switch (w) {
        case WindowKind::First24h: return e.time <= cutoff;
        case WindowKind::Post24h: return e.time > cutoff;
        case WindowKind::WholeStay: return true;
    }
    return false;
}

bool compare(double value, double threshold, const std::string& direction) {
    if (direction == "ge") return value >= threshold;
    if (direction == "gt") return value > threshold;
    if (direction == "le") return value <= threshold;
    if (direction == "lt") return value < threshold;
    throw ConfigError("outcome: unknown direction '" + direction + "'");
}

// Paired start/end segments summed in hours; an unclosed segment ends at
// discharge.
double paired_duration_hours(const Admission& a,
                             const std::vector<std::string>& group) {
    if (group.size() != 2)
        throw ConfigError("duration outcome needs [] or [start, end] codes");
    double total = 0.0;
    bool open = false;
    std::int64_t open_time = 0;
    for (const auto& e : a.events) {
        if (code_matches(e.code, group[0])) {
            if (!open) {
                open = true;
                open_time = e.time;
            }
        } else if (code_matches(e.code, group[1])) {
            if (open) {
                total += static_cast<double>(e.time - open_time) / 3600.0;
                open = false;
            }
        }
    }
    if (open)
        total += static_cast<double>(a.discharge_time - open_time) / 3600.0;
    return total;
}

// Aggregate value of one component over a window; nullopt when no
// qualifying measurement exists.
std::optional<double> component_value(const Admission& a,
                                      const OutcomeComponent& c,
                                      WindowKind w) {
    using Agg = OutcomeComponent::Aggregate;
    switch (c.aggregate) {
        case Agg::Duration: {
            if (c.code_group.empty()) {
                const std::int64_t end = w == WindowKind::First24h
                                             ? std::min(a.discharge_time,
                                                        a.admit_time +
                                                            kSecondsPerDay)
                                             : a.discharge_time;
                return static_cast<double>(end - a.admit_time) / 3600.0;
            }
            return paired_duration_hours(a, c.code_group);
        }
        case Agg::Exists: {
            for (const auto& e : a.events) {
                if (in_window(e, a, w) && in_group(e, c.code_group)) return 1.0;
            }
            return 0.0;
        }
        case Agg::Max:
        case Agg::Min: {
            std::optional<double> best;
            for (const auto& e : a.events) {
                if (!e.is_numeric() || !in_window(e, a, w) ||
                    !in_group(e, c.code_group))
                    continue;
                const double v = *e.numeric_value;
                if (!best) {
                    best = v;
                } else if (c.aggregate == Agg::Max) {
                    best = std::max(*best, v);
                } else {
                    best = std::min(*best, v);
                }
            }
            return best;
        }
    }
    return std::nullopt;
}

bool component_met(const Admission& a, const OutcomeComponent& c,
                   WindowKind w) {
    const auto value = component_value(a, c, w);
    if (!value) return false;
    if (c.aggregate == OutcomeComponent::Aggregate::Exists)
        return *value > 0.0;
    if (!c.threshold)
        throw ConfigError("binary component without threshold");
    return compare(*value, *c.threshold, c.direction);
}

bool has_post24h_measurement(const Admission& a, const OutcomeSpec& spec) {
    for (const auto& c : spec.components) {
        for (const auto& e : a.events) {
            if (e.is_numeric() && in_window(e, a, WindowKind::Post24h) &&
                in_group(e, c.code_group))
                return true;
        }
    }
    return false;
}

bool has_window_event(const Admission& a, const OutcomeSpec& spec,
                      WindowKind w) {
    for (const auto& c : spec.components) {
        for (const auto& e : a.events) {
            if (in_window(e, a, w) && in_group(e, c.code_group)) return true;
        }
    }
    return false;
}

WindowKind outcome_window(const OutcomeSpec& spec) {
    return spec.window == OutcomeSpec::Window::Post24h ? WindowKind::Post24h
                                                       : WindowKind::WholeStay;
}

}  // namespace

LabelRow label(const Admission& a, const OutcomeSpec& spec) {
    LabelRow row;
    row.admission_id = a.admission_id;
    if (spec.components.empty())
        throw ConfigError("outcome '" + spec.name + "' has no components");

    const WindowKind w = outcome_window(spec);

    if (spec.exclusion_24h) {
        for (const auto& c : spec.components) {
            if (component_met(a, c, WindowKind::First24h)) {
                row.eligible = false;
                return row;
            }
        }
    }
    if (spec.require_post24h_measurement && !has_post24h_measurement(a, spec)) {
        row.eligible = false;
        return row;
    }
    if (spec.require_event && !has_window_event(a, spec, w)) {
        row.eligible = false;
        return row;
    }

    row.eligible = true;
    if (spec.kind == OutcomeSpec::Kind::Binary) {
        bool met = false;
        for (const auto& c : spec.components) {
            if (component_met(a, c, w)) {
                met = true;
                break;
            }
        }
        row.label = met ? 1.0 : 0.0;
    } else {
        if (spec.components.size() != 1)
            throw ConfigError("regression outcome '" + spec.name +
                              "' must have exactly one component");
        const auto value = component_value(a, spec.components[0], w);
        if (value) {
            row.label = *value;
        } else {
            row.eligible = false;
        }
    }
    return row;
}

CohortLabels label_cohort(const std::vector<Admission>& admissions,
                          const std::vector<OutcomeSpec>& specs) {
    CohortLabels out;
    for (const auto& spec : specs) {
        auto& rows = out.rows[spec.name];
        rows.reserve(admissions.size());
        OutcomeSummary s;
        s.name = spec.name;
        double sum = 0.0, sum_sq = 0.0;
        for (const auto& a : admissions) {
            rows.push_back(label(a, spec));
            const auto& row = rows.back();
            if (!row.eligible) continue;
            ++s.eligible_n;
            if (spec.kind == OutcomeSpec::Kind::Binary) {
                if (row.label && *row.label > 0.5) {
                    ++s.positives;
                } else {
                    ++s.negatives;
                }
            } else if (row.label) {
                sum += *row.label;
                sum_sq += *row.label * *row.label;
            }
        }
        if (spec.kind == OutcomeSpec::Kind::Regression && s.eligible_n > 0) {
            const double n = static_cast<double>(s.eligible_n);
            s.mean = sum / n;
            const double var = std::max(0.0, sum_sq / n - s.mean * s.mean);
            s.sd = std::sqrt(var);
        }
        out.summaries.push_back(std::move(s));
    }
    return out;
}

namespace {

OutcomeComponent parse_component(const toml::Value& t) {
    OutcomeComponent c;
    if (t.contains("codes")) c.code_group = t.at("codes").as_string_array();
    const std::string agg = t.get_string("aggregate", "exists");
    if (agg == "max") {
        c.aggregate = OutcomeComponent::Aggregate::Max;
    } else if (agg == "min") {
        c.aggregate = OutcomeComponent::Aggregate::Min;
    } else if (agg == "exists" || agg == "any") {
        c.aggregate = OutcomeComponent::Aggregate::Exists;
    } else if (agg == "duration") {
        c.aggregate = OutcomeComponent::Aggregate::Duration;
    } else {
        throw ConfigError("outcome: unknown aggregate '" + agg + "'");
    }
    if (t.contains("threshold")) c.threshold = t.at("threshold").as_double();
    c.direction = t.get_string("direction", "ge");
    return c;
}

}  // namespace

std::vector<OutcomeSpec> parse_outcome_config(const std::string& text) {
    const auto root = toml::parse(text);
    if (!root.contains("outcome"))
        throw ConfigError("outcome config: no [[outcome]] entries");
    std::vector<OutcomeSpec> specs;
    for (const auto& t : root.at("outcome").array) {
        OutcomeSpec spec;
        spec.name = t.at("name").as_string();
        const std::string kind = t.get_string("kind", "binary");
        if (kind == "binary") {
            spec.kind = OutcomeSpec::Kind::Binary;
        } else if (kind == "regression") {
            spec.kind = OutcomeSpec::Kind::Regression;
        } else {
            throw ConfigError("outcome '" + spec.name + "': unknown kind");
        }
        const std::string window = t.get_string("window", "post_24h");
        if (window == "post_24h") {
            spec.window = OutcomeSpec::Window::Post24h;
        } else if (window == "whole_stay") {
            spec.window = OutcomeSpec::Window::WholeStay;
        } else {
            throw ConfigError("outcome '" + spec.name + "': unknown window");
        }
        spec.exclusion_24h = t.get_bool("exclusion_24h", false);
        spec.require_post24h_measurement =
            t.get_bool("require_post24h_measurement", false);
        spec.require_event = t.get_bool("require_event", false);
        if (t.contains("component")) {
            for (const auto& comp : t.at("component").array) {
                spec.components.push_back(parse_component(comp));
            }
        }
        specs.push_back(std::move(spec));
    }
    return specs;
}

std::vector<OutcomeSpec> load_outcome_config(const std::string& path) {
    return parse_outcome_config(read_file(path));
}

void write_labels_csv(const CohortLabels& labels, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "admission_id,outcome,eligible,label\n";
    for (const auto& [outcome, rows] : labels.rows) {
        for (const auto& row : rows) {
            out << row.admission_id << ',' << outcome << ','
                << (row.eligible ? 1 : 0) << ','
                << (row.label ? format_g17(*row.label) : "") << '\n';
        }
    }
}

std::map<std::string, std::vector<LabelRow>> read_labels_csv(
    const std::string& path) {
    std::map<std::string, std::vector<LabelRow>> out;
    const auto lines = read_lines(path);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const auto fields = split_csv(lines[i]);
        if (fields.size() != 4)
            throw ParseError("labels CSV row " + std::to_string(i + 1));
        LabelRow row;
        row.admission_id = fields[0];
        row.eligible = fields[2] == "1";
        if (!fields[3].empty()) row.label = std::stod(fields[3]);
        out[fields[1]].push_back(std::move(row));
    }
    return out;
}

}  // namespace ehr

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
#include "ehr/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ehr/encoders.hpp"
#include "ehr/ingest.hpp"
#include "ehr/metrics.hpp"
#include "ehr/outcomes.hpp"
#include "ehr/quantiles.hpp"
#include "ehr/rng.hpp"
#include "ehr/splits.hpp"
#include "ehr/tokenizer.hpp"
#include "ehr/tomlmini.hpp"
#include "ehr/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace ehr {

std::string RepresentationConfig::serialize() const {
    std::ostringstream ss;
    ss << id << '|' << granularity << '|' << anchored << '|' << layout[0] << ','
       << layout[1] << ',' << layout[2] << '|' << fusion_name(fusion) << '|'
       << encoder_name(encoder) << '|' << xval_affine << '|'
       << temporal_name(temporal) << '|' << arm_name(arm);
    return ss.str();
}

void validate_representation(const RepresentationConfig& rep) {
    if (rep.granularity != 10 && rep.granularity != 20 && rep.granularity != 30 &&
        rep.granularity != 100) {
        throw ConfigError("config '" + rep.id +
                          "': granularity must be one of 10, 20, 30, 100");
    }
    if (rep.anchored &&
        rep.layout[0] + rep.layout[1] + rep.layout[2] != rep.granularity) {
        throw ConfigError("config '" + rep.id +
                          "': anchored layout must sum to the granularity");
    }
    if (rep.fusion == Fusion::Fused && rep.encoder != EncoderMode::Discrete) {
        throw ConfigError(
            "config '" + rep.id +
            "': soft and xval encoders need separate code and value slots; "
            "use unfused tokenization");
    }
    if (rep.xval_affine && rep.encoder != EncoderMode::Xval) {
        throw ConfigError("config '" + rep.id +
                          "': xval_affine applies only to the xval encoder");
    }
    if (rep.arm != ArmKind::Native &&
        (rep.encoder != EncoderMode::Discrete ||
         rep.temporal != TemporalMode::AdmissionRelative)) {
        throw ConfigError(
            "config '" + rep.id +
            "': vocabulary arms run with the discrete encoder and "
            "admission-relative positions");
    }
}

namespace {

RepresentationConfig make_rep(std::string id, int granularity, bool anchored,
                              std::array<int, 3> layout, Fusion fusion,
                              EncoderMode encoder, bool affine,
                              TemporalMode temporal, ArmKind arm) {
    RepresentationConfig rep;
    rep.id = std::move(id);
    rep.granularity = granularity;
    rep.anchored = anchored;
    rep.layout = layout;
    rep.fusion = fusion;
    rep.encoder = encoder;
    rep.xval_affine = affine;
    rep.temporal = temporal;
    rep.arm = arm;
    return rep;
}

}  // namespace

std::vector<RepresentationConfig> experiment_grid(
    const std::string& experiment) {
    std::vector<RepresentationConfig> grid;
    const auto pop = std::array<int, 3>{0, 0, 0};

    if (experiment == "exp1") {
        struct G {
            const char* name;
            int bins;
            bool anchored;
            std::array<int, 3> layout;
        };
        const std::vector<G> granularities = {
            {"deciles", 10, false, pop},
            {"ventiles", 20, false, pop},
            {"ventiles_clin", 20, true, {5, 10, 5}},
            {"trentiles", 30, false, pop},
            {"trentiles_clin", 30, true, {10, 10, 10}},
            {"centiles", 100, false, pop},
        };
        for (const auto& g : granularities) {
            for (const Fusion fusion : {Fusion::Unfused, Fusion::Fused}) {
                grid.push_back(make_rep(
                    std::string(g.name) + "_" + fusion_name(fusion), g.bins,
                    g.anchored, g.anchored ? g.layout : std::array<int, 3>{5, 10, 5},
                    fusion, EncoderMode::Discrete, false,
                    TemporalMode::TimeTokens, ArmKind::Native));
            }
        }
        return grid;
    }

    if (experiment == "exp2") {
        struct E {
            const char* name;
            EncoderMode encoder;
            bool affine;
        };
        struct T {
            const char* name;
            TemporalMode mode;
        };
        const std::vector<E> encoders = {
            {"discrete", EncoderMode::Discrete, false},
            {"soft", EncoderMode::Soft, false},
            {"xval", EncoderMode::Xval, false},
            {"xval_affine", EncoderMode::Xval, true},
        };
        const std::vector<T> temporals = {
            {"none", TemporalMode::EventOrder},
            {"tt", TemporalMode::TimeTokens},
            {"rope", TemporalMode::AdmissionRelative},
        };
        for (const auto& e : encoders) {
            for (const auto& t : temporals) {
                grid.push_back(make_rep(
                    std::string(e.name) + "_" + t.name, 10, false,
                    {5, 10, 5}, Fusion::Unfused, e.encoder, e.affine, t.mode,
                    ArmKind::Native));
            }
        }
        return grid;
    }

    if (experiment == "exp3") {
        for (const ArmKind arm :
             {ArmKind::Native, ArmKind::Mapped, ArmKind::Randomized,
              ArmKind::FrequencyMatched}) {
            grid.push_back(make_rep(arm_name(arm), 10, false, {5, 10, 5},
                                    Fusion::Unfused, EncoderMode::Discrete,
                                    false, TemporalMode::AdmissionRelative,
                                    arm));
        }
        return grid;
    }

    throw ConfigError("unknown experiment '" + experiment + "'");
}

std::string default_reference(const std::string& experiment) {
    if (experiment == "exp1") return "deciles_unfused";
    if (experiment == "exp2") return "discrete_none";
    if (experiment == "exp3") return "native";
    return "";
}

std::string default_mapping_csv() {
    return
        "domain,source_code,target_category\n"
        "LAB,50971,potassium\n"
        "LAB,50822,potassium\n"
        "LAB,50983,sodium\n"
        "LAB,50824,sodium\n"
        "LAB,52623,sodium\n"
        "LAB,50931,glucose_serum\n"
        "LAB,50809,glucose_serum\n"
        "LAB,51222,hemoglobin\n"
        "LAB,50811,hemoglobin\n"
        "LAB,50912,creatinine\n"
        "LAB,51003,troponin_t\n"
        "LAB,50963,bnp\n"
        "LAB,50964,bnp\n"
        "VITAL,220045,heart_rate\n"
        "VITAL,220179,sbp\n"
        "VITAL,220050,sbp\n"
        "VITAL,225309,sbp\n"
        "VITAL,220180,dbp\n"
        "VITAL,220051,dbp\n"
        "VITAL,220181,map\n"
        "VITAL,220052,map\n"
        "VITAL,220277,spo2\n"
        "VITAL,227290,crrt_marker\n"
        "VITAL,226499,hemodialysis_marker\n";
}

namespace {

RepresentationConfig rep_from_toml(const toml::Value& t) {
    RepresentationConfig rep;
    rep.id = t.get_string("id", "single");
    rep.granularity = static_cast<int>(t.get_int("granularity", 10));
    rep.anchored = t.get_bool("anchored", false);
    if (t.contains("layout")) {
        const auto l = t.at("layout").as_int_array();
        if (l.size() != 3) throw ConfigError("layout must have 3 entries");
        rep.layout = {static_cast<int>(l[0]), static_cast<int>(l[1]),
                      static_cast<int>(l[2])};
    }
    const auto fusion = fusion_from_name(t.get_string("fusion", "unfused"));
    if (!fusion) throw ConfigError("unknown fusion");
    rep.fusion = *fusion;
    const std::string enc = t.get_string("encoder", "discrete");
    const auto encoder = encoder_from_name(enc);
    if (!encoder) throw ConfigError("unknown encoder '" + enc + "'");
    rep.encoder = *encoder;
    rep.xval_affine = enc == "xval_affine";
    const auto temporal =
        temporal_from_name(t.get_string("temporal", "event_order"));
    if (!temporal) throw ConfigError("unknown temporal mode");
    rep.temporal = *temporal;
    const auto arm = arm_from_name(t.get_string("arm", "native"));
    if (!arm) throw ConfigError("unknown arm");
    rep.arm = *arm;
    return rep;
}

}  // namespace

PipelineConfig parse_pipeline_config(const std::string& text) {
    const auto root = toml::parse(text);
    PipelineConfig cfg;

    if (root.contains("paths")) {
        const auto& p = root.at("paths");
        cfg.out_dir = p.get_string("out_dir", cfg.out_dir);
        cfg.events_path = p.get_string("events", "");
        cfg.demographics_path = p.get_string("demographics", "");
        cfg.events_format = p.get_string("format", "jsonl");
        cfg.mapping_path = p.get_string("mapping", "");
        cfg.outcomes_path = p.get_string("outcomes", "");
        cfg.features_prefix = p.get_string("features_prefix", "");
    }
    if (root.contains("cohort")) {
        const auto& c = root.at("cohort");
        cfg.synthetic = c.get_bool("synthetic", cfg.events_path.empty());
        cfg.synth.n_admissions = static_cast<std::size_t>(
            c.get_int("n_admissions", static_cast<std::int64_t>(
                                          cfg.synth.n_admissions)));
        cfg.synth.seed = static_cast<std::uint64_t>(
            c.get_int("seed", static_cast<std::int64_t>(cfg.synth.seed)));
    } else {
        cfg.synthetic = cfg.events_path.empty();
    }
    if (root.contains("experiment")) {
        const auto& e = root.at("experiment");
        cfg.experiment = e.get_string("id", cfg.experiment);
        cfg.reference = e.get_string("reference", "");
    }
    if (root.contains("representation")) {
        cfg.rep = rep_from_toml(root.at("representation"));
    }
    if (root.contains("stats")) {
        const auto& s = root.at("stats");
        cfg.stats.n_boot = static_cast<std::size_t>(
            s.get_int("n_boot", static_cast<std::int64_t>(cfg.stats.n_boot)));
        cfg.stats.boot_seed = static_cast<std::uint64_t>(s.get_int(
            "boot_seed", static_cast<std::int64_t>(cfg.stats.boot_seed)));
        cfg.stats.n_perm = static_cast<std::size_t>(
            s.get_int("n_perm", static_cast<std::int64_t>(cfg.stats.n_perm)));
        cfg.stats.perm_seed = static_cast<std::uint64_t>(s.get_int(
            "perm_seed", static_cast<std::int64_t>(cfg.stats.perm_seed)));
    }
    if (root.contains("seeds")) {
        const auto& s = root.at("seeds");
        cfg.split_seed = static_cast<std::uint64_t>(
            s.get_int("split", static_cast<std::int64_t>(cfg.split_seed)));
        cfg.arm_seed = static_cast<std::uint64_t>(
            s.get_int("arm", static_cast<std::int64_t>(cfg.arm_seed)));
        cfg.pack_seed = static_cast<std::uint64_t>(
            s.get_int("pack", static_cast<std::int64_t>(cfg.pack_seed)));
        cfg.feature_seed = static_cast<std::uint64_t>(
            s.get_int("features", static_cast<std::int64_t>(cfg.feature_seed)));
    }
    if (root.contains("tokenizer")) {
        const auto& t = root.at("tokenizer");
        cfg.window_len = static_cast<std::size_t>(t.get_int(
            "window_len", static_cast<std::int64_t>(cfg.window_len)));
        cfg.pad_mean = t.get_double("pad_mean", cfg.pad_mean);
        cfg.rope_scale_seconds =
            t.get_int("rope_scale_seconds", cfg.rope_scale_seconds);
        if (t.contains("spacing_edges")) {
            cfg.spacing_edges = t.at("spacing_edges").as_int_array();
            if (cfg.spacing_edges.size() < 2 ||
                !std::is_sorted(cfg.spacing_edges.begin(),
                                cfg.spacing_edges.end()) ||
                std::adjacent_find(cfg.spacing_edges.begin(),
                                   cfg.spacing_edges.end()) !=
                    cfg.spacing_edges.end()) {
                throw ConfigError(
                    "tokenizer.spacing_edges must be strictly increasing "
                    "with at least 2 entries");
            }
        }
    }
    if (root.contains("features")) {
        cfg.feature_dim = static_cast<int>(
            root.at("features").get_int("dim", cfg.feature_dim));
    }

    if (cfg.reference.empty()) cfg.reference = default_reference(cfg.experiment);
    if (cfg.experiment == "single") {
        validate_representation(cfg.rep);
    } else {
        for (const auto& rep : experiment_grid(cfg.experiment)) {
            validate_representation(rep);
        }
    }
    return cfg;
}

PipelineConfig load_pipeline_config(const std::string& path) {
    return parse_pipeline_config(read_file(path));
}

// ---------------------------------------------------------------------------
// feature synthesis

FeatureMatrix synthesize_features(const std::vector<Admission>& admissions,
                                  const std::string& config_id,
                                  std::uint64_t seed, int dim) {
    FeatureMatrix m;
    m.dim = static_cast<std::size_t>(dim);
    m.ids.reserve(admissions.size());
    m.data.assign(admissions.size() * m.dim, 0.0);

    const std::uint64_t config_hash = fnv1a64(config_id);
    // Config-dependent noise floor so different representations genuinely
    // score differently downstream.
    const double noise_amp =
        0.12 + 0.18 * static_cast<double>(config_hash % 97) / 96.0;

    for (std::size_t i = 0; i < admissions.size(); ++i) {
        const Admission first24 = cut_first_24h(admissions[i]);
        m.ids.push_back(first24.admission_id);

        double max_k = 4.2, min_hgb = 11.5, max_hr = 85.0, min_sbp = 120.0;
        double min_map = 85.0, max_na = 139.0, min_glu = 100.0;
        double icu_flag = 0.0;
        for (const auto& e : first24.events) {
            const auto& c = e.code;
            if (c == "ICU_ADMISSION") icu_flag = 1.0;
            if (!e.is_numeric()) continue;
            const double v = *e.numeric_value;
            if (starts_with(c, "LAB//50971") || starts_with(c, "LAB//50822")) {
                max_k = std::max(max_k, v);
            } else if (starts_with(c, "LAB//51222") ||
                       starts_with(c, "LAB//50811")) {
                min_hgb = std::min(min_hgb, v);
            } else if (starts_with(c, "VITAL//220045")) {
                max_hr = std::max(max_hr, v);
            } else if (starts_with(c, "VITAL//220179") ||
                       starts_with(c, "VITAL//220050")) {
                min_sbp = std::min(min_sbp, v);
            } else if (starts_with(c, "VITAL//220181") ||
                       starts_with(c, "VITAL//220052")) {
                min_map = std::min(min_map, v);
            } else if (starts_with(c, "LAB//50983")) {
                max_na = std::max(max_na, v);
            } else if (starts_with(c, "LAB//50931")) {
                min_glu = std::min(min_glu, v);
            }
        }
        const double signals[8] = {
            std::log1p(static_cast<double>(first24.events.size())),
            (max_k - 4.2) / 0.6,
            (11.5 - min_hgb) / 1.5,
            (max_hr - 85.0) / 15.0,
            (120.0 - min_sbp) / 15.0,
            (85.0 - min_map) / 10.0,
            ((max_na - 139.0) / 4.0) + ((100.0 - min_glu) / 25.0),
            icu_flag,
        };
        Rng rng(seed ^ config_hash, fnv1a64(first24.admission_id));
        auto row = m.row(i);
        for (std::size_t j = 0; j < m.dim; ++j) {
            const double base = j < 8 ? signals[j] : 0.0;
            row[j] = base + noise_amp * rng.normal();
        }
    }
    return m;
}

// ---------------------------------------------------------------------------
// stage plumbing

namespace {

struct Manifest {
    std::map<std::string, std::string> stages;
    std::map<std::string, std::string> artifacts;
};

Manifest read_manifest(const fs::path& path) {
    Manifest m;
    if (!fs::exists(path)) return m;
    const json j = json::parse(read_file(path.string()));
    if (j.contains("stages")) {
        for (const auto& [k, v] : j.at("stages").items())
            m.stages[k] = v.get<std::string>();
    }
    if (j.contains("artifacts")) {
        for (const auto& [k, v] : j.at("artifacts").items())
            m.artifacts[k] = v.get<std::string>();
    }
    return m;
}

void write_manifest(const Manifest& m, const fs::path& path) {
    json j;
    j["stages"] = json::object();
    for (const auto& [k, v] : m.stages) j["stages"][k] = v;
    j["artifacts"] = json::object();
    for (const auto& [k, v] : m.artifacts) j["artifacts"][k] = v;
    write_file(path.string(), j.dump(2) + "\n");
}

std::string sig_of(std::initializer_list<std::string> parts) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (const auto& p : parts) {
        h = fnv1a64(p, h);
        h = fnv1a64("|", h);
    }
    return hash_hex(h);
}

struct StageLog {
    std::ostream* out;
    std::chrono::steady_clock::time_point start;

    explicit StageLog(std::ostream* o) : out(o) {}
    void line(const std::string& msg) {
        if (out) *out << msg << std::endl;
    }
    void stage(const std::string& name, bool cached, double seconds) {
        if (out) {
            *out << "[" << name << "] " << (cached ? "cached" : "built")
                 << " (" << static_cast<int>(seconds * 1000) << " ms)"
                 << std::endl;
        }
    }
};

bool outputs_exist(const fs::path& dir,
                   const std::vector<std::string>& relpaths) {
    for (const auto& rel : relpaths) {
        if (!fs::exists(dir / rel)) return false;
    }
    return true;
}

// Per-(outcome) probe predictions on the eligible test rows.
struct ConfigResults {
    // outcome -> (admission ids, scores) aligned with eligible test rows.
    std::map<std::string, std::vector<double>> scores;
    std::map<std::string, std::vector<std::string>> ids;
};

void write_preds_csv(const ConfigResults& r, const fs::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "admission_id,outcome,score\n";
    for (const auto& [outcome, scores] : r.scores) {
        const auto& ids = r.ids.at(outcome);
        for (std::size_t i = 0; i < scores.size(); ++i) {
            out << ids[i] << ',' << outcome << ',' << format_g17(scores[i])
                << '\n';
        }
    }
}

ConfigResults read_preds_csv(const fs::path& path) {
    ConfigResults r;
    const auto lines = read_lines(path.string());
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const auto f = split_csv(lines[i]);
        if (f.size() != 3)
            throw ParseError("preds row " + std::to_string(i + 1));
        r.ids[f[1]].push_back(f[0]);
        r.scores[f[1]].push_back(std::stod(f[2]));
    }
    return r;
}

struct OutcomeKindMap {
    std::map<std::string, OutcomeSpec::Kind> kinds;
    std::vector<std::string> order;  // config-file order
};

}  // namespace

// ---------------------------------------------------------------------------

RunResult run_pipeline(const PipelineConfig& cfg, std::ostream* log_stream) {
    StageLog log(log_stream);
    const fs::path out_dir(cfg.out_dir);
    fs::create_directories(out_dir);
    const fs::path manifest_path = out_dir / "manifest.json";
    const Manifest old_manifest = read_manifest(manifest_path);
    Manifest manifest;
    RunResult result;
    result.out_dir = cfg.out_dir;

    auto timed = [&](const std::string& name, const std::string& sig,
                     const std::vector<std::string>& outputs, auto&& load,
                     auto&& build) {
        const auto start = std::chrono::steady_clock::now();
        const auto it = old_manifest.stages.find(name);
        const bool cached =
            it != old_manifest.stages.end() && it->second == sig &&
            outputs_exist(out_dir, outputs);
        if (cached) {
            load();
            ++result.stages_skipped;
        } else {
            build();
            ++result.stages_run;
        }
        manifest.stages[name] = sig;
        const double sec =
            std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                          start)
                .count();
        log.stage(name, cached, sec);
    };

    // ---- cohort ------------------------------------------------------------
    std::vector<Admission> admissions;
    std::vector<LedgerEntry> ledger;
    std::string cohort_sig;
    {
        if (cfg.synthetic) {
            cohort_sig = sig_of({"synth",
                                 std::to_string(cfg.synth.n_admissions),
                                 std::to_string(cfg.synth.seed)});
        } else {
            cohort_sig = sig_of({"ingest", cfg.events_path,
                                 hash_hex(hash_file(cfg.events_path)),
                                 hash_hex(hash_file(cfg.demographics_path)),
                                 cfg.events_format});
        }
        std::vector<std::string> outputs = {"events.jsonl",
                                            "demographics.jsonl"};
        if (cfg.synthetic) outputs.push_back("ledger.jsonl");

        timed(
            "cohort", cohort_sig, outputs,
            [&] {
                IngestReport report;
                IngestOptions opts;
                admissions = ingest((out_dir / "events.jsonl").string(),
                                    (out_dir / "demographics.jsonl").string(),
                                    opts, report);
                if (cfg.synthetic)
                    ledger =
                        read_ledger_jsonl((out_dir / "ledger.jsonl").string());
            },
            [&] {
                if (cfg.synthetic) {
                    SynthCohort cohort = generate(cfg.synth);
                    admissions = std::move(cohort.admissions);
                    ledger = std::move(cohort.ledger);
                    write_ledger_jsonl(ledger,
                                       (out_dir / "ledger.jsonl").string());
                } else {
                    IngestReport report;
                    IngestOptions opts;
                    opts.format = cfg.events_format == "csv" ? EventFormat::Csv
                                                             : EventFormat::Jsonl;
                    admissions = ingest(cfg.events_path, cfg.demographics_path,
                                        opts, report);
                    write_file((out_dir / "ingest_report.json").string(),
                               ingest_report_json(report));
                }
                write_events_jsonl(admissions,
                                   (out_dir / "events.jsonl").string());
                write_demographics_jsonl(
                    admissions, (out_dir / "demographics.jsonl").string());
            });
    }

    // ---- splits ------------------------------------------------------------
    SplitAssignment splits;
    const std::string splits_sig =
        sig_of({"splits", cohort_sig, std::to_string(cfg.split_seed)});
    timed(
        "splits", splits_sig, {"splits.csv"},
        [&] { splits = read_splits_csv((out_dir / "splits.csv").string()); },
        [&] {
            std::vector<std::string> subjects;
            subjects.reserve(admissions.size());
            for (const auto& a : admissions) subjects.push_back(a.subject_id);
            std::vector<std::string> warnings;
            splits = split_subjects(subjects, {0.7, 0.1, 0.2}, cfg.split_seed,
                                    &warnings);
            for (const auto& w : warnings) log.line("  warning: " + w);
            write_splits_csv(splits, (out_dir / "splits.csv").string());
        });

    // ---- outcome labels (native events, tokenizer-independent) -------------
    const std::string outcomes_text = cfg.outcomes_path.empty()
                                          ? default_outcome_config_toml()
                                          : read_file(cfg.outcomes_path);
    const auto outcome_specs = parse_outcome_config(outcomes_text);
    OutcomeKindMap kind_map;
    for (const auto& spec : outcome_specs) {
        kind_map.kinds[spec.name] = spec.kind;
        kind_map.order.push_back(spec.name);
    }

    CohortLabels labels;
    const std::string labels_sig =
        sig_of({"labels", cohort_sig, hash_hex(fnv1a64(outcomes_text))});
    timed(
        "labels", labels_sig, {"labels.csv", "outcome_summary.json"},
        [&] {
            labels.rows = read_labels_csv((out_dir / "labels.csv").string());
        },
        [&] {
            labels = label_cohort(admissions, outcome_specs);
            write_labels_csv(labels, (out_dir / "labels.csv").string());
            json summary = json::array();
            for (const auto& s : labels.summaries) {
                summary.push_back({{"outcome", s.name},
                                   {"eligible_n", s.eligible_n},
                                   {"positives", s.positives},
                                   {"negatives", s.negatives},
                                   {"mean", s.mean},
                                   {"sd", s.sd}});
            }
            write_file((out_dir / "outcome_summary.json").string(),
                       summary.dump(2) + "\n");
        });

    // Row lookup: admission id -> index within labels.rows[*] order.
    std::map<std::string, std::size_t> admission_index;
    for (std::size_t i = 0; i < admissions.size(); ++i) {
        admission_index[admissions[i].admission_id] = i;
    }

    // ---- per-configuration stages -------------------------------------------
    const std::vector<RepresentationConfig> grid =
        cfg.experiment == "single"
            ? std::vector<RepresentationConfig>{cfg.rep}
            : experiment_grid(cfg.experiment);
    std::string reference_id = cfg.reference.empty()
                                   ? default_reference(cfg.experiment)
                                   : cfg.reference;
    // A single-configuration run is its own reference (no paired tests).
    if (reference_id.empty()) reference_id = grid.front().id;
    {
        const bool found = std::any_of(
            grid.begin(), grid.end(),
            [&](const auto& r) { return r.id == reference_id; });
        if (!found)
            throw ConfigError("reference '" + reference_id +
                              "' is not in the experiment grid");
    }

    const std::string mapping_text = cfg.mapping_path.empty()
                                         ? default_mapping_csv()
                                         : read_file(cfg.mapping_path);

    std::map<std::string, ConfigResults> results_by_config;

    for (const auto& rep : grid) {
        validate_representation(rep);
        const fs::path cfg_dir = out_dir / "configs" / rep.id;
        fs::create_directories(cfg_dir);
        const std::string rel = "configs/" + rep.id + "/";
        std::string edges_key;
        for (const auto e : cfg.spacing_edges)
            edges_key += std::to_string(e) + ",";
        const std::string stage_sig = sig_of(
            {"config", cohort_sig, splits_sig, rep.serialize(),
             std::to_string(cfg.arm_seed), std::to_string(cfg.pack_seed),
             std::to_string(cfg.feature_seed), std::to_string(cfg.feature_dim),
             std::to_string(cfg.window_len), format_g17(cfg.pad_mean),
             std::to_string(cfg.rope_scale_seconds), edges_key,
             hash_hex(fnv1a64(mapping_text)), cfg.features_prefix, labels_sig});
        const std::vector<std::string> outputs = {
            rel + "specs.json",       rel + "vocab.json",
            rel + "streams_train.jsonl", rel + "streams_validation.jsonl",
            rel + "streams_test.jsonl",  rel + "lengths_train_full.json",
            rel + "lengths_test_24h.json", rel + "pack_summary.json",
            rel + "preds.csv",        rel + "probe_models.json"};

        timed(
            "config:" + rep.id, stage_sig, outputs,
            [&] {
                results_by_config[rep.id] =
                    read_preds_csv(cfg_dir / "preds.csv");
            },
            [&] {
                // Arm rewrite (train-built, applied to all splits).
                std::vector<Admission> cohort_events = admissions;
                if (rep.arm != ArmKind::Native) {
                    std::vector<std::string> errors;
                    const fs::path tmp_map = cfg_dir / "mapping_used.csv";
                    write_file(tmp_map.string(), mapping_text);
                    const MappingTable table =
                        MappingTable::from_csv(tmp_map.string(), &errors);
                    for (const auto& e : errors) log.line("  mapping: " + e);
                    const auto train_native =
                        admissions_in_split(admissions, splits, Split::Train);
                    const ArmAssignment arm =
                        build_arm(train_native, table, rep.arm, cfg.arm_seed);
                    std::vector<DomainCoverage> coverage;
                    cohort_events = apply_arm(admissions, arm, &coverage);
                    write_file((cfg_dir / "arm.json").string(),
                               arm_to_json(arm));
                    write_file((cfg_dir / "coverage.json").string(),
                               coverage_to_json(coverage));
                }

                const auto train = admissions_in_split(cohort_events, splits,
                                                       Split::Train);
                const auto val = admissions_in_split(cohort_events, splits,
                                                     Split::Validation);
                const auto test =
                    admissions_in_split(cohort_events, splits, Split::Test);

                // Fit on the train split only.
                FitOptions fit_opts;
                fit_opts.granularity = rep.granularity;
                fit_opts.anchored = rep.anchored;
                fit_opts.layout = rep.layout;
                std::vector<std::string> fit_warnings;
                const FittedStats fitted = fit_all(train, fit_opts,
                                                   &fit_warnings);
                write_file((cfg_dir / "specs.json").string(),
                           fitted_stats_to_json(fitted));

                TemporalConfig temporal;
                temporal.mode = rep.temporal;
                temporal.rope_scale_seconds = cfg.rope_scale_seconds;
                temporal.spacing_bin_edges = cfg.spacing_edges;
                Vocabulary vocab =
                    build_vocab(train, fitted, rep.fusion, temporal);
                vocab.granularity = rep.granularity;
                write_file((cfg_dir / "vocab.json").string(),
                           vocab_to_json(vocab));

                TokenizeOptions tok;
                tok.fusion = rep.fusion;
                tok.encoder = rep.encoder;
                tok.temporal = temporal;

                auto tokenize_split =
                    [&](const std::vector<Admission>& adms,
                        bool full) -> std::vector<TokenStream> {
                    std::vector<TokenStream> streams(adms.size());
                    TokenizeOptions o = tok;
                    o.full_timeline = full;
                    parallel_for(adms.size(), [&](std::size_t i) {
                        streams[i] =
                            full ? tokenize(adms[i], vocab, fitted, o)
                                 : tokenize(cut_first_24h(adms[i]), vocab,
                                            fitted, o);
                    });
                    return streams;
                };

                // Train keeps full timelines (pretraining view); validation
                // and test are first-24h prediction inputs.
                const auto train_streams = tokenize_split(train, true);
                const auto val_streams = tokenize_split(val, false);
                const auto test_streams = tokenize_split(test, false);
                write_streams_jsonl(train_streams,
                                    (cfg_dir / "streams_train.jsonl").string());
                write_streams_jsonl(
                    val_streams, (cfg_dir / "streams_validation.jsonl").string());
                write_streams_jsonl(test_streams,
                                    (cfg_dir / "streams_test.jsonl").string());
                write_file((cfg_dir / "lengths_train_full.json").string(),
                           length_report_json(length_report(train_streams)));
                write_file((cfg_dir / "lengths_test_24h.json").string(),
                           length_report_json(length_report(test_streams)));

                // Windowed, packed pretraining blocks (summary artifact).
                {
                    std::vector<TokenStream> windows;
                    for (const auto& s : train_streams) {
                        auto w = window(s, cfg.window_len);
                        windows.insert(windows.end(),
                                       std::make_move_iterator(w.begin()),
                                       std::make_move_iterator(w.end()));
                    }
                    const auto blocks =
                        pack(windows, cfg.window_len, cfg.pad_mean,
                             cfg.pack_seed);
                    std::size_t total = 0, pads = 0;
                    std::uint64_t h = 0xCBF29CE484222325ULL;
                    for (const auto& b : blocks) {
                        total += b.size();
                        for (const int id : b.token_ids) {
                            if (id == Vocabulary::kPad) ++pads;
                            const auto s = std::to_string(id) + ",";
                            h = fnv1a64(s, h);
                        }
                    }
                    json j;
                    j["n_blocks"] = blocks.size();
                    j["block_len"] = cfg.window_len;
                    j["pad_mean"] = cfg.pad_mean;
                    j["total_tokens"] = total;
                    j["pad_tokens"] = pads;
                    j["content_hash"] = hash_hex(h);
                    write_file((cfg_dir / "pack_summary.json").string(),
                               j.dump(2) + "\n");
                }

                // Features: external file per split or synthesized.
                auto features_for =
                    [&](const std::vector<Admission>& adms,
                        const char* split_name) -> FeatureMatrix {
                    if (!cfg.features_prefix.empty()) {
                        return read_features_auto(cfg.features_prefix + "_" +
                                                  split_name + ".csv");
                    }
                    // Feature semantics stay native; arms change codes only.
                    std::vector<Admission> native;
                    native.reserve(adms.size());
                    for (const auto& a : adms)
                        native.push_back(
                            admissions[admission_index.at(a.admission_id)]);
                    return synthesize_features(native, rep.id,
                                               cfg.feature_seed,
                                               cfg.feature_dim);
                };
                FeatureMatrix f_train = features_for(train, "train");
                FeatureMatrix f_val = features_for(val, "validation");
                FeatureMatrix f_test = features_for(test, "test");
                write_features_csv(f_train,
                                   (cfg_dir / "features_train.csv").string());
                write_features_csv(
                    f_val, (cfg_dir / "features_validation.csv").string());
                write_features_csv(f_test,
                                   (cfg_dir / "features_test.csv").string());

                const ZScoreStats z = zscore_fit(f_train);
                zscore_apply(z, f_train);
                zscore_apply(z, f_val);
                zscore_apply(z, f_test);

                std::map<std::string, std::size_t> train_row, val_row, test_row;
                for (std::size_t i = 0; i < f_train.ids.size(); ++i)
                    train_row[f_train.ids[i]] = i;
                for (std::size_t i = 0; i < f_val.ids.size(); ++i)
                    val_row[f_val.ids[i]] = i;
                for (std::size_t i = 0; i < f_test.ids.size(); ++i)
                    test_row[f_test.ids[i]] = i;

                // Probes per outcome.
                ConfigResults res;
                json probe_meta = json::object();
                for (const auto& name : kind_map.order) {
                    const auto& rows = labels.rows.at(name);
                    const bool binary =
                        kind_map.kinds.at(name) == OutcomeSpec::Kind::Binary;

                    FeatureMatrix Xt, Xv, Xs;
                    std::vector<double> yt, yv;
                    std::vector<std::string> test_ids;
                    Xt.dim = Xv.dim = Xs.dim = f_train.dim;
                    for (const auto& row : rows) {
                        if (!row.eligible || !row.label) continue;
                        const auto tr = train_row.find(row.admission_id);
                        if (tr != train_row.end()) {
                            const auto r = f_train.row(tr->second);
                            Xt.ids.push_back(row.admission_id);
                            Xt.data.insert(Xt.data.end(), r.begin(), r.end());
                            yt.push_back(*row.label);
                            continue;
                        }
                        const auto vr = val_row.find(row.admission_id);
                        if (vr != val_row.end()) {
                            const auto r = f_val.row(vr->second);
                            Xv.ids.push_back(row.admission_id);
                            Xv.data.insert(Xv.data.end(), r.begin(), r.end());
                            yv.push_back(*row.label);
                            continue;
                        }
                        const auto sr = test_row.find(row.admission_id);
                        if (sr != test_row.end()) {
                            const auto r = f_test.row(sr->second);
                            Xs.ids.push_back(row.admission_id);
                            Xs.data.insert(Xs.data.end(), r.begin(), r.end());
                            test_ids.push_back(row.admission_id);
                        }
                    }
                    if (Xs.rows() == 0 || Xt.rows() == 0) continue;

                    try {
                        ProbeModel model;
                        if (binary) {
                            model = fit_logistic(Xt, yt);
                        } else {
                            static const std::vector<double> kGrid = {
                                1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0, 1000.0};
                            std::vector<std::string> warnings;
                            model = fit_ridge(Xt, yt, kGrid, Xv, yv, &warnings);
                            for (const auto& w : warnings)
                                log.line("  " + rep.id + "/" + name + ": " + w);
                        }
                        res.scores[name] = predict(model, Xs);
                        res.ids[name] = test_ids;
                        probe_meta[name] = {
                            {"kind", binary ? "logistic" : "ridge"},
                            {"lambda", model.lambda},
                            {"iterations", model.iterations},
                            {"grad_inf_norm", model.grad_inf_norm}};
                    } catch (const std::exception& ex) {
                        log.line("  " + rep.id + "/" + name +
                                 ": probe skipped (" + ex.what() + ")");
                    }
                }
                write_preds_csv(res, cfg_dir / "preds.csv");
                write_file((cfg_dir / "probe_models.json").string(),
                           probe_meta.dump(2) + "\n");

                // Boundary probes on the reference configuration.
                if (rep.id == reference_id && rep.fusion == Fusion::Unfused) {
                    std::ostringstream report;
                    const int shared = fitted.max_realized_bins();
                    std::vector<std::string> q_tokens;
                    for (int k = 0; k < shared; ++k)
                        q_tokens.push_back(shared_q_token(k));
                    const EmbeddingTable tbl =
                        EmbeddingTable::init(q_tokens, cfg.feature_dim,
                                             cfg.feature_seed);
                    write_file((out_dir / "embedding_table.json").string(),
                               embedding_table_to_json(tbl));
                    for (const auto& [code, spec] : fitted.specs) {
                        const auto rr = fitted.ref_ranges.find(code);
                        if (rr == fitted.ref_ranges.end()) continue;
                        const int bins = spec.realized_bins();
                        if (bins < 3) continue;
                        std::vector<std::vector<double>> embeddings;
                        std::vector<int> bin_labels;
                        for (int bin = 0; bin < bins; ++bin) {
                            // Bin midpoint between adjacent realized cuts;
                            // edge bins use the nearest cut itself.
                            double mid;
                            const auto& bp = spec.realized_breakpoints;
                            if (bin == 0) {
                                mid = bp.front();
                            } else if (bin == bins - 1) {
                                mid = bp.back();
                            } else {
                                mid = 0.5 * (bp[static_cast<std::size_t>(bin - 1)] +
                                             bp[static_cast<std::size_t>(bin)]);
                            }
                            const bool normal = mid >= rr->second.first &&
                                                mid < rr->second.second;
                            embeddings.push_back(
                                tbl.at(shared_q_token(bin)));
                            bin_labels.push_back(normal ? 0 : 1);
                        }
                        const bool has0 = std::count(bin_labels.begin(),
                                                     bin_labels.end(), 0) > 0;
                        const bool has1 = std::count(bin_labels.begin(),
                                                     bin_labels.end(), 1) > 0;
                        if (!has0 || !has1) continue;
                        const auto probe =
                            boundary_probe(embeddings, bin_labels);
                        json line;
                        line["code"] = code;
                        line["granularity"] = rep.granularity;
                        line["loo_accuracy"] = probe.loo_accuracy;
                        report << line.dump() << '\n';
                    }
                    write_file((out_dir / "probe_report.jsonl").string(),
                               report.str());
                }

                results_by_config[rep.id] = std::move(res);
            });
    }

    // ---- evaluation ----------------------------------------------------------
    std::string eval_sig = sig_of(
        {"evaluate", labels_sig, reference_id,
         std::to_string(cfg.stats.n_boot), std::to_string(cfg.stats.boot_seed),
         std::to_string(cfg.stats.n_perm),
         std::to_string(cfg.stats.perm_seed)});
    for (const auto& rep : grid) {
        eval_sig = sig_of({eval_sig, manifest.stages.at("config:" + rep.id)});
    }

    timed(
        "evaluate", eval_sig, {"report.jsonl", "summary.csv"}, [&] {},
        [&] {
            std::ostringstream report;
            std::ostringstream summary;
            summary << "configuration,outcome,metric,n,point,ci_lo,ci_hi,"
                       "delta,delta_lo,delta_hi,p_raw,p_adjusted\n";

            struct Cell {
                MetricReport metric;
                std::optional<PairedTest> test;
            };

            const auto& ref_results = results_by_config.at(reference_id);

            // Eligible test labels per outcome, keyed once.
            std::map<std::string, std::map<std::string, double>> label_of;
            for (const auto& name : kind_map.order) {
                auto& m = label_of[name];
                for (const auto& row : labels.rows.at(name)) {
                    if (row.eligible && row.label)
                        m[row.admission_id] = *row.label;
                }
            }

            // One work item per (configuration, outcome); each expands into
            // that outcome's metric cells. Items run in parallel; all RNG
            // streams are counter-seeded, so scheduling cannot leak in.
            struct WorkItem {
                const RepresentationConfig* rep;
                const std::string* outcome;
            };
            std::vector<WorkItem> items;
            for (const auto& rep : grid) {
                for (const auto& name : kind_map.order) {
                    items.push_back({&rep, &name});
                }
            }
            std::vector<std::vector<Cell>> item_cells(items.size());

            parallel_for(items.size(), [&](std::size_t idx) {
                const auto& rep = *items[idx].rep;
                const auto& name = *items[idx].outcome;
                const bool binary =
                    kind_map.kinds.at(name) == OutcomeSpec::Kind::Binary;

                CellRequest req;
                req.binary = binary;
                req.n_boot = cfg.stats.n_boot;
                req.boot_seed = cfg.stats.boot_seed;
                req.n_perm = cfg.stats.n_perm;
                req.perm_seed = cfg.stats.perm_seed;

                const auto& res = results_by_config.at(rep.id);
                const auto s_it = res.scores.find(name);
                if (s_it != res.scores.end()) {
                    req.scores = s_it->second;
                    for (const auto& id : res.ids.at(name))
                        req.labels.push_back(label_of.at(name).at(id));
                }
                const auto ref_it = ref_results.scores.find(name);
                if (rep.id != reference_id && !req.scores.empty() &&
                    ref_it != ref_results.scores.end() &&
                    ref_it->second.size() == req.scores.size()) {
                    req.ref_scores = ref_it->second;
                }

                const auto metrics = evaluate_cell(req);
                auto& cells = item_cells[idx];
                for (const auto& cm : metrics) {
                    Cell cell;
                    cell.metric.configuration = rep.id;
                    cell.metric.outcome = name;
                    cell.metric.metric = cm.metric;
                    cell.metric.n = req.scores.size();
                    cell.metric.n_resamples = cfg.stats.n_boot;
                    cell.metric.seed = cfg.stats.boot_seed;
                    cell.metric.point = cm.point;
                    cell.metric.ci_lo = cm.ci_lo;
                    cell.metric.ci_hi = cm.ci_hi;
                    if (cm.has_test) {
                        PairedTest test;
                        test.configuration = rep.id;
                        test.reference = reference_id;
                        test.outcome = name;
                        test.metric = cm.metric;
                        test.family = cfg.experiment + ":" + cm.metric;
                        test.delta = cm.delta;
                        test.delta_lo = cm.delta_lo;
                        test.delta_hi = cm.delta_hi;
                        test.p_raw = cm.p_raw;
                        cell.test = std::move(test);
                    }
                    cells.push_back(std::move(cell));
                }
            });

            std::vector<Cell> cells;
            for (auto& ic : item_cells) {
                for (auto& c : ic) cells.push_back(std::move(c));
            }
            // family id -> indices into cells with a paired test
            std::map<std::string, std::vector<std::size_t>> families;
            for (std::size_t i = 0; i < cells.size(); ++i) {
                if (cells[i].test) {
                    families[cells[i].test->family].push_back(i);
                }
            }

            // BH correction within each experiment x metric family.
            for (const auto& [family, indices] : families) {
                std::vector<double> p;
                p.reserve(indices.size());
                for (const auto i : indices) p.push_back(cells[i].test->p_raw);
                const auto adjusted = bh_adjust(p);
                for (std::size_t k = 0; k < indices.size(); ++k) {
                    cells[indices[k]].test->p_adjusted = adjusted[k];
                }
            }

            auto fmt_opt = [](const std::optional<double>& v) {
                return v.has_value() ? format_g17(*v) : std::string();
            };
            for (const auto& cell : cells) {
                report << metric_report_jsonl_line(cell.metric) << '\n';
                if (cell.test) {
                    report << paired_test_jsonl_line(*cell.test) << '\n';
                }
                summary << cell.metric.configuration << ','
                        << cell.metric.outcome << ',' << cell.metric.metric
                        << ',' << cell.metric.n << ','
                        << fmt_opt(cell.metric.point) << ','
                        << fmt_opt(cell.metric.ci_lo) << ','
                        << fmt_opt(cell.metric.ci_hi) << ',';
                if (cell.test) {
                    summary << format_g17(cell.test->delta) << ','
                            << fmt_opt(cell.test->delta_lo) << ','
                            << fmt_opt(cell.test->delta_hi) << ','
                            << format_g17(cell.test->p_raw) << ','
                            << fmt_opt(cell.test->p_adjusted);
                } else {
                    summary << ",,,,";
                }
                summary << '\n';
            }
            write_file((out_dir / "report.jsonl").string(), report.str());
            write_file((out_dir / "summary.csv").string(), summary.str());
        });

    // ---- manifest -----------------------------------------------------------
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(out_dir)) {
        if (!entry.is_regular_file()) continue;
        if (entry.path().filename() == "manifest.json") continue;
        files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        const std::string rel =
            fs::relative(f, out_dir).generic_string();
        manifest.artifacts[rel] = hash_hex(hash_file(f.string()));
    }
    write_manifest(manifest, manifest_path);
    result.artifact_hashes = manifest.artifacts;
    return result;
}

}  // namespace ehr

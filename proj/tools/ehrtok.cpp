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
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ehr/arms.hpp"
#include "ehr/encoders.hpp"
#include "ehr/ingest.hpp"
#include "ehr/kernels.hpp"
#include "ehr/metrics.hpp"
#include "ehr/outcomes.hpp"
#include "ehr/pipeline.hpp"
#include "ehr/probes.hpp"
#include "ehr/quantiles.hpp"
#include "ehr/splits.hpp"
#include "ehr/synth.hpp"
#include "ehr/tokenizer.hpp"
#include "ehr/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int run_synth(const std::string& out_dir, std::size_t n_admissions,
              std::uint64_t seed) {
    fs::create_directories(out_dir);
    ehr::SynthConfig cfg;
    cfg.n_admissions = n_admissions;
    cfg.seed = seed;
    const auto cohort = ehr::generate(cfg);
    ehr::write_events_jsonl(cohort.admissions, out_dir + "/events.jsonl");
    ehr::write_demographics_jsonl(cohort.admissions,
                                  out_dir + "/demographics.jsonl");
    ehr::write_ledger_jsonl(cohort.ledger, out_dir + "/ledger.jsonl");
    std::size_t events = 0;
    for (const auto& a : cohort.admissions) events += a.events.size();
    std::cout << "wrote " << cohort.admissions.size() << " admissions, "
              << events << " events to " << out_dir << "\n";
    return 0;
}

int run_ingest(const std::string& events, const std::string& demographics,
               const std::string& format, const std::string& out_dir) {
    fs::create_directories(out_dir);
    ehr::IngestOptions opts;
    opts.format = format == "csv" ? ehr::EventFormat::Csv
                                  : ehr::EventFormat::Jsonl;
    ehr::IngestReport report;
    const auto admissions = ehr::ingest(events, demographics, opts, report);
    ehr::write_events_jsonl(admissions, out_dir + "/events.jsonl");
    ehr::write_demographics_jsonl(admissions, out_dir + "/demographics.jsonl");
    ehr::write_file(out_dir + "/ingest_report.json",
                    ehr::ingest_report_json(report));
    std::cout << "ingested " << report.admissions << " admissions ("
              << report.events_kept << "/" << report.event_rows
              << " event rows kept, " << report.rejected.size()
              << " rejected)\n";
    return report.admissions == 0 ? 1 : 0;
}

std::vector<ehr::Admission> load_cohort(const std::string& dir) {
    ehr::IngestOptions opts;
    ehr::IngestReport report;
    return ehr::ingest(dir + "/events.jsonl", dir + "/demographics.jsonl", opts,
                       report);
}

int run_split(const std::string& cohort_dir, std::uint64_t seed,
              const std::string& out) {
    const auto admissions = load_cohort(cohort_dir);
    std::vector<std::string> subjects;
    for (const auto& a : admissions) subjects.push_back(a.subject_id);
    std::vector<std::string> warnings;
    const auto splits =
        ehr::split_subjects(subjects, {0.7, 0.1, 0.2}, seed, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    ehr::write_splits_csv(splits, out);
    std::cout << "split " << splits.by_subject.size() << " subjects: "
              << splits.count(ehr::Split::Train) << " train, "
              << splits.count(ehr::Split::Validation) << " validation, "
              << splits.count(ehr::Split::Test) << " test\n";
    return 0;
}

int run_fit(const std::string& cohort_dir, const std::string& splits_path,
            int granularity, bool anchored, const std::string& layout_str,
            const std::string& out) {
    const auto admissions = load_cohort(cohort_dir);
    const auto splits = ehr::read_splits_csv(splits_path);
    const auto train =
        ehr::admissions_in_split(admissions, splits, ehr::Split::Train);
    ehr::FitOptions opts;
    opts.granularity = granularity;
    opts.anchored = anchored;
    if (!layout_str.empty()) {
        const auto parts = ehr::split(layout_str, ',');
        if (parts.size() != 3)
            throw ehr::ConfigError("--layout expects a,b,c");
        opts.layout = {std::stoi(parts[0]), std::stoi(parts[1]),
                       std::stoi(parts[2])};
    }
    std::vector<std::string> warnings;
    const auto fitted = ehr::fit_all(train, opts, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    ehr::write_file(out, ehr::fitted_stats_to_json(fitted));
    std::cout << "fitted " << fitted.specs.size() << " codes ("
              << (anchored ? "anchored" : "population") << ", B=" << granularity
              << ") -> " << out << "\n";
    return 0;
}

int run_arm(const std::string& cohort_dir, const std::string& splits_path,
            const std::string& kind_str, const std::string& mapping,
            std::uint64_t seed, const std::string& out_dir) {
    const auto kind = ehr::arm_from_name(kind_str);
    if (!kind) throw ehr::ConfigError("unknown arm kind '" + kind_str + "'");
    fs::create_directories(out_dir);
    const auto admissions = load_cohort(cohort_dir);
    const auto splits = ehr::read_splits_csv(splits_path);
    const auto train =
        ehr::admissions_in_split(admissions, splits, ehr::Split::Train);
    std::vector<std::string> errors;
    const auto table = ehr::MappingTable::from_csv(mapping, &errors);
    for (const auto& e : errors) std::cerr << "mapping: " << e << "\n";
    const auto arm = ehr::build_arm(train, table, *kind, seed);
    std::vector<ehr::DomainCoverage> coverage;
    const auto rewritten = ehr::apply_arm(admissions, arm, &coverage);
    ehr::write_events_jsonl(rewritten, out_dir + "/events.jsonl");
    ehr::write_demographics_jsonl(rewritten, out_dir + "/demographics.jsonl");
    ehr::write_file(out_dir + "/arm.json", ehr::arm_to_json(arm));
    ehr::write_file(out_dir + "/coverage.json",
                    ehr::coverage_to_json(coverage));
    for (const auto& c : coverage) {
        std::cout << c.domain << ": " << c.mapped_events << "/"
                  << c.total_events << " events mapped ("
                  << static_cast<int>(c.fraction * 1000) / 10.0 << "%)\n";
    }
    return 0;
}

int run_tokenize(const std::string& config_path, const std::string& split_name,
                 const std::string& out_dir) {
    const auto cfg = ehr::load_pipeline_config(config_path);
    ehr::validate_representation(cfg.rep);
    fs::create_directories(out_dir);

    std::vector<ehr::Admission> admissions;
    if (cfg.synthetic) {
        admissions = ehr::generate(cfg.synth).admissions;
    } else {
        ehr::IngestOptions opts;
        opts.format = cfg.events_format == "csv" ? ehr::EventFormat::Csv
                                                 : ehr::EventFormat::Jsonl;
        ehr::IngestReport report;
        admissions =
            ehr::ingest(cfg.events_path, cfg.demographics_path, opts, report);
    }
    std::vector<std::string> subjects;
    for (const auto& a : admissions) subjects.push_back(a.subject_id);
    const auto splits =
        ehr::split_subjects(subjects, {0.7, 0.1, 0.2}, cfg.split_seed, nullptr);
    const auto split = ehr::split_from_name(split_name);
    if (!split) throw ehr::ConfigError("unknown split '" + split_name + "'");

    if (cfg.rep.arm != ehr::ArmKind::Native) {
        const std::string mapping_text = cfg.mapping_path.empty()
                                             ? ehr::default_mapping_csv()
                                             : ehr::read_file(cfg.mapping_path);
        ehr::write_file(out_dir + "/mapping_used.csv", mapping_text);
        const auto table =
            ehr::MappingTable::from_csv(out_dir + "/mapping_used.csv");
        const auto train =
            ehr::admissions_in_split(admissions, splits, ehr::Split::Train);
        const auto arm =
            ehr::build_arm(train, table, cfg.rep.arm, cfg.arm_seed);
        admissions = ehr::apply_arm(admissions, arm);
        ehr::write_file(out_dir + "/arm.json", ehr::arm_to_json(arm));
    }

    const auto train =
        ehr::admissions_in_split(admissions, splits, ehr::Split::Train);
    ehr::FitOptions fit_opts;
    fit_opts.granularity = cfg.rep.granularity;
    fit_opts.anchored = cfg.rep.anchored;
    fit_opts.layout = cfg.rep.layout;
    const auto fitted = ehr::fit_all(train, fit_opts);
    ehr::write_file(out_dir + "/specs.json", ehr::fitted_stats_to_json(fitted));

    ehr::TemporalConfig temporal;
    temporal.mode = cfg.rep.temporal;
    temporal.rope_scale_seconds = cfg.rope_scale_seconds;
    temporal.spacing_bin_edges = cfg.spacing_edges;
    auto vocab = ehr::build_vocab(train, fitted, cfg.rep.fusion, temporal);
    vocab.granularity = cfg.rep.granularity;
    ehr::write_file(out_dir + "/vocab.json", ehr::vocab_to_json(vocab));

    ehr::TokenizeOptions tok;
    tok.fusion = cfg.rep.fusion;
    tok.encoder = cfg.rep.encoder;
    tok.temporal = temporal;
    tok.full_timeline = *split == ehr::Split::Train;

    const auto subset = ehr::admissions_in_split(admissions, splits, *split);
    std::vector<ehr::TokenStream> streams(subset.size());
    ehr::parallel_for(subset.size(), [&](std::size_t i) {
        streams[i] = tok.full_timeline
                         ? ehr::tokenize(subset[i], vocab, fitted, tok)
                         : ehr::tokenize(ehr::cut_first_24h(subset[i]), vocab,
                                         fitted, tok);
    });
    const std::string streams_path =
        out_dir + "/streams_" + split_name + ".jsonl";
    ehr::write_streams_jsonl(streams, streams_path);
    ehr::write_file(out_dir + "/lengths_" + split_name + ".json",
                    ehr::length_report_json(ehr::length_report(streams)));
    std::cout << "vocab size " << vocab.size() << ", " << streams.size()
              << " streams -> " << streams_path << "\n";
    return 0;
}

int run_lengths(const std::string& streams_path, const std::string& out) {
    const auto streams = ehr::read_streams_jsonl(streams_path);
    const auto report = ehr::length_report(streams);
    const auto text = ehr::length_report_json(report);
    if (out.empty()) {
        std::cout << text;
    } else {
        ehr::write_file(out, text);
    }
    return 0;
}

int run_label(const std::string& cohort_dir, const std::string& outcomes_path,
              const std::string& out) {
    const auto admissions = load_cohort(cohort_dir);
    const auto specs = outcomes_path.empty()
                           ? ehr::parse_outcome_config(
                                 ehr::default_outcome_config_toml())
                           : ehr::load_outcome_config(outcomes_path);
    const auto labels = ehr::label_cohort(admissions, specs);
    ehr::write_labels_csv(labels, out);
    for (const auto& s : labels.summaries) {
        std::cout << s.name << ": eligible " << s.eligible_n;
        if (s.positives + s.negatives > 0) {
            std::cout << " (" << s.positives << " pos / " << s.negatives
                      << " neg)";
        }
        std::cout << "\n";
    }
    return 0;
}

int run_probe(const std::string& train_path, const std::string& val_path,
              const std::string& test_path, const std::string& labels_path,
              const std::string& outcome, const std::string& kind,
              const std::string& out) {
    auto f_train = ehr::read_features_auto(train_path);
    auto f_test = ehr::read_features_auto(test_path);
    ehr::FeatureMatrix f_val;
    if (!val_path.empty()) f_val = ehr::read_features_auto(val_path);

    const auto all_labels = ehr::read_labels_csv(labels_path);
    const auto rows_it = all_labels.find(outcome);
    if (rows_it == all_labels.end())
        throw ehr::ConfigError("outcome '" + outcome + "' not in labels file");
    std::map<std::string, double> label_of;
    for (const auto& row : rows_it->second) {
        if (row.eligible && row.label) label_of[row.admission_id] = *row.label;
    }

    const auto z = ehr::zscore_fit(f_train);
    ehr::zscore_apply(z, f_train);
    if (f_val.rows() > 0) ehr::zscore_apply(z, f_val);
    ehr::zscore_apply(z, f_test);

    auto select = [&](const ehr::FeatureMatrix& m, ehr::FeatureMatrix& X,
                      std::vector<double>& y) {
        X.dim = m.dim;
        for (std::size_t i = 0; i < m.rows(); ++i) {
            const auto it = label_of.find(m.ids[i]);
            if (it == label_of.end()) continue;
            const auto r = m.row(i);
            X.ids.push_back(m.ids[i]);
            X.data.insert(X.data.end(), r.begin(), r.end());
            y.push_back(it->second);
        }
    };
    ehr::FeatureMatrix Xt, Xv, Xs;
    std::vector<double> yt, yv, ys;
    select(f_train, Xt, yt);
    if (f_val.rows() > 0) select(f_val, Xv, yv);
    select(f_test, Xs, ys);

    ehr::ProbeModel model;
    if (kind == "logistic") {
        model = ehr::fit_logistic(Xt, yt);
    } else if (kind == "ridge") {
        static const std::vector<double> kGrid = {1e-3, 1e-2, 1e-1, 1.0,
                                                  10.0, 100.0, 1000.0};
        std::vector<std::string> warnings;
        model = ehr::fit_ridge(Xt, yt, kGrid, Xv, yv, &warnings);
        for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    } else {
        throw ehr::ConfigError("--kind must be logistic or ridge");
    }

    const auto preds = ehr::predict(model, Xs);
    std::ofstream o(out, std::ios::trunc);
    o << "admission_id,outcome,score\n";
    for (std::size_t i = 0; i < preds.size(); ++i) {
        o << Xs.ids[i] << ',' << outcome << ',' << ehr::format_g17(preds[i])
          << '\n';
    }
    std::cout << "probe " << kind << " fit on " << Xt.rows() << " rows";
    if (model.kind == ehr::ProbeModel::Kind::Ridge) {
        std::cout << " (lambda " << model.lambda << ")";
    } else {
        std::cout << " (" << model.iterations << " iterations)";
    }
    std::cout << ", scored " << preds.size() << " -> " << out << "\n";
    return 0;
}

std::map<std::string, double> preds_for_outcome(const std::string& path,
                                                const std::string& outcome) {
    std::map<std::string, double> out;
    const auto lines = ehr::read_lines(path);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const auto f = ehr::split_csv(lines[i]);
        if (f.size() != 3) throw ehr::ParseError("bad preds row");
        if (outcome.empty() || f[1] == outcome) out[f[0]] = std::stod(f[2]);
    }
    return out;
}

int run_evaluate(const std::string& pred_path, const std::string& labels_path,
                 const std::string& reference_path, const std::string& outcome,
                 const std::string& family, std::size_t n_boot,
                 std::size_t n_perm, std::uint64_t boot_seed,
                 std::uint64_t perm_seed, const std::string& out) {
    const auto all_labels = ehr::read_labels_csv(labels_path);
    std::ostringstream report;
    std::vector<ehr::PairedTest> tests;

    for (const auto& [name, rows] : all_labels) {
        if (!outcome.empty() && name != outcome) continue;
        const auto preds = preds_for_outcome(pred_path, name);
        std::vector<double> scores, truth;
        std::vector<std::string> ids;
        bool binary = true;
        for (const auto& row : rows) {
            if (!row.eligible || !row.label) continue;
            const auto it = preds.find(row.admission_id);
            if (it == preds.end()) continue;
            scores.push_back(it->second);
            truth.push_back(*row.label);
            ids.push_back(row.admission_id);
            if (*row.label != 0.0 && *row.label != 1.0) binary = false;
        }
        if (scores.empty()) continue;

        std::map<std::string, double> ref_preds;
        std::vector<double> ref_scores;
        if (!reference_path.empty()) {
            ref_preds = preds_for_outcome(reference_path, name);
            bool complete = true;
            for (const auto& id : ids) {
                const auto it = ref_preds.find(id);
                if (it == ref_preds.end()) {
                    complete = false;
                    break;
                }
                ref_scores.push_back(it->second);
            }
            if (!complete) ref_scores.clear();
        }

        const std::vector<std::string> metric_names =
            binary ? std::vector<std::string>{"auroc", "auprc", "brier",
                                              "ece15"}
                   : std::vector<std::string>{"spearman"};
        for (const auto& metric_name : metric_names) {
            auto point_fn = [&](const std::vector<double>& s,
                                const std::vector<double>& y)
                -> std::optional<double> {
                if (metric_name == "auroc") return ehr::auroc(s, y);
                if (metric_name == "auprc") return ehr::auprc(s, y);
                if (metric_name == "brier") return ehr::brier(s, y);
                if (metric_name == "ece15") return ehr::ece15(s, y);
                return ehr::spearman(s, y);
            };
            ehr::MetricReport mr;
            mr.configuration = "preds";
            mr.outcome = name;
            mr.metric = metric_name;
            mr.n = scores.size();
            mr.n_resamples = n_boot;
            mr.seed = boot_seed;
            mr.point = point_fn(scores, truth);
            if (mr.point) {
                const auto ci = ehr::bootstrap_ci(
                    [&](const std::vector<std::size_t>& rows_idx)
                        -> std::optional<double> {
                        std::vector<double> s2, y2;
                        for (const auto r : rows_idx) {
                            s2.push_back(scores[r]);
                            y2.push_back(truth[r]);
                        }
                        return point_fn(s2, y2);
                    },
                    scores.size(), n_boot, boot_seed);
                mr.ci_lo = ci.lo;
                mr.ci_hi = ci.hi;
            }
            report << ehr::metric_report_jsonl_line(mr) << '\n';

            if (!ref_scores.empty() && mr.point) {
                ehr::PairedTest test;
                test.configuration = "preds";
                test.reference = "reference";
                test.outcome = name;
                test.metric = metric_name;
                test.family = family;
                const auto perm = ehr::paired_permutation(
                    [&](const std::vector<double>& a,
                        const std::vector<double>& b)
                        -> std::optional<double> {
                        const auto ma = point_fn(a, truth);
                        const auto mb = point_fn(b, truth);
                        if (!ma || !mb) return std::nullopt;
                        return *ma - *mb;
                    },
                    scores, ref_scores, n_perm, perm_seed);
                test.delta = perm.delta;
                test.p_raw = perm.p_value;
                tests.push_back(std::move(test));
            }
        }
    }
    // BH correction within each metric family of this invocation.
    std::map<std::string, std::vector<std::size_t>> by_metric;
    for (std::size_t i = 0; i < tests.size(); ++i) {
        by_metric[tests[i].metric].push_back(i);
    }
    for (const auto& [_, indices] : by_metric) {
        std::vector<double> p;
        for (const auto i : indices) p.push_back(tests[i].p_raw);
        const auto adjusted = ehr::bh_adjust(p);
        for (std::size_t k = 0; k < indices.size(); ++k) {
            tests[indices[k]].p_adjusted = adjusted[k];
        }
    }
    for (const auto& t : tests) {
        report << ehr::paired_test_jsonl_line(t) << '\n';
    }
    if (out.empty()) {
        std::cout << report.str();
    } else {
        ehr::write_file(out, report.str());
        std::cout << "wrote " << out << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "ehrtok: clinical event-stream tokenization configurations and "
        "evaluation statistics"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic cohort");
    std::string synth_out = "cohort";
    std::size_t synth_n = 2000;
    std::uint64_t synth_seed = 7;
    synth->add_option("--out", synth_out, "output directory");
    synth->add_option("--admissions", synth_n, "number of admissions");
    synth->add_option("--seed", synth_seed, "generator seed");

    // ingest
    auto* ing = app.add_subcommand("ingest", "ingest event + demographics files");
    std::string ing_events, ing_demo, ing_format = "jsonl", ing_out = "cohort";
    ing->add_option("--events", ing_events)->required();
    ing->add_option("--demographics", ing_demo)->required();
    ing->add_option("--format", ing_format)->check(CLI::IsMember({"jsonl", "csv"}));
    ing->add_option("--out", ing_out);

    // split
    auto* spl = app.add_subcommand("split", "patient-level 70/10/20 split");
    std::string spl_cohort = "cohort", spl_out = "splits.csv";
    std::uint64_t spl_seed = 42;
    spl->add_option("--cohort", spl_cohort, "cohort directory");
    spl->add_option("--seed", spl_seed);
    spl->add_option("--out", spl_out);

    // fit
    auto* fit = app.add_subcommand("fit", "fit per-code quantile specs");
    std::string fit_cohort = "cohort", fit_splits = "splits.csv",
                fit_out = "specs.json", fit_layout;
    int fit_bins = 10;
    bool fit_anchored = false;
    fit->add_option("--cohort", fit_cohort);
    fit->add_option("--splits", fit_splits);
    fit->add_option("--granularity", fit_bins)
        ->check(CLI::IsMember({10, 20, 30, 100}));
    fit->add_flag("--anchored", fit_anchored,
                  "reference-range anchored binning");
    fit->add_option("--layout", fit_layout, "anchored layout a,b,c");
    fit->add_option("--out", fit_out);

    // arm
    auto* arm = app.add_subcommand("arm", "vocabulary remapping arms");
    std::string arm_cohort = "cohort", arm_splits = "splits.csv", arm_kind,
                arm_mapping, arm_out = "arm_out";
    std::uint64_t arm_seed = 17;
    arm->add_option("--cohort", arm_cohort);
    arm->add_option("--splits", arm_splits);
    arm->add_option("--kind", arm_kind)
        ->required()
        ->check(CLI::IsMember({"native", "mapped", "randomized", "freqmatch"}));
    arm->add_option("--mapping", arm_mapping)->required();
    arm->add_option("--seed", arm_seed);
    arm->add_option("--out", arm_out);

    // tokenize
    auto* tok = app.add_subcommand("tokenize", "tokenize one configuration");
    std::string tok_config, tok_split = "train", tok_out = "out";
    tok->add_option("--config", tok_config)->required();
    tok->add_option("--split", tok_split)
        ->check(CLI::IsMember({"train", "validation", "val", "test"}));
    tok->add_option("--out", tok_out);

    // lengths
    auto* len = app.add_subcommand("lengths", "token length report");
    std::string len_streams, len_out;
    len->add_option("--streams", len_streams)->required();
    len->add_option("--out", len_out);

    // label
    auto* lab = app.add_subcommand("label", "compute outcome labels");
    std::string lab_cohort = "cohort", lab_outcomes, lab_out = "labels.csv";
    lab->add_option("--cohort", lab_cohort);
    lab->add_option("--outcomes", lab_outcomes,
                    "outcome config TOML (default: built-in)");
    lab->add_option("--out", lab_out);

    // probe
    auto* prb = app.add_subcommand("probe", "fit a downstream probe");
    std::string prb_train, prb_val, prb_test, prb_labels, prb_outcome,
        prb_kind = "logistic", prb_out = "preds.csv";
    prb->add_option("--features-train", prb_train)->required();
    prb->add_option("--features-val", prb_val);
    prb->add_option("--features-test", prb_test)->required();
    prb->add_option("--labels", prb_labels)->required();
    prb->add_option("--outcome", prb_outcome)->required();
    prb->add_option("--kind", prb_kind)
        ->check(CLI::IsMember({"logistic", "ridge"}));
    prb->add_option("--out", prb_out);

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "metrics + bootstrap + tests");
    std::string ev_pred, ev_labels, ev_ref, ev_outcome, ev_family = "default",
                ev_out;
    std::size_t ev_boot = 2000, ev_perm = 10000;
    std::uint64_t ev_boot_seed = 123, ev_perm_seed = 7;
    ev->add_option("--pred", ev_pred)->required();
    ev->add_option("--labels", ev_labels)->required();
    ev->add_option("--reference", ev_ref, "reference predictions CSV");
    ev->add_option("--outcome", ev_outcome, "restrict to one outcome");
    ev->add_option("--family", ev_family);
    ev->add_option("--n-boot", ev_boot);
    ev->add_option("--n-perm", ev_perm);
    ev->add_option("--boot-seed", ev_boot_seed);
    ev->add_option("--perm-seed", ev_perm_seed);
    ev->add_option("--out", ev_out);

    // run
    auto* run = app.add_subcommand("run", "end-to-end pipeline from a config");
    std::string run_config, run_out;
    run->add_option("--config", run_config, "pipeline TOML (default: built-in)");
    run->add_option("--out", run_out, "override output directory");

    // kernels
    auto* ker = app.add_subcommand("kernels", "report the active SIMD backend");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) return run_synth(synth_out, synth_n, synth_seed);
        if (ing->parsed())
            return run_ingest(ing_events, ing_demo, ing_format, ing_out);
        if (spl->parsed()) return run_split(spl_cohort, spl_seed, spl_out);
        if (fit->parsed())
            return run_fit(fit_cohort, fit_splits, fit_bins, fit_anchored,
                           fit_layout, fit_out);
        if (arm->parsed())
            return run_arm(arm_cohort, arm_splits, arm_kind, arm_mapping,
                           arm_seed, arm_out);
        if (tok->parsed()) return run_tokenize(tok_config, tok_split, tok_out);
        if (len->parsed()) return run_lengths(len_streams, len_out);
        if (lab->parsed()) return run_label(lab_cohort, lab_outcomes, lab_out);
        if (prb->parsed())
            return run_probe(prb_train, prb_val, prb_test, prb_labels,
                             prb_outcome, prb_kind, prb_out);
        if (ev->parsed())
            return run_evaluate(ev_pred, ev_labels, ev_ref, ev_outcome,
                                ev_family, ev_boot, ev_perm, ev_boot_seed,
                                ev_perm_seed, ev_out);
        if (run->parsed()) {
            ehr::PipelineConfig cfg;
            if (!run_config.empty()) {
                cfg = ehr::load_pipeline_config(run_config);
            }
            if (!run_out.empty()) cfg.out_dir = run_out;
            const auto result = ehr::run_pipeline(cfg, &std::cout);
            std::cout << "report written to " << result.out_dir << " ("
                      << result.stages_run << " stages built, "
                      << result.stages_skipped << " cached)\n";
            return 0;
        }
        if (ker->parsed()) {
            std::cout << "active kernel backend: "
                      << ehr::kernels::active().name
                      << (ehr::kernels::avx2_supported() ? " (avx2 available)"
                                                         : " (avx2 unavailable)")
                      << "\n";
            return 0;
        }
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
    return 0;
}

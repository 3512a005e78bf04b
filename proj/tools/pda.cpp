#include "pda/container.hpp"
#include "pda/error.hpp"
#include "pda/harness.hpp"
#include "pda/spectrum.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace pda;

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    return out;
}

std::string read_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

FeatureSet load_features(const std::string& path) {
    if (path.size() > 4 && path.substr(path.size() - 4) == ".csv") return load_feature_csv(path);
    return load_feature_file(path);
}

void write_labels(const std::string& path, const FeatureSet& set) {
    auto out = open_out(path);
    out << "id\tlabel\n";
    for (std::size_t i = 0; i < set.size(); ++i) out << i << '\t' << set.label(i).to_string() << '\n';
}

std::vector<Label> read_labels(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::string line;
    std::vector<std::pair<std::size_t, Label>> rows;
    bool header = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (header) {
            header = false;
            if (line.rfind("id\t", 0) == 0) continue;
        }
        const auto tab = line.find('\t');
        if (tab == std::string::npos) throw FormatError("labels: expected 'id<TAB>label', got '" + line + "'");
        rows.emplace_back(std::stoul(line.substr(0, tab)), Label::parse(line.substr(tab + 1)));
    }
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<Label> labels;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].first != i) throw FormatError("labels: ids must be 0..n-1 without gaps");
        labels.push_back(rows[i].second);
    }
    return labels;
}

SyntheticWorldConfig world_config(const std::string& path) {
    return path.empty() ? default_world_config() : parse_world_config(read_text(path));
}

std::optional<PruneConfig> prune_option(double p, bool off) {
    if (off) return std::nullopt;
    PruneConfig cfg{p};
    cfg.check();
    return cfg;
}

std::vector<std::string> split_values(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

Pipeline load_pipeline(const std::string& path) {
    auto c = load_pdam(path);
    if (!c.model || !c.reference || !c.threshold) {
        throw FormatError("'" + path + "' is not a pipeline bundle (needs MODL, REFS and TAUS sections)");
    }
    const auto prune = c.prune ? *c.prune : std::optional<PruneConfig>{};
    const auto k = c.threshold->knn;
    return Pipeline(prune, std::move(*c.model), std::move(*c.reference), k, std::move(*c.threshold));
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-stage real/generated detection in feature space"};
    app.require_subcommand(1);

    // simulate
    std::string sim_config, sim_out;
    bool sim_dump = false;
    auto* sim = app.add_subcommand("simulate", "Sample a synthetic world and write its feature files");
    sim->add_option("--config", sim_config, "World config (JSON); default world when omitted");
    sim->add_option("--out-dir", sim_out, "Output directory");
    sim->add_flag("--dump-config", sim_dump, "Print the resolved config as JSON and exit");

    // fit
    std::string fit_in, fit_out, fit_reduce = "tsne", fit_oos = "mass";
    TsneConfig fit_tsne_cfg;
    double fit_prune_p = 90.0;
    bool fit_no_prune = false, fit_no_std = false;
    auto* fit = app.add_subcommand("fit", "Fit the 2D reduction on a reference pool");
    fit->add_option("--in", fit_in, "Reference features (PDAF)")->required();
    fit->add_option("--out", fit_out, "Output PDAM (model, reference, pruning)")->required();
    fit->add_option("--reduce", fit_reduce, "tsne or pca")->check(CLI::IsMember({"tsne", "pca"}));
    fit->add_option("--perplexity", fit_tsne_cfg.perplexity, "t-SNE perplexity");
    fit->add_option("--tsne-iters", fit_tsne_cfg.iterations, "t-SNE iterations");
    fit->add_option("--seed", fit_tsne_cfg.seed, "t-SNE seed");
    fit->add_option("--oos", fit_oos, "Out-of-sample placement: mass or normalized")
        ->check(CLI::IsMember({"mass", "normalized"}));
    fit->add_option("--prune-p", fit_prune_p, "Activation pruning percentile");
    fit->add_flag("--no-prune", fit_no_prune, "Disable activation pruning");
    fit->add_flag("--no-standardize", fit_no_std, "Skip per-dimension standardization");

    // calibrate
    std::string cal_pseudo, cal_model, cal_ref, cal_out;
    KnnConfig cal_knn;
    double cal_q = 95.0;
    auto* cal = app.add_subcommand("calibrate", "Calibrate tau on regenerated reals");
    cal->add_option("--pseudo", cal_pseudo, "Pseudo-fake features (PDAF)")->required();
    cal->add_option("--model", cal_model, "PDAM with the model")->required();
    cal->add_option("--ref", cal_ref, "PDAM with the reference set (defaults to --model)");
    cal->add_option("--k", cal_knn.k, "Neighbour rank");
    cal->add_option("--q", cal_q, "Percentile for tau");
    cal->add_option("--out", cal_out, "Output PDAM")->required();

    // bundle
    std::vector<std::string> bundle_in;
    std::string bundle_out;
    auto* bundle = app.add_subcommand("bundle", "Merge PDAM sections into one pipeline file");
    bundle->add_option("inputs", bundle_in, "PDAM files; later sections override earlier ones")->required();
    bundle->add_option("--out", bundle_out, "Output PDAM")->required();

    // detect
    std::string det_in, det_pipe, det_regen, det_pairs, det_report;
    int det_timeout = 600;
    auto* det = app.add_subcommand("detect", "Classify features with a pipeline bundle");
    det->add_option("--in", det_in, "Raw features (PDAF)")->required();
    det->add_option("--pipeline", det_pipe, "Pipeline bundle (PDAM)")->required();
    auto* regen_opt = det->add_option("--regen", det_regen, "External regenerator, e.g. \"cmd {in} {out}\"");
    auto* pairs_opt = det->add_option("--regen-pairs", det_pairs, "Precomputed regenerated features, row-aligned");
    regen_opt->excludes(pairs_opt);
    det->add_option("--timeout", det_timeout, "Seconds per regenerator batch");
    det->add_option("--report", det_report, "Report path (stdout when omitted)");

    // eval
    std::string ev_report, ev_labels, ev_out, ev_hist;
    std::size_t ev_bins = 40;
    bool ev_per_gen = false;
    auto* ev = app.add_subcommand("eval", "Score a detection report against labels");
    ev->add_option("--report", ev_report, "Detection report")->required();
    ev->add_option("--labels", ev_labels, "labels.tsv (id, label)")->required();
    ev->add_option("--out", ev_out, "Metrics table (stdout when omitted)");
    ev->add_option("--hist", ev_hist, "Distance histogram plot data");
    ev->add_option("--bins", ev_bins, "Histogram bins");
    ev->add_flag("--per-generator", ev_per_gen, "Also print one table per fake label and the mean accuracy");

    // run
    std::string run_config, run_report;
    double run_noise = 0.0;
    PdaOptions run_opts;
    auto* run = app.add_subcommand("run", "Fit, calibrate, detect and evaluate on a synthetic world");
    run->add_option("--config", run_config, "World config (JSON)");
    run->add_option("--k", run_opts.knn.k, "Neighbour rank");
    run->add_option("--q", run_opts.q, "Percentile for tau");
    run->add_option("--noise", run_noise, "Std of feature noise added to the test set");
    run->add_option("--report", run_report, "Also write the detection report");

    // sweep
    std::string sw_config, sw_axis, sw_values, sw_out;
    auto* sw = app.add_subcommand("sweep", "Evaluate a synthetic world across one pipeline setting");
    sw->add_option("--config", sw_config, "World config (JSON)");
    sw->add_option("--axis", sw_axis, "k, q, prune or reduce")->required()->check(CLI::IsMember({"k", "q", "prune", "reduce"}));
    sw->add_option("--values", sw_values, "Comma-separated values")->required();
    sw->add_option("--out", sw_out, "Sweep table (stdout when omitted)");

    // spectrum
    std::string sp_in, sp_out;
    auto* sp = app.add_subcommand("spectrum", "Average centered log Fourier magnitude of PGM images");
    sp->add_option("--in", sp_in, "Directory of binary PGM images")->required();
    sp->add_option("--out", sp_out, "Output matrix (TSV)")->required();

    // validate
    std::string va_in;
    auto* va = app.add_subcommand("validate", "Check a feature file");
    va->add_option("--in", va_in, "PDAF or CSV file")->required();

    // embed
    std::string em_model, em_in, em_out;
    bool em_joint = false;
    auto* em = app.add_subcommand("embed", "Embed features against a fitted model (scatter plot data)");
    em->add_option("--model", em_model, "PDAM with the model")->required();
    em->add_option("--in", em_in, "Features (PDAF)")->required();
    em->add_option("--out", em_out, "Scatter TSV (stdout when omitted)");
    em->add_flag("--reembed-joint", em_joint, "Refit t-SNE on reference plus input (diagnostic only)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sim) {
            const auto cfg = world_config(sim_config);
            if (sim_dump) {
                std::cout << world_config_to_json(cfg) << '\n';
                return 0;
            }
            if (sim_out.empty()) throw ConfigError("--out-dir is required");
            fs::create_directories(sim_out);
            const auto w = sample_world(cfg);
            const fs::path dir(sim_out);
            save_feature_file(w.reference_pool, (dir / "reference.pdaf").string());
            save_feature_file(w.calibration.regenerated, (dir / "calib.pdaf").string());
            save_feature_file(w.test.raw, (dir / "test_raw.pdaf").string());
            save_feature_file(w.test.regenerated, (dir / "test_regen.pdaf").string());
            write_labels((dir / "labels.tsv").string(), w.test.raw);
        } else if (*fit) {
            const auto pool = load_features(fit_in);
            const auto prune = prune_option(fit_prune_p, fit_no_prune);
            const auto inputs = prune ? prune_set(pool, *prune) : pool;
            const ReductionOptions ro{!fit_no_std};
            fit_tsne_cfg.out_of_sample = parse_out_of_sample_mode(fit_oos);
            auto model = parse_reduction_mode(fit_reduce) == ReductionMode::tsne ? fit_tsne(inputs, fit_tsne_cfg, ro)
                                                                                 : fit_pca(inputs, ro);
            auto ref = ReferenceSet::from_model(model, pool.source.empty() ? fit_in : pool.source);
            PdamContents c;
            c.model = std::move(model);
            c.reference = std::move(ref);
            c.prune = prune;
            save_pdam(c, fit_out);
        } else if (*cal) {
            const auto pseudo = load_features(cal_pseudo);
            auto mc = load_pdam(cal_model);
            if (!mc.model) throw FormatError("'" + cal_model + "' has no model section");
            const auto ref = cal_ref.empty() ? (mc.reference ? *mc.reference : throw FormatError("no reference section"))
                                             : load_reference(cal_ref);
            const auto prune = mc.prune ? *mc.prune : std::optional<PruneConfig>{PruneConfig{}};
            PdamContents out;
            out.threshold = calibrate_threshold(pseudo, ScoringPath(prune, *mc.model, ref, cal_knn), cal_q);
            out.prune = prune;
            std::cerr << "tau = " << out.threshold->tau << " (m = " << out.threshold->m << ")\n";
            save_pdam(out, cal_out);
        } else if (*bundle) {
            PdamContents merged;
            for (const auto& path : bundle_in) {
                auto c = load_pdam(path);
                if (c.model) merged.model = std::move(c.model);
                if (c.reference) merged.reference = std::move(c.reference);
                if (c.threshold) merged.threshold = std::move(c.threshold);
                if (c.prune) merged.prune = c.prune;
            }
            save_pdam(merged, bundle_out);
            load_pipeline(bundle_out); // provenance check
        } else if (*det) {
            const auto raws = load_features(det_in);
            const auto pipe = load_pipeline(det_pipe);
            std::unique_ptr<Regenerator> regen;
            if (!det_regen.empty()) {
                regen = command_regenerator(CommandSpec{det_regen, std::chrono::seconds(det_timeout)});
            } else if (!det_pairs.empty()) {
                regen = paired_regenerator(PairedSet{raws, load_features(det_pairs)});
            } else {
                throw ConfigError("one of --regen or --regen-pairs is required");
            }
            const auto batch = detect_batch(raws, pipe, *regen);
            if (det_report.empty()) {
                write_report(std::cout, batch);
            } else {
                auto out = open_out(det_report);
                write_report(out, batch);
            }
            return batch.errors.empty() ? 0 : 2;
        } else if (*ev) {
            std::ifstream in(ev_report);
            if (!in) throw IoError("cannot open '" + ev_report + "' for reading");
            const auto batch = read_report(in);
            const auto verdicts = batch.require_all();
            const auto labels = read_labels(ev_labels);
            std::ofstream file;
            if (!ev_out.empty()) file = open_out(ev_out);
            std::ostream& out = ev_out.empty() ? std::cout : file;
            write_eval_table(out, evaluate(verdicts, labels));
            if (ev_per_gen) {
                const auto per = per_generator_results(verdicts, labels);
                for (const auto& [name, r] : per) out << "acc_vs_real[" << name << "]\t" << r.acc << '\n';
                out << "mean_accuracy\t" << mean_accuracy(per) << '\n';
            }
            if (!ev_hist.empty()) {
                auto h = open_out(ev_hist);
                write_distance_histogram(h, verdicts, labels, ev_bins);
            }
        } else if (*run) {
            auto w = sample_world(world_config(run_config));
            auto pipe = build_pipeline(w.reference_pool, w.calibration.regenerated, run_opts);
            const auto test = perturb_features(w.test, run_noise, w.config.seed + 1);
            const auto result = run_world(pipe, test);
            write_eval_table(std::cout, result.eval);
            std::cout << "tau\t" << pipe.tau() << '\n';
            std::cout << "regenerator_calls\t" << result.regenerator_calls << '\n';
            if (!run_report.empty()) {
                auto out = open_out(run_report);
                write_report(out, result.batch);
            }
        } else if (*sw) {
            const auto w = sample_world(world_config(sw_config));
            SweepSpec spec;
            spec.axis = parse_sweep_axis(sw_axis);
            spec.values = split_values(sw_values);
            const auto rows = run_sweep(spec, w);
            std::ofstream file;
            if (!sw_out.empty()) file = open_out(sw_out);
            write_sweep_table(sw_out.empty() ? std::cout : file, spec.axis, rows);
        } else if (*sp) {
            std::vector<fs::path> paths;
            for (const auto& e : fs::directory_iterator(sp_in)) {
                if (e.is_regular_file() && e.path().extension() == ".pgm") paths.push_back(e.path());
            }
            std::sort(paths.begin(), paths.end());
            if (paths.empty()) throw ConfigError("no .pgm files in '" + sp_in + "'");
            std::vector<Matrix> images;
            for (const auto& p : paths) images.push_back(read_pgm(p.string()));
            auto out = open_out(sp_out);
            write_matrix(out, average_fourier_spectrum(images));
        } else if (*va) {
            const auto set = load_features(va_in);
            const auto report = validate(set);
            std::cout << set.size() << " rows, dim " << set.dim() << (set.has_labels() ? ", labeled" : ", unlabeled")
                      << '\n';
            if (!report.ok()) {
                std::cout << report.to_string();
                return 1;
            }
            std::cout << "ok\n";
        } else if (*em) {
            const auto model = load_model(em_model);
            auto mc = load_pdam(em_model);
            const auto prune = mc.prune ? *mc.prune : std::optional<PruneConfig>{};
            auto batch = load_features(em_in);
            if (prune) batch = prune_set(batch, *prune);
            std::ofstream file;
            if (!em_out.empty()) file = open_out(em_out);
            std::ostream& out = em_out.empty() ? std::cout : file;
            out << "x\ty\tset\tlabel\n";
            std::vector<Point2> refs = model.fitted_points();
            std::vector<Point2> pts;
            if (em_joint) {
                auto j = reembed_joint(model, batch);
                refs = std::move(j.reference);
                pts = std::move(j.batch);
            } else {
                for (std::size_t i = 0; i < batch.size(); ++i) pts.push_back(embed_point(model, batch.row(i)));
            }
            for (const auto& p : refs) out << p.x << '\t' << p.y << "\treference\tknown_fake\n";
            for (std::size_t i = 0; i < pts.size(); ++i) {
                out << pts[i].x << '\t' << pts[i].y << "\tinput\t" << batch.label(i).to_string() << '\n';
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "pda: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

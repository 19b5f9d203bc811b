// fcid: command-line front end for training and running the colorization
// detectors, generating synthetic corpora and running evaluation protocols.

#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fcid/error.hpp"
#include "fcid/image_io.hpp"
#include "fcid/pipeline.hpp"
#include "fcid/synth.hpp"

using nlohmann::json;

namespace {

struct GlobalOptions {
    std::optional<std::uint64_t> seed;
    std::string config_path;
    std::optional<int> threads;
};

void apply_svm(const json& j, fcid::SvmConfig& s) {
    if (j.contains("c")) s.c = j["c"].get<double>();
    if (j.contains("g")) s.gamma = j["g"].get<double>();
    if (j.contains("gamma")) s.gamma = j["gamma"].get<double>();
    if (j.contains("threshold")) s.threshold = j["threshold"].get<double>();
    if (j.contains("tolerance")) s.tolerance = j["tolerance"].get<double>();
    if (j.contains("max_iterations")) s.max_iterations = j["max_iterations"].get<long>();
    if (j.contains("platt_folds")) s.platt_folds = j["platt_folds"].get<int>();
}

// JSON config file; every key is optional.
fcid::PipelineConfig load_config(const GlobalOptions& g) {
    fcid::PipelineConfig cfg;
    if (!g.config_path.empty()) {
        std::ifstream in(g.config_path);
        if (!in) throw fcid::Error("cannot open config '" + g.config_path + "'", "config");
        json j;
        try {
            j = json::parse(in);
            if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
            if (j.contains("threads")) cfg.threads = j["threads"].get<int>();
            if (j.contains("patch_radius")) cfg.channels.patch_radius = j["patch_radius"].get<int>();
            if (j.contains("svm")) {
                apply_svm(j["svm"], cfg.hist.svm);
                apply_svm(j["svm"], cfg.fe.svm);
            }
            if (j.contains("hist")) {
                const json& h = j["hist"];
                if (h.contains("bins")) {
                    if (h["bins"].is_array()) cfg.hist.hist.bins = h["bins"].get<std::array<int, 4>>();
                    else cfg.hist.hist.bins.fill(h["bins"].get<int>());
                }
                if (h.contains("pooling"))
                    cfg.hist.hist.pooling = h["pooling"].get<std::string>() == "average" ? fcid::Pooling::average
                                                                                      : fcid::Pooling::pooled;
                apply_svm(h, cfg.hist.svm);
            }
            if (j.contains("fe")) {
                const json& f = j["fe"];
                if (f.contains("components")) cfg.fe.components = f["components"].get<int>();
                if (f.contains("gmm_samples_per_image"))
                    cfg.fe.gmm_samples_per_image = f["gmm_samples_per_image"].get<std::size_t>();
                if (f.contains("encode_samples_per_image"))
                    cfg.fe.encode_samples_per_image = f["encode_samples_per_image"].get<std::size_t>();
                if (f.contains("em")) {
                    const json& e = f["em"];
                    if (e.contains("max_iterations")) cfg.fe.em.max_iterations = e["max_iterations"].get<int>();
                    if (e.contains("tolerance")) cfg.fe.em.tolerance = e["tolerance"].get<double>();
                    if (e.contains("variance_floor")) cfg.fe.em.variance_floor = e["variance_floor"].get<double>();
                    if (e.contains("kmeans_iterations"))
                        cfg.fe.em.kmeans_iterations = e["kmeans_iterations"].get<int>();
                }
                if (f.contains("fisher")) {
                    const json& fi = f["fisher"];
                    if (fi.contains("count_in_normalizer"))
                        cfg.fe.fisher.count_in_normalizer = fi["count_in_normalizer"].get<bool>();
                    if (fi.contains("signed_sqrt")) cfg.fe.fisher.signed_sqrt = fi["signed_sqrt"].get<bool>();
                    if (fi.contains("l2_normalize")) cfg.fe.fisher.l2_normalize = fi["l2_normalize"].get<bool>();
                }
                apply_svm(f, cfg.fe.svm);
            }
        } catch (const json::exception& e) {
            throw fcid::Error(std::string("invalid config: ") + e.what(), "config");
        }
    }
    if (g.seed) cfg.seed = *g.seed;
    if (g.threads) cfg.threads = *g.threads;
    return cfg;
}

// Per-method overrides shared by train / grid-search / cross-validate.
struct MethodOptions {
    std::string method = "hist";
    std::optional<double> c, g, threshold;
    std::optional<int> bins, components, patch_radius, platt_folds;

    void add(CLI::App* cmd) {
        cmd->add_option("--method", method, "Detector: hist or fe")->check(CLI::IsMember({"hist", "fe"}));
        cmd->add_option("--c", c, "SVM cost");
        cmd->add_option("--g", g, "RBF gamma");
        cmd->add_option("--threshold", threshold, "Probability threshold for the fake label");
        cmd->add_option("--bins", bins, "Histogram bins per channel (hist)");
        cmd->add_option("--components", components, "GMM components (fe)");
        cmd->add_option("--patch-radius", patch_radius, "Dark/bright channel patch radius");
        cmd->add_option("--platt-folds", platt_folds, "Internal folds for probability calibration");
    }

    void apply(fcid::PipelineConfig& cfg) const {
        const fcid::Method m = fcid::parse_method(method);
        fcid::SvmConfig& s = cfg.svm_for(m);
        if (c) s.c = *c;
        if (g) s.gamma = *g;
        if (threshold) s.threshold = *threshold;
        if (platt_folds) s.platt_folds = *platt_folds;
        if (bins) cfg.hist.hist.bins.fill(*bins);
        if (components) cfg.fe.components = *components;
        if (patch_radius) cfg.channels.patch_radius = *patch_radius;
    }
};

std::vector<double> parse_grid(const std::string& text) {
    if (text.empty()) return fcid::power_grid(-6, 6);
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw fcid::Error("invalid grid value '" + item + "'", "config");
        }
    }
    return out;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw fcid::Error("cannot write '" + path + "'", "output");
    out << text;
}

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

json plane_stats(const fcid::Plane& p) {
    double lo = p.values.front(), hi = lo, sum = 0.0;
    for (double v : p.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        sum += v;
    }
    return {{"min", lo}, {"max", hi}, {"mean", sum / static_cast<double>(p.size())}};
}

json roc_json(const fcid::RocCurve& roc) {
    json pts = json::array();
    for (const auto& p : roc.points) pts.push_back({p.fpr, p.tpr});
    return pts;
}

std::string curve_csv(const fcid::ThresholdSweep& sweep) {
    std::ostringstream out;
    out.precision(17);
    out << "threshold,hter\n";
    for (const auto& p : sweep.curve) out << p.threshold << ',' << p.hter << '\n';
    return out.str();
}

std::string roc_csv(const fcid::RocCurve& roc) {
    std::ostringstream out;
    out.precision(17);
    out << "fpr,tpr\n";
    for (const auto& p : roc.points) out << p.fpr << ',' << p.tpr << '\n';
    return out.str();
}

fcid::DatasetManifest manifest_for(const std::string& path, fcid::Split stage) {
    const fcid::DatasetManifest m = fcid::load_manifest(path).select(stage);
    if (m.entries.empty()) throw fcid::Error("manifest has no entries for this stage", "ingest");
    return m;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fake colorized image detection"};
    app.require_subcommand(1);
    GlobalOptions global;
    app.add_option("--seed", global.seed, "Seed for every randomized stage");
    app.add_option("--config", global.config_path, "JSON configuration file");
    app.add_option("--threads", global.threads, "Worker threads for per-image work");

    // extract
    auto* extract = app.add_subcommand("extract", "Compute hue/saturation/dark/bright planes");
    std::vector<std::string> extract_images;
    std::string planes_csv;
    std::optional<int> extract_radius;
    extract->add_option("images", extract_images, "Input PNG/JPEG files")->required();
    extract->add_option("--patch-radius", extract_radius, "Dark/bright channel patch radius");
    extract->add_option("--planes-csv", planes_csv, "Write per-pixel planes of the first image as CSV");

    // histdump
    auto* histdump = app.add_subcommand("histdump", "Dump class-level channel histograms as CSV");
    std::string hd_manifest, hd_out;
    std::optional<int> hd_bins;
    histdump->add_option("--manifest", hd_manifest)->required();
    histdump->add_option("--out", hd_out, "Output CSV (stdout if omitted)");
    histdump->add_option("--bins", hd_bins, "Bins per channel");

    // train
    auto* train = app.add_subcommand("train", "Train a detector from a manifest");
    MethodOptions train_opts;
    std::string tr_manifest, tr_out;
    bool tr_stamp = false;
    train_opts.add(train);
    train->add_option("--manifest", tr_manifest)->required();
    train->add_option("--out", tr_out, "Model file")->required();
    train->add_flag("--stamp", tr_stamp, "Record the creation time in the model");

    // detect
    auto* detect = app.add_subcommand("detect", "Label images with a trained model");
    std::string dt_model, dt_manifest, dt_out;
    std::vector<std::string> dt_images;
    detect->add_option("--model", dt_model)->required();
    detect->add_option("--manifest", dt_manifest, "Manifest of images (split=train rows are skipped)");
    detect->add_option("images", dt_images, "Image files");
    detect->add_option("--out", dt_out, "Output CSV (stdout if omitted)");

    // eval
    auto* eval = app.add_subcommand("eval", "HTER/ROC/AUC of a model on a labelled manifest");
    std::string ev_model, ev_manifest, ev_report, ev_roc, ev_curve;
    eval->add_option("--model", ev_model)->required();
    eval->add_option("--manifest", ev_manifest)->required();
    eval->add_option("--report", ev_report, "Write the JSON report here");
    eval->add_option("--roc-csv", ev_roc, "Write ROC points as CSV");
    eval->add_option("--threshold-csv", ev_curve, "Write the threshold sweep as CSV");

    // grid-search
    auto* grid = app.add_subcommand("grid-search", "Grid search of SVM (c, g) by validation HTER");
    MethodOptions grid_opts;
    std::string gs_manifest, gs_validate, gs_c, gs_g, gs_report;
    grid_opts.add(grid);
    grid->add_option("--manifest", gs_manifest, "Training manifest")->required();
    grid->add_option("--validate", gs_validate, "Validation manifest (default: 50/50 split of --manifest)");
    grid->add_option("--c-grid", gs_c, "Comma-separated c values (default 2^-6..2^6)");
    grid->add_option("--g-grid", gs_g, "Comma-separated g values (default 2^-6..2^6)");
    grid->add_option("--report", gs_report, "Write the JSON report here");

    // cross-validate
    auto* cv = app.add_subcommand("cross-validate", "k-fold cross-validation with threshold selection");
    MethodOptions cv_opts;
    std::string cv_manifest, cv_report;
    std::size_t cv_folds = 10;
    cv_opts.add(cv);
    cv->add_option("--manifest", cv_manifest)->required();
    cv->add_option("--folds", cv_folds, "Number of folds");
    cv->add_option("--report", cv_report, "Write the JSON report here");

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic natural/fake corpus");
    fcid::SynthConfig sy;
    std::string sy_out;
    int sy_size = 64;
    synth->add_option("--out-dir", sy_out)->required();
    synth->add_option("--n-pairs", sy.n_pairs)->required();
    synth->add_option("--strength", sy.strength, "Perturbation strength in [0,1]");
    synth->add_option("--size", sy_size, "Image width and height");
    synth->add_option("--test-fraction", sy.test_fraction, "Fraction of pairs marked split=test");

    CLI11_PARSE(app, argc, argv);

    const char* stage = "cli";
    try {
        fcid::PipelineConfig cfg = load_config(global);

        if (*extract) {
            stage = "extract";
            if (extract_radius) cfg.channels.patch_radius = *extract_radius;
            for (std::size_t i = 0; i < extract_images.size(); ++i) {
                const auto& path = extract_images[i];
                const fcid::RgbImage img = fcid::read_image(path);
                const fcid::ChannelPlanes planes = fcid::extract_channel_planes(img, cfg.channels);
                json j = {{"path", path},
                          {"width", img.width},
                          {"height", img.height},
                          {"grayscale", img.from_grayscale},
                          {"hue", plane_stats(planes.hue)},
                          {"saturation", plane_stats(planes.saturation)},
                          {"dark", plane_stats(planes.dark)},
                          {"bright", plane_stats(planes.bright)}};
                std::cout << j.dump() << '\n';
                if (i == 0 && !planes_csv.empty()) {
                    std::ostringstream out;
                    out.precision(17);
                    out << "x,y,hue,saturation,dark,bright\n";
                    for (int y = 0; y < img.height; ++y)
                        for (int x = 0; x < img.width; ++x)
                            out << x << ',' << y << ',' << planes.hue.at(x, y) << ','
                                << planes.saturation.at(x, y) << ',' << planes.dark.at(x, y) << ','
                                << planes.bright.at(x, y) << '\n';
                    write_text(planes_csv, out.str());
                }
            }
        } else if (*histdump) {
            stage = "histdump";
            if (hd_bins) cfg.hist.hist.bins.fill(*hd_bins);
            const auto manifest = fcid::load_manifest(hd_manifest);
            const auto dists = fcid::dataset_distributions(fcid::ImageSource::from_manifest(manifest), cfg);
            std::ostringstream out;
            fcid::write_histogram_csv(out, dists);
            if (hd_out.empty()) std::cout << out.str();
            else write_text(hd_out, out.str());
        } else if (*train) {
            stage = "train";
            train_opts.apply(cfg);
            const fcid::Method method = fcid::parse_method(train_opts.method);
            fcid::FcidModel model = fcid::train_fcid(method, fcid::load_manifest(tr_manifest), cfg);
            if (tr_stamp) model.provenance.created = utc_now();
            fcid::save_model(model, tr_out);
            json summary = {{"method", train_opts.method},
                            {"model", tr_out},
                            {"training_images", model.provenance.training_images},
                            {"support_vectors", model.svm.support_vectors.size()},
                            {"c", model.svm_config.c},
                            {"g", model.svm_config.gamma},
                            {"threshold", model.svm.threshold}};
            std::cout << summary.dump() << '\n';
        } else if (*detect) {
            stage = "detect";
            const fcid::FcidModel model = fcid::load_model(dt_model);
            fcid::ImageSource source;
            if (!dt_manifest.empty()) {
                const auto manifest = manifest_for(dt_manifest, fcid::Split::test);
                fcid::check_disjoint_from_training(model, manifest);
                source = fcid::ImageSource::from_manifest(manifest);
            } else {
                if (dt_images.empty()) throw fcid::Error("no input images", "detect");
                source.ids = dt_images;
                source.labels.assign(dt_images.size(), fcid::Label::natural);
                source.load = [&](std::size_t i) { return fcid::read_image(dt_images[i]); };
            }
            const auto results = fcid::detect(model, source, cfg.threads);
            std::ostringstream out;
            out.precision(17);
            out << "path,label,probability,grayscale,error\n";
            std::size_t failures = 0;
            for (const auto& d : results) {
                out << d.id << ',' << (d.label ? fcid::label_name(*d.label) : "") << ',';
                if (d.ok()) out << d.probability;
                out << ',' << (d.grayscale ? 1 : 0) << ',' << json(d.error).dump() << '\n';
                failures += !d.ok();
            }
            if (dt_out.empty()) std::cout << out.str();
            else write_text(dt_out, out.str());
            if (failures) std::cerr << json({{"warning", "images failed"}, {"count", failures}}).dump() << '\n';
        } else if (*eval) {
            stage = "eval";
            const fcid::FcidModel model = fcid::load_model(ev_model);
            const auto manifest = manifest_for(ev_manifest, fcid::Split::test);
            fcid::check_disjoint_from_training(model, manifest);
            const auto results = fcid::detect(model, fcid::ImageSource::from_manifest(manifest), cfg.threads);
            std::vector<double> probs;
            std::vector<fcid::Label> truth;
            for (std::size_t i = 0; i < results.size(); ++i) {
                if (!results[i].ok()) throw fcid::Error(results[i].id + ": " + results[i].error, "eval");
                probs.push_back(results[i].probability);
                truth.push_back(manifest.entries[i].label);
            }
            const fcid::EvalReport r = fcid::evaluate(probs, truth, model.svm.threshold);
            const fcid::ThresholdSweep sweep = fcid::threshold_sweep(probs, truth);
            json report = {{"method", fcid::method_name(model.method)},
                           {"samples", probs.size()},
                           {"threshold", model.svm.threshold},
                           {"hter", r.hter},
                           {"fpr", r.fpr},
                           {"fnr", r.fnr},
                           {"auc", r.roc.auc},
                           {"confusion", {{"tp", r.counts.tp}, {"tn", r.counts.tn},
                                          {"fp", r.counts.fp}, {"fn", r.counts.fn}}},
                           {"best_threshold", sweep.best_threshold},
                           {"best_threshold_hter", sweep.best_hter}};
            std::cout << report.dump() << '\n';
            if (!ev_report.empty()) {
                report["roc"] = roc_json(r.roc);
                json curve = json::array();
                for (const auto& p : sweep.curve) curve.push_back({p.threshold, p.hter});
                report["threshold_curve"] = curve;
                write_text(ev_report, report.dump(1) + "\n");
            }
            if (!ev_roc.empty()) write_text(ev_roc, roc_csv(r.roc));
            if (!ev_curve.empty()) write_text(ev_curve, curve_csv(sweep));
        } else if (*grid) {
            stage = "grid-search";
            grid_opts.apply(cfg);
            const fcid::Method method = fcid::parse_method(grid_opts.method);
            const auto c_grid = parse_grid(gs_c), g_grid = parse_grid(gs_g);
            auto manifest = manifest_for(gs_manifest, fcid::Split::train);
            std::vector<std::size_t> train_idx, val_idx;
            if (gs_validate.empty()) {
                std::tie(train_idx, val_idx) = fcid::split_indices(manifest.size(), 0.5, cfg.seed, manifest.groups());
            } else {
                const auto val = fcid::load_manifest(gs_validate);
                for (std::size_t i = 0; i < manifest.size(); ++i) train_idx.push_back(i);
                for (const auto& e : val.entries) {
                    auto copy = e;
                    copy.path = std::filesystem::absolute(val.resolve(e)).string();
                    copy.pair_id = copy.pair_id.empty() ? "" : "validate:" + copy.pair_id;
                    val_idx.push_back(manifest.entries.size());
                    manifest.entries.push_back(copy);
                }
            }
            const auto data = fcid::PreparedDataset::prepare(method, fcid::ImageSource::from_manifest(manifest), cfg);
            const auto result = fcid::grid_search_method(data, train_idx, val_idx, c_grid, g_grid, cfg.seed);
            json cells = json::array();
            for (const auto& cell : result.cells) {
                json jc = {{"c", cell.c}, {"g", cell.gamma}};
                jc["hter"] = cell.hter ? json(*cell.hter) : json(nullptr);
                if (!cell.error.empty()) jc["error"] = cell.error;
                cells.push_back(jc);
            }
            json report = {{"method", grid_opts.method},
                           {"c_grid", c_grid},
                           {"g_grid", g_grid},
                           {"best", {{"c", result.best_c}, {"g", result.best_gamma}, {"hter", result.best_hter}}},
                           {"cells", cells}};
            std::cout << report["best"].dump() << '\n';
            if (!gs_report.empty()) write_text(gs_report, report.dump(1) + "\n");
        } else if (*cv) {
            stage = "cross-validate";
            cv_opts.apply(cfg);
            const fcid::Method method = fcid::parse_method(cv_opts.method);
            const auto manifest = manifest_for(cv_manifest, fcid::Split::train);
            const auto data = fcid::PreparedDataset::prepare(method, fcid::ImageSource::from_manifest(manifest), cfg);
            const auto r = fcid::cross_validate(data, cv_folds, cfg.seed, cfg.threads);
            json folds = json::array();
            for (const auto& f : r.folds)
                folds.push_back({{"fold", f.fold}, {"test_size", f.test_size}, {"hter", f.hter}, {"auc", f.auc},
                                 {"best_threshold", f.best_threshold}, {"best_threshold_hter", f.best_threshold_hter}});
            json report = {{"method", cv_opts.method},
                           {"folds", folds},
                           {"mean_hter", r.mean_hter},
                           {"mean_auc", r.mean_auc},
                           {"selected_threshold", r.selected_threshold}};
            std::cout << json({{"mean_hter", r.mean_hter}, {"mean_auc", r.mean_auc},
                               {"selected_threshold", r.selected_threshold}}).dump() << '\n';
            if (!cv_report.empty()) write_text(cv_report, report.dump(1) + "\n");
        } else if (*synth) {
            stage = "synth";
            sy.seed = cfg.seed;
            sy.width = sy.height = sy_size;
            const auto manifest = fcid::synth_generate(sy_out, sy);
            std::cout << json({{"manifest", (std::filesystem::path(sy_out) / "manifest.csv").string()},
                               {"images", manifest.size()}}).dump() << '\n';
        }
    } catch (const fcid::Error& e) {
        std::cerr << json({{"error", e.what()}, {"stage", e.stage().empty() ? stage : e.stage()}}).dump() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << json({{"error", e.what()}, {"stage", stage}}).dump() << '\n';
        return 1;
    }
    return 0;
}

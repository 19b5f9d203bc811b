#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "fcid/channels.hpp"
#include "fcid/error.hpp"
#include "fcid/evaluation.hpp"
#include "fcid/fisher.hpp"
#include "fcid/gmm.hpp"
#include "fcid/histogram.hpp"
#include "fcid/image_io.hpp"
#include "fcid/manifest.hpp"
#include "fcid/model.hpp"
#include "fcid/pipeline.hpp"
#include "fcid/svm.hpp"
#include "fcid/synth.hpp"

namespace py = pybind11;
using namespace pybind11::literals;

namespace {

using F64Array = py::array_t<double, py::array::c_style | py::array::forcecast>;
using U8Array = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

fcid::RgbImage to_image(const U8Array& a) {
    if (a.ndim() == 2) {
        fcid::RgbImage img(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
        const auto* p = a.data();
        for (std::size_t i = 0; i < img.size(); ++i) img.pixels[i] = {p[i], p[i], p[i]};
        img.from_grayscale = true;
        return img;
    }
    if (a.ndim() != 3 || a.shape(2) != 3) throw fcid::Error("image must be HxWx3 (or HxW grayscale) uint8");
    fcid::RgbImage img(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
    const auto* p = a.data();
    for (std::size_t i = 0; i < img.size(); ++i) img.pixels[i] = {p[3 * i], p[3 * i + 1], p[3 * i + 2]};
    return img;
}

py::array_t<std::uint8_t> from_image(const fcid::RgbImage& img) {
    py::array_t<std::uint8_t> out({img.height, img.width, 3});
    auto* p = out.mutable_data();
    for (std::size_t i = 0; i < img.size(); ++i)
        for (int k = 0; k < 3; ++k) p[3 * i + k] = img.pixels[i][k];
    return out;
}

fcid::Plane to_plane(const F64Array& a, double lo, double hi) {
    if (a.ndim() != 2) throw fcid::Error("plane must be a 2-D array");
    fcid::Plane p(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)), lo, hi);
    std::copy(a.data(), a.data() + a.size(), p.values.begin());
    return p;
}

py::array_t<double> from_plane(const fcid::Plane& p) {
    py::array_t<double> out({p.height, p.width});
    std::copy(p.values.begin(), p.values.end(), out.mutable_data());
    return out;
}

std::vector<fcid::Sample> to_samples(const F64Array& a) {
    if (a.ndim() != 2 || a.shape(1) != fcid::kSampleDims) throw fcid::Error("samples must be an N x 4 array");
    std::vector<fcid::Sample> rows(static_cast<std::size_t>(a.shape(0)));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (int v = 0; v < fcid::kSampleDims; ++v) rows[i][v] = a.at(i, v);
    return rows;
}

py::array_t<double> from_samples(const std::vector<fcid::Sample>& rows) {
    py::array_t<double> out({static_cast<py::ssize_t>(rows.size()), py::ssize_t{fcid::kSampleDims}});
    auto m = out.mutable_unchecked<2>();
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (int v = 0; v < fcid::kSampleDims; ++v) m(i, v) = rows[i][v];
    return out;
}

std::vector<fcid::FeatureRow> to_rows(const F64Array& a) {
    if (a.ndim() != 2) throw fcid::Error("features must be a 2-D array");
    std::vector<fcid::FeatureRow> rows(static_cast<std::size_t>(a.shape(0)),
                                       fcid::FeatureRow(static_cast<std::size_t>(a.shape(1))));
    for (std::size_t i = 0; i < rows.size(); ++i)
        std::copy(a.data() + i * a.shape(1), a.data() + (i + 1) * a.shape(1), rows[i].begin());
    return rows;
}

py::array_t<double> to_array(const std::vector<double>& v) { return py::array_t<double>(v.size(), v.data()); }

// Labels may be given as "natural"/"fake" strings or as truthy values (fake).
std::vector<fcid::Label> to_labels(const py::iterable& items) {
    std::vector<fcid::Label> out;
    for (const auto& item : items) {
        if (py::isinstance<py::str>(item)) out.push_back(fcid::parse_label(item.cast<std::string>()));
        else out.push_back(PyObject_IsTrue(item.ptr()) == 1 ? fcid::Label::fake : fcid::Label::natural);
    }
    return out;
}

fcid::Channel parse_channel(const std::string& name) {
    for (auto c : fcid::kAllChannels)
        if (fcid::channel_name(c) == name) return c;
    throw fcid::Error("unknown channel '" + name + "'");
}

py::dict detection_dict(const fcid::Detection& d) {
    py::dict out("id"_a = d.id, "grayscale"_a = d.grayscale, "error"_a = d.error);
    out["probability"] = d.ok() ? py::object(py::float_(d.probability)) : py::object(py::none());
    out["label"] = d.label ? py::object(py::str(std::string(fcid::label_name(*d.label)))) : py::object(py::none());
    return out;
}

py::dict roc_dict(const fcid::RocCurve& roc) {
    py::list points;
    for (const auto& p : roc.points) points.append(py::make_tuple(p.fpr, p.tpr));
    return py::dict("auc"_a = roc.auc, "points"_a = points);
}

}  // namespace

PYBIND11_MODULE(_fcid, m) {
    m.doc() = "Fake colorized image detection";
    py::register_exception<fcid::Error>(m, "FcidError", PyExc_RuntimeError);

    // Channels and histograms.
    m.def("rgb_to_hsv", [](int r, int g, int b) {
        const auto hsv = fcid::rgb_to_hsv({std::uint8_t(r), std::uint8_t(g), std::uint8_t(b)});
        return py::make_tuple(hsv.hue, hsv.saturation, hsv.value);
    }, "r"_a, "g"_a, "b"_a);
    m.def("hsv_to_rgb", [](double h, double s, double v) {
        const auto px = fcid::hsv_to_rgb({h, s, v});
        return py::make_tuple(px[0], px[1], px[2]);
    }, "h"_a, "s"_a, "v"_a);
    m.def("sliding_extremum", [](const F64Array& plane, int radius, const std::string& mode) {
        if (mode != "min" && mode != "max") throw fcid::Error("mode must be 'min' or 'max'");
        const auto p = to_plane(plane, 0.0, 1.0);
        return from_plane(fcid::sliding_extremum(p, radius, mode == "min" ? fcid::Extremum::min : fcid::Extremum::max));
    }, "plane"_a, "radius"_a, "mode"_a = "min");
    m.def("extract_channel_planes", [](const U8Array& image, int patch_radius) {
        const auto planes = fcid::extract_channel_planes(to_image(image), {patch_radius});
        return py::dict("hue"_a = from_plane(planes.hue), "saturation"_a = from_plane(planes.saturation),
                        "dark"_a = from_plane(planes.dark), "bright"_a = from_plane(planes.bright));
    }, "image"_a, "patch_radius"_a = 7);
    m.def("normalized_histogram", [](const F64Array& plane, int bins, const std::string& channel) {
        const auto c = parse_channel(channel);
        const auto range = fcid::channel_range(c);
        return to_array(fcid::normalized_histogram(to_plane(plane, range.lo, range.hi), bins, c).bins);
    }, "plane"_a, "bins"_a = 200, "channel"_a = "hue");
    m.def("total_variation", [](const F64Array& hist) {
        return fcid::total_variation(std::span<const double>(hist.data(), static_cast<std::size_t>(hist.size())));
    }, "hist"_a);
    m.def("most_distinctive_bin", [](const std::vector<double>& natural, const std::vector<double>& fake) {
        fcid::Histogram n, f;
        n.bins = natural;
        f.bins = fake;
        return fcid::most_distinctive_bin(n, f);
    }, "natural"_a, "fake"_a);
    m.def("hist_feature", [](const U8Array& image, std::array<int, 4> distinctive, int bins, int patch_radius) {
        fcid::HistConfig cfg;
        cfg.bins.fill(bins);
        fcid::DistinctiveBins db;
        db.index = distinctive;
        const auto f = fcid::hist_feature(fcid::extract_channel_planes(to_image(image), {patch_radius}), db, cfg);
        return to_array(std::vector<double>(f.begin(), f.end()));
    }, "image"_a, "distinctive_bins"_a, "bins"_a = 200, "patch_radius"_a = 7);

    // Mixture model and Fisher encoding.
    py::class_<fcid::GmmModel>(m, "GmmModel")
        .def(py::init([](const std::vector<double>& weights, const F64Array& means, const F64Array& variances) {
            fcid::GmmModel g{weights, to_samples(means), to_samples(variances)};
            fcid::validate(g);
            return g;
        }), "weights"_a, "means"_a, "variances"_a)
        .def_property_readonly("components", &fcid::GmmModel::components)
        .def_property_readonly("weights", [](const fcid::GmmModel& g) { return to_array(g.weights); })
        .def_property_readonly("means", [](const fcid::GmmModel& g) { return from_samples(g.means); })
        .def_property_readonly("variances", [](const fcid::GmmModel& g) { return from_samples(g.variances); });
    m.def("fit_gmm", [](const F64Array& samples, int components, std::uint64_t seed, int max_iterations,
                        double tolerance, double variance_floor) {
        fcid::EmConfig cfg;
        cfg.seed = seed;
        cfg.max_iterations = max_iterations;
        cfg.tolerance = tolerance;
        cfg.variance_floor = variance_floor;
        const auto rows = to_samples(samples);
        const auto fit = fcid::fit_gmm(rows, components, cfg);
        return py::make_tuple(fit.model, to_array(fit.log_likelihood));
    }, "samples"_a, "components"_a, "seed"_a = 0, "max_iterations"_a = 100, "tolerance"_a = 1e-6,
       "variance_floor"_a = 1e-6, "Returns (model, per-iteration mean log-likelihood).");
    m.def("log_density", [](const fcid::GmmModel& g, const fcid::Sample& x) { return fcid::log_density(g, x); },
          "model"_a, "sample"_a);
    m.def("posteriors", [](const fcid::GmmModel& g, const fcid::Sample& x) { return to_array(fcid::posteriors(g, x)); },
          "model"_a, "sample"_a);
    m.def("fisher_gradients", [](const fcid::GmmModel& g, const F64Array& samples) {
        const auto grads = fcid::fisher_gradients(g, to_samples(samples));
        return py::dict("weight"_a = to_array(grads.weight), "mean"_a = to_array(grads.mean),
                        "sigma"_a = to_array(grads.sigma));
    }, "model"_a, "samples"_a);
    m.def("encode_fisher", [](const fcid::GmmModel& g, const F64Array& samples, bool signed_sqrt, bool l2_normalize,
                              bool count_in_normalizer) {
        return to_array(fcid::encode_fisher(g, to_samples(samples), {count_in_normalizer, signed_sqrt, l2_normalize}));
    }, "model"_a, "samples"_a, "signed_sqrt"_a = false, "l2_normalize"_a = false, "count_in_normalizer"_a = false);

    // Classifier.
    py::class_<fcid::SvmModel>(m, "SvmModel")
        .def("decision_value", [](const fcid::SvmModel& s, const std::vector<double>& x) { return s.decision_value(x); })
        .def("predict_probability", [](const fcid::SvmModel& s, const std::vector<double>& x) {
            return s.predict_probability(x);
        })
        .def("classify", [](const fcid::SvmModel& s, const std::vector<double>& x) {
            return std::string(fcid::label_name(s.classify(x)));
        })
        .def_readwrite("threshold", &fcid::SvmModel::threshold)
        .def_readonly("bias", &fcid::SvmModel::bias)
        .def_readonly("gamma", &fcid::SvmModel::gamma)
        .def_readonly("platt_a", &fcid::SvmModel::platt_a)
        .def_readonly("platt_b", &fcid::SvmModel::platt_b)
        .def_property_readonly("n_support", [](const fcid::SvmModel& s) { return s.support_vectors.size(); });
    m.def("train_svm", [](const F64Array& features, const py::iterable& labels, double c, double gamma,
                          double threshold, int platt_folds, std::uint64_t seed) {
        fcid::LabeledFeatures data{to_rows(features), to_labels(labels), {}};
        fcid::SvmConfig cfg;
        cfg.c = c;
        cfg.gamma = gamma;
        cfg.threshold = threshold;
        cfg.platt_folds = platt_folds;
        return fcid::train_svm(data, cfg, seed);
    }, "features"_a, "labels"_a, "c"_a = 1.0, "gamma"_a = 0.5, "threshold"_a = 0.5, "platt_folds"_a = 0,
       "seed"_a = 0);

    // Metrics and protocol helpers.
    m.def("hter", [](std::uint64_t tp, std::uint64_t tn, std::uint64_t fp, std::uint64_t fn) {
        fcid::ConfusionCounts c;
        c.tp = tp;
        c.tn = tn;
        c.fp = fp;
        c.fn = fn;
        return fcid::hter(c);
    }, "tp"_a, "tn"_a, "fp"_a, "fn"_a);
    m.def("roc_auc", [](const std::vector<double>& scores, const py::iterable& labels) {
        return roc_dict(fcid::roc_auc(scores, to_labels(labels)));
    }, "scores"_a, "labels"_a);
    m.def("threshold_sweep", [](const std::vector<double>& probs, const py::iterable& labels) {
        const auto s = fcid::threshold_sweep(probs, to_labels(labels));
        py::list curve;
        for (const auto& p : s.curve) curve.append(py::make_tuple(p.threshold, p.hter));
        return py::dict("best_threshold"_a = s.best_threshold, "best_hter"_a = s.best_hter, "curve"_a = curve);
    }, "probabilities"_a, "labels"_a);
    m.def("average_thresholds", [](const std::vector<double>& t) { return fcid::average_thresholds(t); });
    m.def("k_fold_split", [](std::size_t n, std::size_t k, std::uint64_t seed, const std::vector<std::int64_t>& groups) {
        return fcid::k_fold_split(n, k, seed, groups);
    }, "n"_a, "k"_a, "seed"_a = 0, "groups"_a = std::vector<std::int64_t>{});
    m.def("power_grid", &fcid::power_grid, "lo"_a = -6, "hi"_a = 6);

    // Images, corpus, detectors.
    m.def("read_image", [](const std::filesystem::path& path) {
        const auto img = fcid::read_image(path);
        return py::make_tuple(from_image(img), img.from_grayscale);
    }, "path"_a, "Returns (HxWx3 uint8 array, source_was_grayscale).");
    m.def("synth", [](const std::filesystem::path& out_dir, std::size_t n_pairs, double strength, std::uint64_t seed,
                      int size, double test_fraction) {
        fcid::SynthConfig cfg;
        cfg.n_pairs = n_pairs;
        cfg.strength = strength;
        cfg.seed = seed;
        cfg.width = cfg.height = size;
        cfg.test_fraction = test_fraction;
        fcid::synth_generate(out_dir, cfg);
        return out_dir / "manifest.csv";
    }, "out_dir"_a, "n_pairs"_a, "strength"_a = 0.4, "seed"_a = 0, "size"_a = 64, "test_fraction"_a = 0.5,
       "Writes a paired natural/fake corpus and returns the manifest path.");

    py::class_<fcid::FcidModel>(m, "Model")
        .def_property_readonly("method", [](const fcid::FcidModel& f) { return std::string(fcid::method_name(f.method)); })
        .def_property_readonly("c", [](const fcid::FcidModel& f) { return f.svm_config.c; })
        .def_property_readonly("gamma", [](const fcid::FcidModel& f) { return f.svm_config.gamma; })
        .def_property_readonly("threshold", [](const fcid::FcidModel& f) { return f.svm.threshold; })
        .def_property_readonly("bins", [](const fcid::FcidModel& f) -> py::object {
            return f.hist ? py::cast(f.hist->config.bins) : py::none();
        })
        .def_property_readonly("distinctive_bins", [](const fcid::FcidModel& f) -> py::object {
            return f.hist ? py::cast(f.hist->bins.index) : py::none();
        })
        .def_property_readonly("gmm", [](const fcid::FcidModel& f) -> py::object {
            return f.fe ? py::cast(f.fe->gmm) : py::none();
        })
        .def_property_readonly("svm", [](const fcid::FcidModel& f) { return f.svm; })
        .def("save", [](const fcid::FcidModel& f, const std::filesystem::path& p) { fcid::save_model(f, p); }, "path"_a)
        .def("to_json", [](const fcid::FcidModel& f) { return fcid::model_to_json(f); })
        .def("features", [](const fcid::FcidModel& f, const U8Array& image) {
            return to_array(fcid::model_features(f, to_image(image)));
        }, "image"_a)
        .def("probability", [](const fcid::FcidModel& f, const U8Array& image) {
            return fcid::detect_image(f, to_image(image)).probability;
        }, "image"_a)
        .def("detect", [](const fcid::FcidModel& f, const py::list& images, int threads) {
            // Items are file paths or image arrays.
            std::vector<std::filesystem::path> paths(images.size());
            std::vector<std::optional<fcid::RgbImage>> arrays(images.size());
            fcid::ImageSource src;
            for (std::size_t i = 0; i < images.size(); ++i) {
                py::handle item = images[i];
                if (py::isinstance<py::array>(item)) {
                    arrays[i] = to_image(item.cast<U8Array>());
                    src.ids.push_back("#" + std::to_string(i));
                } else {
                    paths[i] = item.cast<std::filesystem::path>();
                    src.ids.push_back(paths[i].string());
                }
            }
            src.labels.assign(images.size(), fcid::Label::natural);
            src.load = [&](std::size_t i) { return arrays[i] ? *arrays[i] : fcid::read_image(paths[i]); };
            std::vector<fcid::Detection> out;
            {
                py::gil_scoped_release release;
                out = fcid::detect(f, src, threads);
            }
            py::list result;
            for (const auto& d : out) result.append(detection_dict(d));
            return result;
        }, "images"_a, "threads"_a = 1);

    m.def("load_model", [](const std::filesystem::path& p) { return fcid::load_model(p); }, "path"_a);
    m.def("train", [](const std::filesystem::path& manifest, const std::string& method, std::uint64_t seed, int threads,
                      std::optional<double> c, std::optional<double> g, std::optional<double> threshold,
                      std::optional<int> bins, std::optional<int> components, std::optional<int> patch_radius) {
        const fcid::Method mt = fcid::parse_method(method);
        fcid::PipelineConfig cfg;
        cfg.seed = seed;
        cfg.threads = threads;
        auto& svm = cfg.svm_for(mt);
        if (c) svm.c = *c;
        if (g) svm.gamma = *g;
        if (threshold) svm.threshold = *threshold;
        if (bins) cfg.hist.hist.bins.fill(*bins);
        if (components) cfg.fe.components = *components;
        if (patch_radius) cfg.channels.patch_radius = *patch_radius;
        const auto data = fcid::load_manifest(manifest);
        py::gil_scoped_release release;
        return fcid::train_fcid(mt, data, cfg);
    }, "manifest"_a, "method"_a = "hist", "seed"_a = 0, "threads"_a = 1, "c"_a = py::none(), "g"_a = py::none(),
       "threshold"_a = py::none(), "bins"_a = py::none(), "components"_a = py::none(), "patch_radius"_a = py::none(),
       "Trains on the manifest's train/unassigned rows.");
    m.def("evaluate", [](const fcid::FcidModel& f, const std::filesystem::path& manifest_path, int threads) {
        const auto manifest = fcid::load_manifest(manifest_path).select(fcid::Split::test);
        fcid::check_disjoint_from_training(f, manifest);
        std::vector<fcid::Detection> det;
        {
            py::gil_scoped_release release;
            det = fcid::detect(f, fcid::ImageSource::from_manifest(manifest), threads);
        }
        std::vector<double> probs;
        std::vector<fcid::Label> truth;
        for (std::size_t i = 0; i < det.size(); ++i) {
            if (!det[i].ok()) throw fcid::Error(det[i].id + ": " + det[i].error, "eval");
            probs.push_back(det[i].probability);
            truth.push_back(manifest.entries[i].label);
        }
        const auto r = fcid::evaluate(probs, truth, f.svm.threshold);
        return py::dict("hter"_a = r.hter, "fpr"_a = r.fpr, "fnr"_a = r.fnr, "auc"_a = r.roc.auc,
                        "samples"_a = probs.size(), "probabilities"_a = to_array(probs));
    }, "model"_a, "manifest"_a, "threads"_a = 1, "Scores the manifest's test/unassigned rows.");
}

#include "fcid/model.hpp"

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "fcid/error.hpp"

namespace fcid {

using nlohmann::json;

std::string_view method_name(Method m) noexcept { return m == Method::hist ? "hist" : "fe"; }

Method parse_method(std::string_view text) {
    if (text == "hist") return Method::hist;
    if (text == "fe") return Method::fe;
    throw Error("unknown method '" + std::string(text) + "' (expected hist or fe)");
}

namespace {

json samples_to_json(const std::vector<Sample>& xs) {
    json a = json::array();
    for (const auto& x : xs) a.push_back(x);
    return a;
}

std::vector<Sample> samples_from_json(const json& a) {
    std::vector<Sample> out;
    for (const auto& x : a) out.push_back(x.get<Sample>());
    return out;
}

json histograms_to_json(const std::array<Histogram, 4>& hs) {
    json o = json::object();
    for (Channel c : kAllChannels) o[std::string(channel_name(c))] = hs[static_cast<int>(c)].bins;
    return o;
}

std::array<Histogram, 4> histograms_from_json(const json& o) {
    std::array<Histogram, 4> hs;
    for (Channel c : kAllChannels) {
        auto& h = hs[static_cast<int>(c)];
        h.channel = c;
        h.range = channel_range(c);
        h.bins = o.at(std::string(channel_name(c))).get<std::vector<double>>();
    }
    return hs;
}

json svm_config_to_json(const SvmConfig& c) {
    return {{"c", c.c},
            {"gamma", c.gamma},
            {"tolerance", c.tolerance},
            {"max_iterations", c.max_iterations},
            {"platt_folds", c.platt_folds},
            {"threshold", c.threshold}};
}

SvmConfig svm_config_from_json(const json& o) {
    SvmConfig c;
    c.c = o.at("c").get<double>();
    c.gamma = o.at("gamma").get<double>();
    c.tolerance = o.at("tolerance").get<double>();
    c.max_iterations = o.at("max_iterations").get<long>();
    c.platt_folds = o.at("platt_folds").get<int>();
    c.threshold = o.at("threshold").get<double>();
    return c;
}

}  // namespace

std::string model_to_json(const FcidModel& m) {
    json j;
    j["format_version"] = kModelFormat;
    j["method"] = method_name(m.method);
    j["channels"] = {{"patch_radius", m.channels.patch_radius}};

    if (m.hist) {
        const HistSection& h = *m.hist;
        j["hist"] = {
            {"bins", h.config.bins},
            {"pooling", h.config.pooling == Pooling::pooled ? "pooled" : "average"},
            {"distinctive_bins", {{"hue", h.bins.index[0]}, {"saturation", h.bins.index[1]},
                                  {"dark", h.bins.index[2]}, {"bright", h.bins.index[3]}}},
            {"class_distributions",
             {{"natural", histograms_to_json(h.distributions.natural)},
              {"fake", histograms_to_json(h.distributions.fake)}}}};
    }
    if (m.fe) {
        const FeSection& f = *m.fe;
        j["fe"] = {
            {"components", f.components},
            {"gmm_samples_per_image", f.gmm_samples_per_image},
            {"encode_samples_per_image", f.encode_samples_per_image},
            {"sample_scale", f.sample_scale},
            {"em", {{"max_iterations", f.em.max_iterations}, {"tolerance", f.em.tolerance},
                    {"variance_floor", f.em.variance_floor}, {"kmeans_iterations", f.em.kmeans_iterations},
                    {"seed", f.em.seed}}},
            {"fisher", {{"count_in_normalizer", f.fisher.count_in_normalizer},
                        {"signed_sqrt", f.fisher.signed_sqrt}, {"l2_normalize", f.fisher.l2_normalize}}},
            {"gmm", {{"weights", f.gmm.weights}, {"means", samples_to_json(f.gmm.means)},
                     {"variances", samples_to_json(f.gmm.variances)}}}};
    }

    const SvmModel& s = m.svm;
    j["svm"] = {{"config", svm_config_to_json(m.svm_config)},
                {"gamma", s.gamma},
                {"bias", s.bias},
                {"support_vectors", s.support_vectors},
                {"coefficients", s.coefficients},
                {"scaling", {{"lo", s.scaling.lo}, {"span", s.scaling.span}}},
                {"platt", {{"a", s.platt_a}, {"b", s.platt_b}}},
                {"threshold", s.threshold}};

    j["provenance"] = {{"seed", m.provenance.seed},
                       {"training_images", m.provenance.training_images},
                       {"training_paths", m.provenance.training_paths},
                       {"created", m.provenance.created.empty() ? json(nullptr) : json(m.provenance.created)}};
    return j.dump(1) + "\n";
}

FcidModel model_from_json(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(std::string("corrupted model file: ") + e.what());
    }
    try {
        const auto version = j.at("format_version").get<std::string>();
        if (version != kModelFormat)
            throw Error("unsupported model version '" + version + "' (expected '" +
                        std::string(kModelFormat) + "')");

        FcidModel m;
        m.method = parse_method(j.at("method").get<std::string>());
        m.channels.patch_radius = j.at("channels").at("patch_radius").get<int>();

        if (j.contains("hist")) {
            const json& h = j.at("hist");
            HistSection sec;
            sec.config.bins = h.at("bins").get<std::array<int, 4>>();
            sec.config.pooling = h.at("pooling").get<std::string>() == "average" ? Pooling::average : Pooling::pooled;
            const json& db = h.at("distinctive_bins");
            sec.bins.index = {db.at("hue").get<int>(), db.at("saturation").get<int>(),
                              db.at("dark").get<int>(), db.at("bright").get<int>()};
            sec.distributions.natural = histograms_from_json(h.at("class_distributions").at("natural"));
            sec.distributions.fake = histograms_from_json(h.at("class_distributions").at("fake"));
            m.hist = std::move(sec);
        }
        if (j.contains("fe")) {
            const json& f = j.at("fe");
            FeSection sec;
            sec.components = f.at("components").get<int>();
            sec.gmm_samples_per_image = f.at("gmm_samples_per_image").get<std::size_t>();
            sec.encode_samples_per_image = f.at("encode_samples_per_image").get<std::size_t>();
            sec.sample_scale = f.at("sample_scale").get<Sample>();
            const json& em = f.at("em");
            sec.em.max_iterations = em.at("max_iterations").get<int>();
            sec.em.tolerance = em.at("tolerance").get<double>();
            sec.em.variance_floor = em.at("variance_floor").get<double>();
            sec.em.kmeans_iterations = em.at("kmeans_iterations").get<int>();
            sec.em.seed = em.at("seed").get<std::uint64_t>();
            const json& fi = f.at("fisher");
            sec.fisher.count_in_normalizer = fi.at("count_in_normalizer").get<bool>();
            sec.fisher.signed_sqrt = fi.at("signed_sqrt").get<bool>();
            sec.fisher.l2_normalize = fi.at("l2_normalize").get<bool>();
            const json& g = f.at("gmm");
            sec.gmm.weights = g.at("weights").get<std::vector<double>>();
            sec.gmm.means = samples_from_json(g.at("means"));
            sec.gmm.variances = samples_from_json(g.at("variances"));
            validate(sec.gmm);
            m.fe = std::move(sec);
        }
        if ((m.method == Method::hist && !m.hist) || (m.method == Method::fe && !m.fe))
            throw Error("model is missing the section for method '" + std::string(method_name(m.method)) + "'");

        const json& s = j.at("svm");
        m.svm_config = svm_config_from_json(s.at("config"));
        m.svm.gamma = s.at("gamma").get<double>();
        m.svm.bias = s.at("bias").get<double>();
        m.svm.support_vectors = s.at("support_vectors").get<std::vector<FeatureRow>>();
        m.svm.coefficients = s.at("coefficients").get<std::vector<double>>();
        m.svm.scaling.lo = s.at("scaling").at("lo").get<std::vector<double>>();
        m.svm.scaling.span = s.at("scaling").at("span").get<std::vector<double>>();
        m.svm.platt_a = s.at("platt").at("a").get<double>();
        m.svm.platt_b = s.at("platt").at("b").get<double>();
        m.svm.threshold = s.at("threshold").get<double>();
        if (m.svm.support_vectors.size() != m.svm.coefficients.size())
            throw Error("support vectors and coefficients differ in length");

        const json& p = j.at("provenance");
        m.provenance.seed = p.at("seed").get<std::uint64_t>();
        m.provenance.training_images = p.at("training_images").get<std::size_t>();
        m.provenance.training_paths = p.at("training_paths").get<std::vector<std::string>>();
        if (!p.at("created").is_null()) m.provenance.created = p.at("created").get<std::string>();
        return m;
    } catch (const json::exception& e) {
        throw Error(std::string("corrupted model file: ") + e.what());
    }
}

void save_model(const FcidModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write model '" + path.string() + "'");
    out << model_to_json(model);
    if (!out) throw Error("cannot write model '" + path.string() + "'");
}

FcidModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open model '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return model_from_json(ss.str());
}

}  // namespace fcid

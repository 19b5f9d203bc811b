#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "fcid/error.hpp"
#include "fcid/evaluation.hpp"
#include "fcid/image_io.hpp"
#include "fcid/manifest.hpp"
#include "fcid/model.hpp"
#include "fcid/pipeline.hpp"
#include "fcid/synth.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"

using namespace fcid;

namespace {

struct PairedImages {
    std::vector<RgbImage> images;
    std::vector<Label> labels;
    std::vector<std::int64_t> groups;

    ImageSource source() const {
        auto s = ImageSource::from_images(images, labels);
        s.groups = groups;
        return s;
    }
};

PairedImages paired_images(std::size_t pairs, double strength, std::uint64_t seed, int size = 32) {
    PairedImages p;
    for (std::size_t i = 0; i < pairs; ++i) {
        p.images.push_back(synth_natural(size, size, seed * 1000 + i));
        p.images.push_back(synth_fake(p.images.back(), strength));
        p.labels.push_back(Label::natural);
        p.labels.push_back(Label::fake);
        p.groups.push_back(static_cast<std::int64_t>(i));
        p.groups.push_back(static_cast<std::int64_t>(i));
    }
    return p;
}

PipelineConfig small_config() {
    PipelineConfig cfg;
    cfg.channels.patch_radius = 2;
    cfg.fe.components = 4;
    cfg.fe.gmm_samples_per_image = 256;
    cfg.seed = 5;
    return cfg;
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("manifest parsing") {
    std::istringstream two("path,label,pair_id\na.png,natural,p1\nb.png,fake,p1\n");
    const auto m = parse_manifest(two);
    CHECK(m.size() == 2);
    CHECK(m.count(Label::fake) == 1);
    CHECK(!m.has_splits());
    const auto g = m.groups();
    CHECK(g[0] == g[1]);

    std::istringstream empty("");
    CHECK_THROWS_WITH(parse_manifest(empty), "empty manifest");
    std::istringstream header_only("path,label,pair_id\n");
    CHECK_THROWS_WITH(parse_manifest(header_only), "empty manifest");
    std::istringstream bad("path,label,pair_id\na.png,natural,p1\nb.png,purple,p2\n");
    CHECK_THROWS_WITH(parse_manifest(bad), doctest::Contains("line 3"));
    std::istringstream dup("path,label\na.png,natural\na.png,fake\n");
    CHECK_THROWS_WITH(parse_manifest(dup), doctest::Contains("duplicate path"));
    std::istringstream bad_pair("path,label,pair_id\na.png,natural,p\nb.png,natural,p\n");
    CHECK_THROWS(parse_manifest(bad_pair));
    std::istringstream short_line("path,label,pair_id\na.png\n");
    CHECK_THROWS_WITH(parse_manifest(short_line), doctest::Contains("line 2"));
}

TEST_CASE("manifest splits select roles") {
    std::istringstream in("path,label,pair_id,split\na,natural,1,train\nb,fake,1,train\nc,natural,2,test\nd,fake,2,test\ne,fake,,\n");
    const auto m = parse_manifest(in);
    CHECK(m.has_splits());
    CHECK(m.select(Split::train).size() == 3);
    CHECK(m.select(Split::test).size() == 3);
}

TEST_CASE("manifest round trip of 100 lines") {
    DatasetManifest m;
    for (int i = 0; i < 100; ++i) {
        ManifestEntry e;
        e.path = "img/" + std::to_string(i) + (i % 7 == 0 ? " with, comma.png" : ".png");
        e.label = i % 2 ? Label::fake : Label::natural;
        // Every fifth pair is left unlinked.
        if ((i / 2) % 5 != 0) e.pair_id = "pair" + std::to_string(i / 2);
        m.entries.push_back(e);
    }
    std::ostringstream out;
    write_manifest(out, m);
    std::istringstream in(out.str());
    const auto back = parse_manifest(in);
    REQUIRE(back.size() == 100);
    for (int i = 0; i < 100; ++i) {
        CHECK(back.entries[i].path == m.entries[i].path);
        CHECK(back.entries[i].label == m.entries[i].label);
        CHECK(back.entries[i].pair_id == m.entries[i].pair_id);
    }
    std::ostringstream again;
    write_manifest(again, back);
    CHECK(again.str() == out.str());
}

TEST_CASE("png round trip and missing files") {
    TempDir dir("fcid-io");
    std::mt19937_64 rng(1);
    const auto img = oracle::random_image(rng, 13, 7);
    write_png(dir / "a.png", img);
    const auto back = read_image(dir / "a.png");
    CHECK(back.width == 13);
    CHECK(back.height == 7);
    CHECK(back.pixels == img.pixels);
    CHECK(!back.from_grayscale);
    CHECK_THROWS(read_image(dir / "missing.png"));
    std::ofstream(dir / "junk.png") << "not an image";
    CHECK_THROWS(read_image(dir / "junk.png"));
}

TEST_CASE("synthetic twins") {
    const auto natural = synth_natural(48, 40, 3);
    CHECK(synth_fake(natural, 0.0).pixels == natural.pixels);

    double s_nat = 0.0, s_fake = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto n = synth_natural(64, 64, seed);
        const auto f = synth_fake(n, 0.5);
        for (std::size_t i = 0; i < n.size(); ++i) {
            s_nat += rgb_to_hsv(n.pixels[i]).saturation;
            s_fake += rgb_to_hsv(f.pixels[i]).saturation;
        }
    }
    CHECK(s_fake / s_nat == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("synthetic corpus is reproducible") {
    TempDir a("fcid-synth-a"), b("fcid-synth-b");
    SynthConfig cfg;
    cfg.n_pairs = 6;
    cfg.seed = 9;
    cfg.width = 20;
    cfg.height = 16;
    const auto m = synth_generate(a.path(), cfg);
    synth_generate(b.path(), cfg);
    CHECK(m.size() == 12);
    CHECK(m.select(Split::test).size() == 6);
    for (const auto& e : m.entries) CHECK(read_file(a / e.path) == read_file(b / e.path));
    CHECK(read_file(a / "manifest.csv") == read_file(b / "manifest.csv"));
    const auto loaded = load_manifest(a / "manifest.csv");
    CHECK(loaded.size() == 12);
    CHECK(loaded.missing.empty());
}

TEST_CASE("defaults") {
    const PipelineConfig cfg;
    CHECK(cfg.hist.hist.bins == std::array<int, 4>{200, 200, 200, 200});
    CHECK(cfg.hist.svm.c == 32.0);
    CHECK(cfg.hist.svm.gamma == 0.5);
    CHECK(cfg.hist.svm.threshold == 0.455);
    CHECK(cfg.fe.svm.c == 2.0);
    CHECK(cfg.fe.svm.gamma == 0.5);
    CHECK(cfg.fe.svm.threshold == 0.492);
    CHECK(cfg.fe.components == 8);
    CHECK(cfg.channels.patch_radius == 7);
}

TEST_CASE("hist training on separable data") {
    const auto data = paired_images(20, 0.8, 1);
    PipelineConfig cfg = small_config();
    const auto model = train_fcid_hist(data.source(), cfg);
    REQUIRE(model.hist.has_value());
    CHECK(model.hist->config.bins[0] == 200);
    CHECK(model.svm.threshold == 0.455);
    CHECK(model.svm_config.c == 32.0);

    const auto dists = dataset_distributions(data.source(), cfg);
    CHECK(distinctive_bins(dists).index == model.hist->bins.index);

    const auto det = detect_fcid_hist(model, data.source());
    std::vector<double> p;
    for (const auto& d : det) p.push_back(d.probability);
    CHECK(evaluate(p, data.labels, model.svm.threshold).hter <= 0.05);
    CHECK_THROWS(detect_fcid_fe(model, data.source()));
}

TEST_CASE("fe training and detection") {
    const auto data = paired_images(12, 0.8, 2);
    const auto cfg = small_config();
    const auto model = train_fcid_fe(data.source(), cfg);
    REQUIRE(model.fe.has_value());
    CHECK(model.svm.dimension() == 36);
    CHECK(model.svm.threshold == 0.492);
    CHECK(model_features(model, data.images[0]).size() == 36);

    SUBCASE("batch equals single-image calls, in order, for any thread count") {
        const auto batch = detect(model, data.source(), 1);
        const auto threaded = detect(model, data.source(), 3);
        REQUIRE(batch.size() == data.images.size());
        for (std::size_t i = 0; i < batch.size(); ++i) {
            CHECK(batch[i].id == "#" + std::to_string(i));
            CHECK(batch[i].probability == detect_image(model, data.images[i]).probability);
            CHECK(threaded[i].probability == batch[i].probability);
        }
    }

    SUBCASE("training is deterministic") {
        const auto again = train_fcid_fe(data.source(), cfg);
        CHECK(model_to_json(again) == model_to_json(model));
        auto threaded_cfg = cfg;
        threaded_cfg.threads = 4;
        CHECK(model_to_json(train_fcid_fe(data.source(), threaded_cfg)) == model_to_json(model));
    }

    SUBCASE("bad images are reported and skipped") {
        auto src = data.source();
        auto inner = src.load;
        src.load = [inner](std::size_t i) -> RgbImage {
            if (i == 3) throw Error("cannot decode");
            return inner(i);
        };
        const auto det = detect(model, src, 2);
        CHECK(!det[3].ok());
        CHECK(det[3].error == "cannot decode");
        CHECK(det[4].ok());
    }
}

TEST_CASE("model persistence") {
    const auto data = paired_images(10, 0.6, 3);
    const auto cfg = small_config();
    TempDir dir("fcid-model");
    std::mt19937_64 rng(4);
    std::vector<RgbImage> probes;
    for (int i = 0; i < 50; ++i) probes.push_back(oracle::random_image(rng, 12, 10));

    for (Method method : {Method::hist, Method::fe}) {
        const auto model = train_fcid(method, data.source(), cfg);
        save_model(model, dir / "m.json");
        const auto back = load_model(dir / "m.json");
        CHECK(model_to_json(back) == model_to_json(model));
        for (const auto& img : probes)
            CHECK(detect_image(back, img).probability == detect_image(model, img).probability);
    }

    auto text = read_file(dir / "m.json");
    const auto at = text.find("fcid-model/1");
    REQUIRE(at != std::string::npos);
    std::string future = text;
    future.replace(at, 12, "fcid-model/9");
    CHECK_THROWS_WITH(model_from_json(future), doctest::Contains("fcid-model/9"));
    CHECK_THROWS_WITH(model_from_json(future), doctest::Contains("fcid-model/1"));
    CHECK_THROWS_WITH(model_from_json(text.substr(0, text.size() / 2)), doctest::Contains("corrupted"));
    CHECK_THROWS(load_model(dir / "nope.json"));
}

TEST_CASE("training and detection roles stay disjoint") {
    TempDir dir("fcid-roles");
    SynthConfig sc;
    sc.n_pairs = 8;
    sc.width = sc.height = 24;
    synth_generate(dir.path(), sc);
    const auto manifest = load_manifest(dir / "manifest.csv");
    auto cfg = small_config();
    const auto model = train_fcid(Method::hist, manifest, cfg);
    CHECK(model.provenance.training_images == manifest.select(Split::train).size());
    CHECK_NOTHROW(check_disjoint_from_training(model, manifest.select(Split::test)));
    try {
        check_disjoint_from_training(model, manifest);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.stage() == "detect");
    }

    // Test-split images are never read during training.
    std::filesystem::remove(dir / manifest.select(Split::test).entries.front().path);
    CHECK_NOTHROW(train_fcid(Method::hist, manifest, cfg));
}

TEST_CASE("cross-validation and method grid search") {
    const auto data = paired_images(20, 0.6, 5);
    const auto cfg = small_config();
    const auto prepared = PreparedDataset::prepare(Method::hist, data.source(), cfg);
    const auto cv = cross_validate(prepared, 5, 1);
    CHECK(cv.folds.size() == 5);
    std::size_t total = 0;
    for (const auto& f : cv.folds) total += f.test_size;
    CHECK(total == 40);
    CHECK(cv.mean_hter <= 0.3);
    CHECK(cross_validate(prepared, 5, 1, 3).mean_hter == cv.mean_hter);

    const auto [tr, va] = split_indices(prepared.size(), 0.5, 2, prepared.groups());
    const std::vector<double> cs{1.0, 32.0}, gs{0.5, 2.0};
    const auto grid = grid_search_method(prepared, tr, va, cs, gs, 2);
    CHECK(grid.cells.size() == 4);
}

TEST_CASE("stage names are attached to errors") {
    const auto data = paired_images(3, 0.5, 6);
    auto src = data.source();
    src.labels.assign(src.labels.size(), Label::natural);
    try {
        train_fcid(Method::hist, src, small_config());
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(!std::string(e.what()).empty());
    }
    auto cfg = small_config();
    cfg.fe.components = 5000;
    try {
        train_fcid(Method::fe, data.source(), cfg);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.stage() == "gmm");
    }
}

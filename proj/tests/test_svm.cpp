#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "fcid/svm.hpp"
#include "oracles.hpp"

using namespace fcid;

namespace {

LabeledFeatures xor_data() {
    LabeledFeatures d;
    d.rows = {{0, 0}, {1, 1}, {0, 1}, {1, 0}};
    d.labels = {Label::natural, Label::natural, Label::fake, Label::fake};
    return d;
}

LabeledFeatures random_dataset(std::mt19937_64& rng, std::size_t n, std::size_t dims) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    LabeledFeatures d;
    for (std::size_t i = 0; i < n; ++i) {
        FeatureRow r(dims);
        for (auto& v : r) v = u(rng);
        d.rows.push_back(r);
        d.labels.push_back(i % 2 == 0 ? Label::fake : Label::natural);
    }
    std::shuffle(d.labels.begin(), d.labels.end(), rng);
    if (std::count(d.labels.begin(), d.labels.end(), Label::fake) == 0) d.labels[0] = Label::fake;
    if (std::count(d.labels.begin(), d.labels.end(), Label::natural) == 0) d.labels[0] = Label::natural;
    return d;
}

std::vector<int> signs(const LabeledFeatures& d) {
    std::vector<int> y;
    for (auto l : d.labels) y.push_back(sign_of(l));
    return y;
}

// Largest violation of the optimality conditions, measured on y_i f(x_i).
double kkt_violation(const std::vector<FeatureRow>& rows, const std::vector<int>& y, const DualSolution& s,
                     double c, double gamma) {
    double worst = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        double f = s.bias;
        for (std::size_t j = 0; j < rows.size(); ++j) f += s.alpha[j] * y[j] * rbf_kernel(rows[i], rows[j], gamma);
        const double margin = y[i] * f - 1.0;
        if (s.alpha[i] <= 0.0) worst = std::max(worst, -margin);
        else if (s.alpha[i] >= c) worst = std::max(worst, margin);
        else worst = std::max(worst, std::abs(margin));
    }
    return worst;
}

}  // namespace

TEST_CASE("rbf kernel") {
    const std::vector<double> x{0.3, -1.0, 2.0};
    CHECK(rbf_kernel(x, x, 0.5) == 1.0);
    const std::vector<double> a{0, 0}, b{1, 1};
    CHECK(rbf_kernel(a, b, 0.5) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
    CHECK_THROWS(rbf_kernel(a, x, 0.5));
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    for (int i = 0; i < 50; ++i) {
        std::vector<double> p{g(rng), g(rng), g(rng)}, q{g(rng), g(rng), g(rng)};
        CHECK(rbf_kernel(p, q, 0.7) == rbf_kernel(q, p, 0.7));
    }
}

TEST_CASE("symmetric pair has zero decision at the midpoint") {
    // Scaling sends the pair to (0,0) and (1,1) and the origin to (0.5,0.5).
    LabeledFeatures d;
    d.rows = {{-1.0, -0.5}, {1.0, 0.5}};
    d.labels = {Label::natural, Label::fake};
    const auto m = train_svm(d, {.c = 1.0, .gamma = 0.5});
    const std::vector<double> mid{0.0, 0.0};
    CHECK(std::abs(m.decision_value(mid)) <= 1e-12);
    CHECK(m.decision_value(d.rows[1]) > 0.0);
    CHECK(m.decision_value(d.rows[0]) < 0.0);
}

TEST_CASE("xor is learnt exactly") {
    const auto d = xor_data();
    const auto fit = fit_svm(d, SvmConfig::hist_defaults());
    for (std::size_t i = 0; i < d.size(); ++i) CHECK(fit.model.classify(d.rows[i]) == d.labels[i]);
    for (std::size_t i = 0; i < d.size(); ++i) CHECK((fit.model.decision_value(d.rows[i]) > 0) == (d.labels[i] == Label::fake));
    CHECK(fit.dual.objective ==
          doctest::Approx(oracle::svm_dual_optimum(fit.scaled_rows, signs(d), 32.0, 0.5)).epsilon(1e-6));
}

TEST_CASE("smo reaches the exhaustive optimum and satisfies kkt") {
    std::mt19937_64 rng(2);
    const double costs[] = {0.25, 1.0, 4.0, 32.0};
    for (int trial = 0; trial < 12; ++trial) {
        const auto d = random_dataset(rng, 3 + trial % 6, 2);
        const auto y = signs(d);
        const double c = costs[trial % 4], gamma = trial % 3 == 0 ? 2.0 : 0.5;
        const auto s = solve_svm_dual(d.rows, y, c, gamma, 1e-3, 10'000'000);
        REQUIRE(s.converged);
        const double best = oracle::svm_dual_optimum(d.rows, y, c, gamma);
        CHECK(std::abs(s.objective - best) <= 1e-4);
        double eq = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            CHECK(s.alpha[i] >= 0.0);
            CHECK(s.alpha[i] <= c);
            eq += s.alpha[i] * y[i];
        }
        CHECK(std::abs(eq) <= 1e-6);
        CHECK(kkt_violation(d.rows, y, s, c, gamma) <= 1e-3 + 1e-12);
    }
}

TEST_CASE("separable toy set is fitted perfectly") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    LabeledFeatures d;
    for (int i = 0; i < 60; ++i) {
        const double x = u(rng), y = u(rng);
        if (std::abs(x + y - 1.0) < 0.1) continue;
        d.rows.push_back({x, y});
        d.labels.push_back(x + y > 1.0 ? Label::fake : Label::natural);
    }
    const auto m = train_svm(d, {.c = 64.0, .gamma = 2.0});
    for (std::size_t i = 0; i < d.size(); ++i) CHECK((m.decision_value(d.rows[i]) > 0) == (d.labels[i] == Label::fake));
}

TEST_CASE("probabilities are monotone and thresholds inclusive") {
    std::mt19937_64 rng(4);
    const auto d = random_dataset(rng, 40, 3);
    const auto m = train_svm(d, SvmConfig::hist_defaults());
    CHECK(m.platt_a < 0.0);
    double prev = -1.0;
    for (double f = -5.0; f <= 5.0; f += 0.01) {
        const double p = m.probability_from_decision(f);
        CHECK(p >= prev);
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
        prev = p;
    }
    CHECK(m.probability_from_decision(-m.platt_b / m.platt_a) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(m.threshold == 0.455);
    CHECK(m.classify_probability(0.455) == Label::fake);
    CHECK(m.classify_probability(0.0) == Label::natural);

    std::vector<double> probs;
    for (const auto& r : d.rows) probs.push_back(m.predict_probability(r));
    std::size_t prev_fake = d.size() + 1;
    for (double t = 0.0; t <= 1.0; t += 0.05) {
        auto copy = m;
        copy.threshold = t;
        std::size_t fakes = 0;
        for (double p : probs) fakes += copy.classify_probability(p) == Label::fake;
        if (t == 0.0) CHECK(fakes == d.size());
        CHECK(fakes <= prev_fake);
        prev_fake = fakes;
    }
}

TEST_CASE("decision function ignores support vector order") {
    std::mt19937_64 rng(5);
    const auto d = random_dataset(rng, 30, 4);
    auto m = train_svm(d, SvmConfig::fe_defaults());
    auto r = m;
    std::reverse(r.support_vectors.begin(), r.support_vectors.end());
    std::reverse(r.coefficients.begin(), r.coefficients.end());
    for (const auto& x : d.rows) CHECK(r.decision_value(x) == doctest::Approx(m.decision_value(x)).epsilon(1e-12));
}

TEST_CASE("affine maps of a feature leave predictions unchanged") {
    std::mt19937_64 rng(6);
    const auto d = random_dataset(rng, 40, 3);
    const auto base = train_svm(d, SvmConfig::hist_defaults());
    auto mapped = d;
    for (auto& r : mapped.rows) r[1] = -3.0 * r[1] + 7.0;
    const auto m = train_svm(mapped, SvmConfig::hist_defaults());
    for (std::size_t i = 0; i < d.size(); ++i) {
        CHECK(m.predict_probability(mapped.rows[i]) ==
              doctest::Approx(base.predict_probability(d.rows[i])).epsilon(1e-6));
        CHECK(m.classify(mapped.rows[i]) == base.classify(d.rows[i]));
    }
}

TEST_CASE("training input errors") {
    LabeledFeatures one;
    one.rows = {{0.0}, {1.0}};
    one.labels = {Label::fake, Label::fake};
    CHECK_THROWS(train_svm(one, {}));
    auto bad = xor_data();
    bad.rows[2][0] = std::nan("");
    CHECK_THROWS(train_svm(bad, {}));
    const auto m = train_svm(xor_data(), {});
    CHECK_THROWS(m.predict_probability(std::vector<double>{1.0}));
}

TEST_CASE("platt cross-fitting still yields a usable model") {
    std::mt19937_64 rng(7);
    const auto d = random_dataset(rng, 50, 2);
    SvmConfig cfg = SvmConfig::fe_defaults();
    cfg.platt_folds = 3;
    const auto a = train_svm(d, cfg, 11);
    const auto b = train_svm(d, cfg, 11);
    CHECK(a.platt_a == b.platt_a);
    CHECK(a.platt_b == b.platt_b);
}

#include "fcid/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "fcid/error.hpp"

namespace fcid {

double ConfusionCounts::fpr() const {
    if (tn + fp == 0) throw Error("undefined rate: no negative (natural) samples");
    return static_cast<double>(fp) / static_cast<double>(tn + fp);
}

double ConfusionCounts::fnr() const {
    if (tp + fn == 0) throw Error("undefined rate: no positive (fake) samples");
    return static_cast<double>(fn) / static_cast<double>(tp + fn);
}

ConfusionCounts confusion(std::span<const Label> truth, std::span<const Label> predicted) {
    if (truth.size() != predicted.size()) throw Error("truth and predictions differ in length");
    ConfusionCounts c;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const bool fake = truth[i] == Label::fake;
        const bool said_fake = predicted[i] == Label::fake;
        if (fake && said_fake) ++c.tp;
        else if (fake) ++c.fn;
        else if (said_fake) ++c.fp;
        else ++c.tn;
    }
    return c;
}

double hter(const ConfusionCounts& counts) { return (counts.fpr() + counts.fnr()) / 2.0; }

namespace {

std::pair<std::size_t, std::size_t> class_sizes(std::span<const Label> labels) {
    std::size_t pos = 0;
    for (Label l : labels) pos += l == Label::fake;
    return {pos, labels.size() - pos};
}

void require_both_classes(std::span<const Label> labels) {
    const auto [pos, neg] = class_sizes(labels);
    if (pos == 0 || neg == 0) throw Error("both classes must be present");
}

// Units of indices that must not be separated, in order of first appearance.
std::vector<std::vector<std::size_t>> group_units(std::size_t n, std::span<const std::int64_t> groups) {
    std::vector<std::vector<std::size_t>> units;
    if (groups.empty()) {
        units.reserve(n);
        for (std::size_t i = 0; i < n; ++i) units.push_back({i});
        return units;
    }
    if (groups.size() != n) throw Error("group ids and sample count differ");
    std::map<std::int64_t, std::size_t> where;
    for (std::size_t i = 0; i < n; ++i) {
        auto [it, inserted] = where.emplace(groups[i], units.size());
        if (inserted) units.emplace_back();
        units[it->second].push_back(i);
    }
    return units;
}

void shuffle_units(std::vector<std::vector<std::size_t>>& units, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (std::size_t i = units.size(); i > 1; --i) {
        std::uniform_int_distribution<std::size_t> pick(0, i - 1);
        std::swap(units[i - 1], units[pick(rng)]);
    }
}

}  // namespace

RocCurve roc_auc(std::span<const double> scores, std::span<const Label> labels) {
    if (scores.size() != labels.size()) throw Error("scores and labels differ in length");
    require_both_classes(labels);
    const auto [pos, neg] = class_sizes(labels);

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    RocCurve roc;
    roc.points.push_back({0.0, 0.0});
    std::size_t tp = 0, fp = 0;
    // Twice the area in units of (pairs), kept integral until the end.
    double area2 = 0.0;
    for (std::size_t k = 0; k < order.size();) {
        const double s = scores[order[k]];
        std::size_t dtp = 0, dfp = 0;
        for (; k < order.size() && scores[order[k]] == s; ++k)
            (labels[order[k]] == Label::fake ? dtp : dfp) += 1;
        area2 += static_cast<double>(dfp) * static_cast<double>(2 * tp + dtp);
        tp += dtp;
        fp += dfp;
        roc.points.push_back({static_cast<double>(fp) / neg, static_cast<double>(tp) / pos});
    }
    roc.auc = area2 / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
    return roc;
}

EvalReport evaluate(std::span<const double> probabilities, std::span<const Label> labels,
                    double threshold) {
    if (probabilities.size() != labels.size()) throw Error("probabilities and labels differ in length");
    std::vector<Label> predicted(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i)
        predicted[i] = probabilities[i] >= threshold ? Label::fake : Label::natural;
    EvalReport r;
    r.counts = confusion(labels, predicted);
    r.fpr = r.counts.fpr();
    r.fnr = r.counts.fnr();
    r.hter = (r.fpr + r.fnr) / 2.0;
    r.roc = roc_auc(probabilities, labels);
    return r;
}

std::vector<std::vector<std::size_t>> k_fold_split(std::size_t n, std::size_t k, std::uint64_t seed,
                                                   std::span<const std::int64_t> groups) {
    if (k < 2) throw Error("fold count must be at least 2");
    if (n < k) throw Error("fewer samples than folds");
    auto units = group_units(n, groups);
    if (units.size() < k) throw Error("fewer independent groups than folds");
    shuffle_units(units, seed);

    std::vector<std::vector<std::size_t>> folds(k);
    for (const auto& u : units) {
        auto smallest = std::min_element(folds.begin(), folds.end(),
                                         [](const auto& a, const auto& b) { return a.size() < b.size(); });
        smallest->insert(smallest->end(), u.begin(), u.end());
    }
    for (auto& f : folds) std::sort(f.begin(), f.end());
    return folds;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t n, double fraction, std::uint64_t seed, std::span<const std::int64_t> groups) {
    if (!(fraction >= 0.0 && fraction <= 1.0)) throw Error("split fraction must lie in [0,1]");
    auto units = group_units(n, groups);
    shuffle_units(units, seed);
    const auto first_units = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(units.size())));
    std::pair<std::vector<std::size_t>, std::vector<std::size_t>> out;
    for (std::size_t u = 0; u < units.size(); ++u) {
        auto& dst = u < first_units ? out.first : out.second;
        dst.insert(dst.end(), units[u].begin(), units[u].end());
    }
    std::sort(out.first.begin(), out.first.end());
    std::sort(out.second.begin(), out.second.end());
    return out;
}

std::vector<double> power_grid(int lo, int hi) {
    std::vector<double> g;
    for (int e = lo; e <= hi; ++e) g.push_back(std::ldexp(1.0, e));
    return g;
}

GridResult grid_search(const LabeledFeatures& train, const LabeledFeatures& validate,
                       std::span<const double> c_grid, std::span<const double> g_grid,
                       const SvmConfig& base, std::uint64_t seed) {
    if (c_grid.empty() || g_grid.empty()) throw Error("grid must not be empty");
    GridResult result;
    bool have_best = false;
    for (double c : c_grid) {
        for (double g : g_grid) {
            GridCell cell{c, g, std::nullopt, {}};
            try {
                SvmConfig cfg = base;
                cfg.c = c;
                cfg.gamma = g;
                const SvmModel model = train_svm(train, cfg, seed);
                std::vector<Label> predicted;
                predicted.reserve(validate.size());
                for (const auto& row : validate.rows) predicted.push_back(model.classify(row));
                cell.hter = hter(confusion(validate.labels, predicted));
            } catch (const std::exception& e) {
                cell.error = e.what();
            }
            if (cell.hter) {
                const bool better = !have_best || *cell.hter < result.best_hter ||
                                    (*cell.hter == result.best_hter &&
                                     (c < result.best_c || (c == result.best_c && g < result.best_gamma)));
                if (better) {
                    have_best = true;
                    result.best_hter = *cell.hter;
                    result.best_c = c;
                    result.best_gamma = g;
                }
            }
            result.cells.push_back(std::move(cell));
        }
    }
    if (!have_best) throw Error("every grid cell failed: " + result.cells.front().error);
    return result;
}

GridResult grid_search(const LabeledFeatures& data, std::span<const double> c_grid,
                       std::span<const double> g_grid, const SvmConfig& base, std::uint64_t seed) {
    const auto [train_idx, val_idx] = split_indices(data.size(), 0.5, seed, data.groups);
    return grid_search(data.subset(train_idx), data.subset(val_idx), c_grid, g_grid, base, seed);
}

ThresholdSweep threshold_sweep(std::span<const double> probabilities, std::span<const Label> labels) {
    if (probabilities.size() != labels.size()) throw Error("probabilities and labels differ in length");
    require_both_classes(labels);
    ThresholdSweep sweep;
    sweep.curve.reserve(101);
    for (int step = 0; step <= 100; ++step) {
        const double t = step / 100.0;
        ConfusionCounts c;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            const bool said_fake = probabilities[i] >= t;
            if (labels[i] == Label::fake) (said_fake ? c.tp : c.fn) += 1;
            else (said_fake ? c.fp : c.tn) += 1;
        }
        const double h = hter(c);
        sweep.curve.push_back({t, h});
        if (step == 0 || h < sweep.best_hter) {
            sweep.best_hter = h;
            sweep.best_threshold = t;
        }
    }
    return sweep;
}

double average_thresholds(std::span<const double> thresholds) {
    if (thresholds.empty()) throw Error("no thresholds to average");
    bool on_grid = true;
    long steps = 0;
    double sum = 0.0;
    for (double t : thresholds) {
        const double s = t * 100.0;
        on_grid = on_grid && std::abs(s - std::round(s)) < 1e-9;
        steps += std::lround(s);
        sum += t;
    }
    const auto n = static_cast<double>(thresholds.size());
    return on_grid ? static_cast<double>(steps) / (100.0 * n) : sum / n;
}

}  // namespace fcid

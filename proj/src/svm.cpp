#include "fcid/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <list>
#include <numeric>
#include <random>
#include <unordered_map>

#include "fcid/error.hpp"

namespace fcid {

LabeledFeatures LabeledFeatures::subset(std::span<const std::size_t> indices) const {
    LabeledFeatures out;
    out.rows.reserve(indices.size());
    out.labels.reserve(indices.size());
    for (std::size_t i : indices) {
        out.rows.push_back(rows.at(i));
        out.labels.push_back(labels.at(i));
        if (!groups.empty()) out.groups.push_back(groups.at(i));
    }
    return out;
}

double rbf_kernel(std::span<const double> x, std::span<const double> y, double gamma) {
    if (x.size() != y.size()) throw Error("feature dimension mismatch");
    double d2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) d2 += (x[i] - y[i]) * (x[i] - y[i]);
    return std::exp(-gamma * d2);
}

MinMaxScaling MinMaxScaling::fit(const std::vector<FeatureRow>& rows) {
    MinMaxScaling s;
    if (rows.empty()) return s;
    const std::size_t d = rows.front().size();
    s.lo.assign(d, std::numeric_limits<double>::infinity());
    std::vector<double> hi(d, -std::numeric_limits<double>::infinity());
    for (const auto& r : rows) {
        for (std::size_t j = 0; j < d; ++j) {
            s.lo[j] = std::min(s.lo[j], r[j]);
            hi[j] = std::max(hi[j], r[j]);
        }
    }
    s.span.resize(d);
    for (std::size_t j = 0; j < d; ++j) s.span[j] = hi[j] - s.lo[j];
    return s;
}

FeatureRow MinMaxScaling::apply(std::span<const double> x) const {
    if (x.size() != lo.size()) throw Error("feature dimension mismatch");
    FeatureRow out(x.size());
    for (std::size_t j = 0; j < x.size(); ++j)
        out[j] = span[j] > 0.0 ? (x[j] - lo[j]) / span[j] : 0.0;
    return out;
}

double SvmModel::decision_value(std::span<const double> x) const {
    const FeatureRow z = scaling.apply(x);
    double f = bias;
    for (std::size_t i = 0; i < support_vectors.size(); ++i)
        f += coefficients[i] * rbf_kernel(support_vectors[i], z, gamma);
    return f;
}

double SvmModel::probability_from_decision(double f) const noexcept {
    // Evaluated in the branch that cannot overflow.
    const double t = platt_a * f + platt_b;
    return t >= 0.0 ? std::exp(-t) / (1.0 + std::exp(-t)) : 1.0 / (1.0 + std::exp(t));
}

double SvmModel::predict_probability(std::span<const double> x) const {
    return probability_from_decision(decision_value(x));
}

Label SvmModel::classify(std::span<const double> x) const {
    return classify_probability(predict_probability(x));
}

namespace {

// Kernel rows Q_i(j) = y_i y_j K(x_i, x_j): a full matrix for small problems,
// otherwise an LRU cache of rows.
class KernelMatrix {
public:
    KernelMatrix(const std::vector<FeatureRow>& rows, std::span<const int> y, double gamma)
        : rows_(rows), y_(y), gamma_(gamma), n_(rows.size()) {
        if (n_ <= kFullLimit) {
            full_.resize(n_ * n_);
            for (std::size_t i = 0; i < n_; ++i) {
                for (std::size_t j = i; j < n_; ++j) {
                    const double q = y_[i] * y_[j] * rbf_kernel(rows_[i], rows_[j], gamma_);
                    full_[i * n_ + j] = q;
                    full_[j * n_ + i] = q;
                }
            }
        } else {
            capacity_ = std::max<std::size_t>(2, kCacheBytes / (n_ * sizeof(double)));
        }
    }

    const double* row(std::size_t i) {
        if (!full_.empty()) return full_.data() + i * n_;
        if (auto it = cache_.find(i); it != cache_.end()) {
            lru_.splice(lru_.begin(), lru_, it->second.second);
            return it->second.first.data();
        }
        if (cache_.size() >= capacity_) {
            cache_.erase(lru_.back());
            lru_.pop_back();
        }
        std::vector<double> r(n_);
        for (std::size_t j = 0; j < n_; ++j) r[j] = y_[i] * y_[j] * rbf_kernel(rows_[i], rows_[j], gamma_);
        lru_.push_front(i);
        auto [it, _] = cache_.emplace(i, std::make_pair(std::move(r), lru_.begin()));
        return it->second.first.data();
    }

private:
    static constexpr std::size_t kFullLimit = 4096;
    static constexpr std::size_t kCacheBytes = std::size_t{256} << 20;

    const std::vector<FeatureRow>& rows_;
    std::span<const int> y_;
    double gamma_;
    std::size_t n_;
    std::vector<double> full_;
    std::size_t capacity_ = 0;
    std::list<std::size_t> lru_;
    std::unordered_map<std::size_t, std::pair<std::vector<double>, std::list<std::size_t>::iterator>> cache_;
};

void check_training_input(const LabeledFeatures& data) {
    if (data.rows.size() != data.labels.size()) throw Error("rows and labels differ in length");
    if (data.rows.empty()) throw Error("no training rows");
    const std::size_t d = data.rows.front().size();
    bool has_fake = false, has_natural = false;
    for (std::size_t i = 0; i < data.rows.size(); ++i) {
        if (data.rows[i].size() != d) throw Error("feature dimension mismatch");
        for (double v : data.rows[i])
            if (!std::isfinite(v)) throw Error("non-finite feature value");
        (data.labels[i] == Label::fake ? has_fake : has_natural) = true;
    }
    if (!has_fake || !has_natural) throw Error("training data must contain both classes");
}

std::vector<int> signs_of(std::span<const Label> labels) {
    std::vector<int> y(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) y[i] = sign_of(labels[i]);
    return y;
}

// Decision values of scaled rows under a dual solution over `train_rows`.
std::vector<double> decision_values(const std::vector<FeatureRow>& train_rows, std::span<const int> y,
                                    const DualSolution& dual, double gamma,
                                    const std::vector<FeatureRow>& queries) {
    std::vector<double> f(queries.size(), dual.bias);
    for (std::size_t q = 0; q < queries.size(); ++q)
        for (std::size_t i = 0; i < train_rows.size(); ++i)
            if (dual.alpha[i] > 0.0) f[q] += dual.alpha[i] * y[i] * rbf_kernel(train_rows[i], queries[q], gamma);
    return f;
}

}  // namespace

DualSolution solve_svm_dual(const std::vector<FeatureRow>& rows, std::span<const int> y, double c,
                            double gamma, double tolerance, long max_iterations) {
    const std::size_t n = rows.size();
    if (y.size() != n) throw Error("rows and labels differ in length");
    if (!(c > 0.0)) throw Error("SVM cost c must be positive");
    if (!(gamma > 0.0)) throw Error("RBF gamma must be positive");
    constexpr double kTau = 1e-12;

    KernelMatrix q(rows, y, gamma);
    std::vector<double> diag(n);
    for (std::size_t i = 0; i < n; ++i) diag[i] = q.row(i)[i];

    DualSolution sol;
    sol.alpha.assign(n, 0.0);
    // Gradient of the minimisation form 1/2 a'Qa - e'a.
    std::vector<double> grad(n, -1.0);
    auto& alpha = sol.alpha;
    auto in_up = [&](std::size_t t) { return (y[t] > 0 && alpha[t] < c) || (y[t] < 0 && alpha[t] > 0.0); };
    auto in_low = [&](std::size_t t) { return (y[t] > 0 && alpha[t] > 0.0) || (y[t] < 0 && alpha[t] < c); };

    while (sol.iterations < max_iterations) {
        // Maximal violating pair.
        std::ptrdiff_t i = -1, j = -1;
        double gmax = -std::numeric_limits<double>::infinity();
        double gmin = std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t < n; ++t) {
            const double v = -y[t] * grad[t];
            if (in_up(t) && v > gmax) {
                gmax = v;
                i = static_cast<std::ptrdiff_t>(t);
            }
            if (in_low(t) && v < gmin) {
                gmin = v;
                j = static_cast<std::ptrdiff_t>(t);
            }
        }
        if (i < 0 || j < 0 || gmax - gmin < tolerance) {
            sol.converged = true;
            break;
        }
        ++sol.iterations;

        const double* qi = q.row(static_cast<std::size_t>(i));
        const double* qj = q.row(static_cast<std::size_t>(j));
        const double old_ai = alpha[i], old_aj = alpha[j];
        if (y[i] != y[j]) {
            double quad = diag[i] + diag[j] + 2.0 * qi[j];
            if (quad <= 0.0) quad = kTau;
            const double delta = (-grad[i] - grad[j]) / quad;
            const double diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if (diff > 0.0) {
                if (alpha[j] < 0.0) { alpha[j] = 0.0; alpha[i] = diff; }
            } else {
                if (alpha[i] < 0.0) { alpha[i] = 0.0; alpha[j] = -diff; }
            }
            if (diff > 0.0) {
                if (alpha[i] > c) { alpha[i] = c; alpha[j] = c - diff; }
            } else {
                if (alpha[j] > c) { alpha[j] = c; alpha[i] = c + diff; }
            }
        } else {
            double quad = diag[i] + diag[j] - 2.0 * qi[j];
            if (quad <= 0.0) quad = kTau;
            const double delta = (grad[i] - grad[j]) / quad;
            const double sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if (sum > c) {
                if (alpha[i] > c) { alpha[i] = c; alpha[j] = sum - c; }
            } else {
                if (alpha[j] < 0.0) { alpha[j] = 0.0; alpha[i] = sum; }
            }
            if (sum > c) {
                if (alpha[j] > c) { alpha[j] = c; alpha[i] = sum - c; }
            } else {
                if (alpha[i] < 0.0) { alpha[i] = 0.0; alpha[j] = sum; }
            }
        }

        const double dai = alpha[i] - old_ai, daj = alpha[j] - old_aj;
        for (std::size_t t = 0; t < n; ++t) grad[t] += qi[t] * dai + qj[t] * daj;
    }

    // Bias: mean over free vectors, else the middle of the feasible interval.
    double ub = std::numeric_limits<double>::infinity(), lb = -ub, free_sum = 0.0;
    std::size_t free_count = 0;
    for (std::size_t t = 0; t < n; ++t) {
        const double yg = y[t] * grad[t];
        if (alpha[t] >= c) {
            if (y[t] < 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
        } else if (alpha[t] <= 0.0) {
            if (y[t] > 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
        } else {
            ++free_count;
            free_sum += yg;
        }
    }
    const double rho = free_count > 0 ? free_sum / free_count : (ub + lb) / 2.0;
    sol.bias = -rho;

    double obj = 0.0;
    for (std::size_t t = 0; t < n; ++t) obj += alpha[t] * (grad[t] - 1.0);
    sol.objective = -obj / 2.0;
    return sol;
}

PlattParameters fit_platt(std::span<const double> f, std::span<const int> labels) {
    // Newton's method with backtracking on the regularized targets of Platt,
    // in the numerically safe formulation of Lin, Lin and Weng.
    const std::size_t n = f.size();
    if (labels.size() != n) throw Error("decision values and labels differ in length");
    double prior1 = 0.0, prior0 = 0.0;
    for (int y : labels) (y > 0 ? prior1 : prior0) += 1.0;

    constexpr int kMaxIter = 100;
    constexpr double kMinStep = 1e-10, kSigma = 1e-12, kEps = 1e-5;
    const double hi_target = (prior1 + 1.0) / (prior1 + 2.0);
    const double lo_target = 1.0 / (prior0 + 2.0);
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = labels[i] > 0 ? hi_target : lo_target;

    double a = 0.0, b = std::log((prior0 + 1.0) / (prior1 + 1.0));
    auto objective = [&](double aa, double bb) {
        double fv = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double fapb = f[i] * aa + bb;
            fv += fapb >= 0 ? t[i] * fapb + std::log1p(std::exp(-fapb))
                            : (t[i] - 1.0) * fapb + std::log1p(std::exp(fapb));
        }
        return fv;
    };
    double fval = objective(a, b);

    for (int iter = 0; iter < kMaxIter; ++iter) {
        double h11 = kSigma, h22 = kSigma, h21 = 0.0, g1 = 0.0, g2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double fapb = f[i] * a + b;
            double p, q;
            if (fapb >= 0) {
                p = std::exp(-fapb) / (1.0 + std::exp(-fapb));
                q = 1.0 / (1.0 + std::exp(-fapb));
            } else {
                p = 1.0 / (1.0 + std::exp(fapb));
                q = std::exp(fapb) / (1.0 + std::exp(fapb));
            }
            const double d2 = p * q;
            h11 += f[i] * f[i] * d2;
            h22 += d2;
            h21 += f[i] * d2;
            const double d1 = t[i] - p;
            g1 += f[i] * d1;
            g2 += d1;
        }
        if (std::abs(g1) < kEps && std::abs(g2) < kEps) break;

        const double det = h11 * h22 - h21 * h21;
        const double da = -(h22 * g1 - h21 * g2) / det;
        const double db = -(-h21 * g1 + h11 * g2) / det;
        const double gd = g1 * da + g2 * db;

        double step = 1.0;
        while (step >= kMinStep) {
            const double na = a + step * da, nb = b + step * db;
            const double nf = objective(na, nb);
            if (nf < fval + 1e-4 * step * gd) {
                a = na;
                b = nb;
                fval = nf;
                break;
            }
            step /= 2.0;
        }
        if (step < kMinStep) break;
    }
    return {a, b};
}

SvmFit fit_svm(const LabeledFeatures& data, const SvmConfig& cfg, std::uint64_t seed) {
    check_training_input(data);
    if (!(cfg.c > 0.0)) throw Error("SVM cost c must be positive");
    if (!(cfg.gamma > 0.0)) throw Error("RBF gamma must be positive");
    if (!(cfg.threshold >= 0.0 && cfg.threshold <= 1.0)) throw Error("threshold must lie in [0,1]");

    SvmFit fit;
    fit.model.scaling = MinMaxScaling::fit(data.rows);
    fit.scaled_rows.reserve(data.rows.size());
    for (const auto& r : data.rows) fit.scaled_rows.push_back(fit.model.scaling.apply(r));
    const std::vector<int> y = signs_of(data.labels);

    fit.dual = solve_svm_dual(fit.scaled_rows, y, cfg.c, cfg.gamma, cfg.tolerance, cfg.max_iterations);

    SvmModel& m = fit.model;
    m.gamma = cfg.gamma;
    m.bias = fit.dual.bias;
    m.threshold = cfg.threshold;
    for (std::size_t i = 0; i < fit.scaled_rows.size(); ++i) {
        if (fit.dual.alpha[i] > 0.0) {
            m.support_vectors.push_back(fit.scaled_rows[i]);
            m.coefficients.push_back(fit.dual.alpha[i] * y[i]);
        }
    }

    std::vector<double> platt_f;
    std::vector<int> platt_y;
    if (cfg.platt_folds < 2) {
        platt_f = decision_values(fit.scaled_rows, y, fit.dual, cfg.gamma, fit.scaled_rows);
        platt_y = y;
    } else {
        // Out-of-fold decision values. Folds reuse the full-data scaling so
        // that every decision value lives on the same feature scale.
        const std::size_t n = fit.scaled_rows.size();
        const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(cfg.platt_folds), n);
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        std::mt19937_64 rng(seed);
        for (std::size_t i = n; i > 1; --i) {
            std::uniform_int_distribution<std::size_t> pick(0, i - 1);
            std::swap(perm[i - 1], perm[pick(rng)]);
        }
        platt_f.assign(n, 0.0);
        for (std::size_t fold = 0; fold < k; ++fold) {
            std::vector<FeatureRow> tr, te;
            std::vector<int> ytr;
            std::vector<std::size_t> te_idx;
            for (std::size_t p = 0; p < n; ++p) {
                const std::size_t i = perm[p];
                if (p * k / n == fold) {
                    te.push_back(fit.scaled_rows[i]);
                    te_idx.push_back(i);
                } else {
                    tr.push_back(fit.scaled_rows[i]);
                    ytr.push_back(y[i]);
                }
            }
            const bool both = std::find(ytr.begin(), ytr.end(), 1) != ytr.end() &&
                              std::find(ytr.begin(), ytr.end(), -1) != ytr.end();
            std::vector<double> fv;
            if (both) {
                const auto d = solve_svm_dual(tr, ytr, cfg.c, cfg.gamma, cfg.tolerance, cfg.max_iterations);
                fv = decision_values(tr, ytr, d, cfg.gamma, te);
            } else {
                fv.assign(te.size(), ytr.empty() ? 0.0 : static_cast<double>(ytr.front()));
            }
            for (std::size_t q = 0; q < te_idx.size(); ++q) platt_f[te_idx[q]] = fv[q];
        }
        platt_y = y;
    }
    const PlattParameters p = fit_platt(platt_f, platt_y);
    m.platt_a = p.a;
    m.platt_b = p.b;
    return fit;
}

SvmModel train_svm(const LabeledFeatures& data, const SvmConfig& cfg, std::uint64_t seed) {
    return fit_svm(data, cfg, seed).model;
}

}  // namespace fcid

#include "fcid/histogram.hpp"

#include <cmath>
#include <ostream>
#include <string>

#include "fcid/error.hpp"

namespace fcid {

std::string_view channel_name(Channel c) noexcept {
    switch (c) {
        case Channel::hue: return "hue";
        case Channel::saturation: return "saturation";
        case Channel::dark: return "dark";
        case Channel::bright: return "bright";
    }
    return "?";
}

ValueRange channel_range(Channel c) noexcept {
    if (c == Channel::dark || c == Channel::bright) return {0.0, 255.0};
    return {0.0, 1.0};
}

int bin_index(double v, ValueRange range, int k) noexcept {
    const double t = (v - range.lo) / (range.hi - range.lo) * k;
    if (!(t > 0.0)) return 0;
    if (t >= k) return k - 1;
    return static_cast<int>(t);
}

namespace {

void check_bins(int k) {
    if (k < 2) throw Error("bin count must be at least 2");
}

const Plane& plane_of(const ChannelPlanes& planes, Channel c) {
    switch (c) {
        case Channel::hue: return planes.hue;
        case Channel::saturation: return planes.saturation;
        case Channel::dark: return planes.dark;
        case Channel::bright: return planes.bright;
    }
    return planes.hue;
}

std::vector<std::uint64_t> counts_in_range(const Plane& plane, ValueRange range, int k) {
    check_bins(k);
    if (plane.empty()) throw Error("empty input plane");
    std::vector<std::uint64_t> counts(static_cast<std::size_t>(k), 0);
    for (double v : plane.values) ++counts[static_cast<std::size_t>(bin_index(v, range, k))];
    return counts;
}

Histogram normalize(Channel c, ValueRange range, const std::vector<std::uint64_t>& counts,
                    std::uint64_t total) {
    Histogram h{c, range, std::vector<double>(counts.size(), 0.0)};
    if (total == 0) return h;
    const double inv = 1.0 / static_cast<double>(total);
    for (std::size_t i = 0; i < counts.size(); ++i) h.bins[i] = static_cast<double>(counts[i]) * inv;
    return h;
}

}  // namespace

std::vector<std::uint64_t> histogram_counts(const Plane& plane, int k) {
    return counts_in_range(plane, {plane.lo, plane.hi}, k);
}

Histogram normalized_histogram(const Plane& plane, int k, Channel channel) {
    const auto counts = histogram_counts(plane, k);
    return normalize(channel, {plane.lo, plane.hi}, counts, plane.size());
}

Histogram ImageHistograms::normalized(Channel c) const {
    return normalize(c, channel_range(c), counts[static_cast<int>(c)], pixels);
}

ImageHistograms image_histograms(const ChannelPlanes& planes, const HistConfig& cfg) {
    ImageHistograms out;
    for (Channel c : kAllChannels)
        out.counts[static_cast<int>(c)] =
            counts_in_range(plane_of(planes, c), channel_range(c), cfg.bins_for(c));
    out.pixels = planes.size();
    return out;
}

ClassDistributions class_distributions(std::span<const ImageHistograms> images,
                                       std::span<const Label> labels, const HistConfig& cfg) {
    if (images.size() != labels.size()) throw Error("images and labels differ in length");

    std::array<std::array<std::vector<std::uint64_t>, 4>, 2> pooled;
    std::array<std::array<std::vector<double>, 4>, 2> averaged;
    std::array<std::uint64_t, 2> pixels{0, 0};
    std::array<std::size_t, 2> images_per_class{0, 0};
    for (int cls = 0; cls < 2; ++cls) {
        for (Channel c : kAllChannels) {
            const auto k = static_cast<std::size_t>(cfg.bins_for(c));
            check_bins(cfg.bins_for(c));
            pooled[cls][static_cast<int>(c)].assign(k, 0);
            averaged[cls][static_cast<int>(c)].assign(k, 0.0);
        }
    }

    for (std::size_t i = 0; i < images.size(); ++i) {
        const int cls = labels[i] == Label::fake ? 1 : 0;
        const ImageHistograms& img = images[i];
        ++images_per_class[cls];
        pixels[cls] += img.pixels;
        for (Channel c : kAllChannels) {
            const int ci = static_cast<int>(c);
            if (img.counts[ci].size() != pooled[cls][ci].size())
                throw Error("image histogram bin count does not match configuration");
            const double inv = 1.0 / static_cast<double>(img.pixels);
            for (std::size_t b = 0; b < img.counts[ci].size(); ++b) {
                pooled[cls][ci][b] += img.counts[ci][b];
                averaged[cls][ci][b] += static_cast<double>(img.counts[ci][b]) * inv;
            }
        }
    }

    ClassDistributions out;
    for (int cls = 0; cls < 2; ++cls) {
        if (images_per_class[cls] == 0) throw Error("class has no images");
        auto& target = cls == 0 ? out.natural : out.fake;
        for (Channel c : kAllChannels) {
            const int ci = static_cast<int>(c);
            if (cfg.pooling == Pooling::pooled) {
                target[ci] = normalize(c, channel_range(c), pooled[cls][ci], pixels[cls]);
            } else {
                Histogram h{c, channel_range(c), averaged[cls][ci]};
                for (double& v : h.bins) v /= static_cast<double>(images_per_class[cls]);
                target[ci] = std::move(h);
            }
        }
    }
    return out;
}

ClassDistributions class_distributions(std::span<const ChannelPlanes> planes,
                                       std::span<const Label> labels, const HistConfig& cfg) {
    std::vector<ImageHistograms> hists;
    hists.reserve(planes.size());
    for (const auto& p : planes) hists.push_back(image_histograms(p, cfg));
    return class_distributions(hists, labels, cfg);
}

int most_distinctive_bin(const Histogram& natural, const Histogram& fake) {
    if (natural.size() != fake.size()) throw Error("histograms differ in bin count");
    if (natural.range.lo != fake.range.lo || natural.range.hi != fake.range.hi)
        throw Error("histograms differ in range");
    int best = 0;
    double best_diff = -1.0;
    for (std::size_t i = 0; i < natural.size(); ++i) {
        const double d = std::abs(natural.bins[i] - fake.bins[i]);
        if (d > best_diff) {
            best_diff = d;
            best = static_cast<int>(i);
        }
    }
    return best;
}

DistinctiveBins distinctive_bins(const ClassDistributions& dists) {
    DistinctiveBins out;
    for (Channel c : kAllChannels) {
        const int ci = static_cast<int>(c);
        out.index[ci] = most_distinctive_bin(dists.natural[ci], dists.fake[ci]);
    }
    return out;
}

double total_variation(std::span<const double> bins) {
    double tv = 0.0;
    for (std::size_t l = 1; l < bins.size(); ++l) tv += std::abs(bins[l] - bins[l - 1]);
    return tv;
}

double total_variation(const Histogram& hist) {
    check_bins(static_cast<int>(hist.size()));
    return total_variation(std::span<const double>(hist.bins));
}

HistFeature hist_feature(const ImageHistograms& image, const DistinctiveBins& bins) {
    HistFeature f{};
    for (Channel c : kAllChannels) {
        const int ci = static_cast<int>(c);
        const Histogram h = image.normalized(c);
        if (bins.index[ci] < 0 || static_cast<std::size_t>(bins.index[ci]) >= h.size())
            throw Error("distinctive bin index out of range");
        f[2 * ci] = h.bins[static_cast<std::size_t>(bins.index[ci])];
        f[2 * ci + 1] = total_variation(h);
    }
    return f;
}

HistFeature hist_feature(const ChannelPlanes& planes, const DistinctiveBins& bins,
                         const HistConfig& cfg) {
    return hist_feature(image_histograms(planes, cfg), bins);
}

void write_histogram_csv(std::ostream& out, const ClassDistributions& dists) {
    out << "channel,bin_index,bin_center,natural_mass,fake_mass,abs_diff\n";
    const auto precision = out.precision(17);
    for (Channel c : kAllChannels) {
        const int ci = static_cast<int>(c);
        const Histogram& n = dists.natural[ci];
        const Histogram& f = dists.fake[ci];
        if (n.size() != f.size()) throw Error("histograms differ in bin count");
        const double width = (n.range.hi - n.range.lo) / static_cast<double>(n.size());
        for (std::size_t b = 0; b < n.size(); ++b) {
            out << channel_name(c) << ',' << b << ',' << n.range.lo + (b + 0.5) * width << ','
                << n.bins[b] << ',' << f.bins[b] << ',' << std::abs(n.bins[b] - f.bins[b]) << '\n';
        }
    }
    out.precision(precision);
}

}  // namespace fcid

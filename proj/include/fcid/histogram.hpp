#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "fcid/channels.hpp"
#include "fcid/labels.hpp"

namespace fcid {

enum class Channel { hue = 0, saturation = 1, dark = 2, bright = 3 };

inline constexpr std::array<Channel, 4> kAllChannels{Channel::hue, Channel::saturation,
                                                     Channel::dark, Channel::bright};

std::string_view channel_name(Channel c) noexcept;

struct ValueRange {
    double lo = 0.0;
    double hi = 1.0;
};

/// Range binned for each channel: hue [0,1), saturation [0,1], dark/bright [0,255].
ValueRange channel_range(Channel c) noexcept;

struct Histogram {
    Channel channel = Channel::hue;
    ValueRange range;
    std::vector<double> bins;

    std::size_t size() const noexcept { return bins.size(); }
    double operator[](std::size_t i) const { return bins[i]; }
};

/// How class-level distributions combine images.
enum class Pooling {
    pooled,   // histogram of all pixels of the class
    average,  // mean of per-image normalized histograms
};

struct HistConfig {
    /// Bin counts for hue, saturation, dark, bright.
    std::array<int, 4> bins{200, 200, 200, 200};
    Pooling pooling = Pooling::pooled;

    int bins_for(Channel c) const noexcept { return bins[static_cast<int>(c)]; }
};

/// Raw per-channel bin counts of one image, kept integral so that pooling is exact.
struct ImageHistograms {
    std::array<std::vector<std::uint64_t>, 4> counts;
    std::uint64_t pixels = 0;

    Histogram normalized(Channel c) const;
};

struct ClassDistributions {
    std::array<Histogram, 4> natural;
    std::array<Histogram, 4> fake;

    const Histogram& of(Label label, Channel c) const {
        return (label == Label::natural ? natural : fake)[static_cast<int>(c)];
    }
};

/// Most distinctive bin per channel, indexed by Channel.
struct DistinctiveBins {
    std::array<int, 4> index{0, 0, 0, 0};

    int operator[](Channel c) const noexcept { return index[static_cast<int>(c)]; }
};

/// [F_h(1), F_h(2), F_s(1), F_s(2), F_dc(1), F_dc(2), F_bc(1), F_bc(2)]
using HistFeature = std::array<double, 8>;

/// Bin index of v in range over k bins; v == hi lands in the last bin.
int bin_index(double v, ValueRange range, int k) noexcept;

std::vector<std::uint64_t> histogram_counts(const Plane& plane, int k);

Histogram normalized_histogram(const Plane& plane, int k, Channel channel = Channel::hue);

ImageHistograms image_histograms(const ChannelPlanes& planes, const HistConfig& cfg);

ClassDistributions class_distributions(std::span<const ImageHistograms> images,
                                       std::span<const Label> labels, const HistConfig& cfg);

ClassDistributions class_distributions(std::span<const ChannelPlanes> planes,
                                       std::span<const Label> labels, const HistConfig& cfg);

/// argmax |n(x) - f(x)|, lowest index on ties.
int most_distinctive_bin(const Histogram& natural, const Histogram& fake);

DistinctiveBins distinctive_bins(const ClassDistributions& dists);

/// Sum of absolute first differences.
double total_variation(const Histogram& hist);
double total_variation(std::span<const double> bins);

HistFeature hist_feature(const ImageHistograms& image, const DistinctiveBins& bins);
HistFeature hist_feature(const ChannelPlanes& planes, const DistinctiveBins& bins,
                         const HistConfig& cfg);

/// CSV rows: channel,bin_index,bin_center,natural_mass,fake_mass,abs_diff
void write_histogram_csv(std::ostream& out, const ClassDistributions& dists);

}  // namespace fcid

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "fcid/labels.hpp"

namespace fcid {

/// Role of an entry in a train/test experiment. Unassigned entries may be
/// used by either stage.
enum class Split { unassigned, train, test };

struct ManifestEntry {
    std::string path;  // as written in the manifest
    Label label = Label::natural;
    std::string pair_id;
    Split split = Split::unassigned;
    std::size_t line = 0;
};

struct DatasetManifest {
    std::vector<ManifestEntry> entries;
    /// Directory relative paths are resolved against.
    std::filesystem::path base_dir;
    /// Entries whose image file does not exist: "line N: path".
    std::vector<std::string> missing;

    std::size_t size() const noexcept { return entries.size(); }
    std::filesystem::path resolve(const ManifestEntry& e) const;
    bool has_splits() const noexcept;

    /// Entries usable for the given stage: `train` keeps unassigned+train,
    /// `test` keeps unassigned+test.
    DatasetManifest select(Split stage) const;
    std::size_t count(Label label) const noexcept;
    /// Group id per entry: entries sharing a pair id share a group.
    std::vector<std::int64_t> groups() const;
};

/// CSV with header `path,label,pair_id` and an optional `split` column.
DatasetManifest parse_manifest(std::istream& in, const std::filesystem::path& base_dir = {});
DatasetManifest load_manifest(const std::filesystem::path& path);

void write_manifest(std::ostream& out, const DatasetManifest& manifest);
void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

}  // namespace fcid

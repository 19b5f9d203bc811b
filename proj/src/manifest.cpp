#include "fcid/manifest.hpp"

#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>

#include "fcid/error.hpp"

namespace fcid {
namespace {

std::string_view split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::test: return "test";
        default: return "";
    }
}

Split parse_split(const std::string& s, std::size_t line) {
    if (s.empty()) return Split::unassigned;
    if (s == "train") return Split::train;
    if (s == "test") return Split::test;
    throw Error("line " + std::to_string(line) + ": invalid split '" + s + "'");
}

// One CSV record; double quotes may wrap fields containing commas.
std::vector<std::string> parse_record(const std::string& line, std::size_t line_no) {
    std::vector<std::string> fields(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                fields.back() += '"';
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                fields.back() += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            fields.emplace_back();
        } else {
            fields.back() += ch;
        }
    }
    if (quoted) throw Error("line " + std::to_string(line_no) + ": unterminated quote");
    return fields;
}

std::string quote(const std::string& field) {
    if (field.find_first_of(",\"") == std::string::npos) return field;
    std::string out = "\"";
    for (char ch : field) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + '"';
}

}  // namespace

std::filesystem::path DatasetManifest::resolve(const ManifestEntry& e) const {
    const std::filesystem::path p(e.path);
    return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
}

bool DatasetManifest::has_splits() const noexcept {
    for (const auto& e : entries)
        if (e.split != Split::unassigned) return true;
    return false;
}

DatasetManifest DatasetManifest::select(Split stage) const {
    DatasetManifest out;
    out.base_dir = base_dir;
    for (const auto& e : entries)
        if (e.split == Split::unassigned || e.split == stage) out.entries.push_back(e);
    for (const auto& m : missing) out.missing.push_back(m);
    return out;
}

std::size_t DatasetManifest::count(Label label) const noexcept {
    std::size_t n = 0;
    for (const auto& e : entries) n += e.label == label;
    return n;
}

std::vector<std::int64_t> DatasetManifest::groups() const {
    std::map<std::string, std::int64_t> ids;
    std::vector<std::int64_t> out;
    out.reserve(entries.size());
    std::int64_t next = 0;
    for (const auto& e : entries) {
        if (e.pair_id.empty()) {
            out.push_back(next++);
        } else {
            auto [it, inserted] = ids.emplace(e.pair_id, next);
            if (inserted) ++next;
            out.push_back(it->second);
        }
    }
    return out;
}

DatasetManifest parse_manifest(std::istream& in, const std::filesystem::path& base_dir) {
    DatasetManifest m;
    m.base_dir = base_dir;
    std::string line;
    std::size_t line_no = 0;
    int col_path = -1, col_label = -1, col_pair = -1, col_split = -1;
    std::size_t columns = 0;

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = parse_record(line, line_no);
        if (col_path < 0) {
            columns = fields.size();
            for (std::size_t i = 0; i < fields.size(); ++i) {
                const auto& f = fields[i];
                int* slot = f == "path" ? &col_path : f == "label" ? &col_label
                          : f == "pair_id" ? &col_pair : f == "split" ? &col_split : nullptr;
                if (!slot) throw Error("line " + std::to_string(line_no) + ": unknown column '" + f + "'");
                *slot = static_cast<int>(i);
            }
            if (col_path < 0 || col_label < 0)
                throw Error("line " + std::to_string(line_no) + ": header must name path and label columns");
            continue;
        }
        if (fields.size() != columns)
            throw Error("line " + std::to_string(line_no) + ": malformed line (expected " +
                        std::to_string(columns) + " fields, got " + std::to_string(fields.size()) + ")");
        ManifestEntry e;
        e.line = line_no;
        e.path = fields[col_path];
        if (e.path.empty()) throw Error("line " + std::to_string(line_no) + ": empty path");
        try {
            e.label = parse_label(fields[col_label]);
        } catch (const Error& err) {
            throw Error("line " + std::to_string(line_no) + ": " + err.what());
        }
        if (col_pair >= 0) e.pair_id = fields[col_pair];
        if (col_split >= 0) e.split = parse_split(fields[col_split], line_no);
        m.entries.push_back(std::move(e));
    }
    if (m.entries.empty()) throw Error("empty manifest");

    std::set<std::string> seen;
    for (const auto& e : m.entries)
        if (!seen.insert(e.path).second)
            throw Error("line " + std::to_string(e.line) + ": duplicate path '" + e.path + "'");

    std::map<std::string, std::pair<int, int>> pairs;
    for (const auto& e : m.entries) {
        if (e.pair_id.empty()) continue;
        auto& [nat, fake] = pairs[e.pair_id];
        ++(e.label == Label::natural ? nat : fake);
    }
    for (const auto& [id, counts] : pairs)
        if (counts.first != 1 || counts.second != 1)
            throw Error("pair '" + id + "' must link exactly one natural and one fake entry");

    for (const auto& e : m.entries)
        if (!std::filesystem::exists(m.resolve(e)))
            m.missing.push_back("line " + std::to_string(e.line) + ": " + e.path);
    return m;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open manifest '" + path.string() + "'");
    return parse_manifest(in, path.parent_path());
}

void write_manifest(std::ostream& out, const DatasetManifest& manifest) {
    const bool splits = manifest.has_splits();
    out << "path,label,pair_id" << (splits ? ",split" : "") << '\n';
    for (const auto& e : manifest.entries) {
        out << quote(e.path) << ',' << label_name(e.label) << ',' << quote(e.pair_id);
        if (splits) out << ',' << split_name(e.split);
        out << '\n';
    }
}

void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write manifest '" + path.string() + "'");
    write_manifest(out, manifest);
}

}  // namespace fcid

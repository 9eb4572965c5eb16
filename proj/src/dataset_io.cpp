#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "dnefc/dataset.hpp"
#include "dnefc/errors.hpp"

namespace dnefc {

namespace fs = std::filesystem;

void validate_dataset(const Dataset& d) {
    std::set<std::string> ids;
    std::size_t n = 0;
    const auto check = [&](const AdjacencyMatrix& m) {
        if (!ids.insert(m.id).second) throw ValidationError("duplicate matrix id '" + m.id + "'");
        if (n == 0) n = m.n;
        if (m.n != n || m.values.size() != n * n) throw ValidationError("matrix '" + m.id + "' has a different size");
        for (const float v : m.values) {
            if (!(v >= 0.0f && v <= 1.0f)) throw ValidationError("matrix '" + m.id + "' has entries outside [0, 1]");
        }
    };
    for (const auto& m : d.train) check(m);
    for (const auto& m : d.test) check(m);
}

void save_matrix(const fs::path& path, std::size_t n, std::span<const float> values) {
    if (values.size() != n * n) throw ValidationError("matrix payload is not n x n");
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    std::string line;
    char buf[32];
    for (std::size_t r = 0; r < n; ++r) {
        line.clear();
        for (std::size_t c = 0; c < n; ++c) {
            if (c) line += ',';
            const auto res = std::to_chars(buf, buf + sizeof buf, values[r * n + c]);
            line.append(buf, res.ptr);
        }
        line += '\n';
        out << line;
    }
    if (!out.flush()) throw IoError("failed writing " + path.string());
}

void save_matrix(const fs::path& path, const AdjacencyMatrix& m) { save_matrix(path, m.n, m.values); }

std::vector<float> load_matrix(const fs::path& path, std::size_t& n) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<float> values;
    std::string line;
    std::size_t row = 0;
    std::size_t width = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ++row;
        std::size_t col = 0;
        const char* p = line.data();
        const char* end = p + line.size();
        while (true) {
            ++col;
            const char* cell_end = std::find(p, end, ',');
            float v = 0.0f;
            const auto res = std::from_chars(p, cell_end, v);
            if (res.ec != std::errc{} || res.ptr != cell_end || !std::isfinite(v)) {
                throw FormatError(path.string() + ": row " + std::to_string(row) + ", column " + std::to_string(col) +
                                  ": not a number: '" + std::string(p, cell_end) + "'");
            }
            values.push_back(v);
            if (cell_end == end) break;
            p = cell_end + 1;
        }
        if (row == 1) {
            width = col;
        } else if (col != width) {
            throw FormatError(path.string() + ": row " + std::to_string(row) + " has " + std::to_string(col) +
                              " values, expected " + std::to_string(width));
        }
    }
    if (row == 0) throw FormatError(path.string() + ": empty matrix file");
    if (row != width) {
        throw FormatError(path.string() + ": matrix is " + std::to_string(row) + "x" + std::to_string(width) +
                          ", expected square");
    }
    n = row;
    return values;
}

AdjacencyMatrix load_adjacency(const fs::path& path, std::string id, Label label) {
    AdjacencyMatrix m;
    m.values = load_matrix(path, m.n);
    m.id = std::move(id);
    m.label = label;
    return m;
}

void write_manifest(const fs::path& file, const std::vector<ManifestEntry>& entries, const nlohmann::json& provenance) {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& e : entries) {
        list.push_back({{"id", e.id}, {"label", label_index(e.label)}, {"path", e.path}, {"split", e.split}});
    }
    nlohmann::json doc{{"entries", list}};
    if (!provenance.is_null()) doc["synth_config"] = provenance;
    std::ofstream out(file, std::ios::trunc);
    if (!out) throw IoError("cannot open " + file.string() + " for writing");
    out << doc.dump(2) << '\n';
    if (!out.flush()) throw IoError("failed writing " + file.string());
}

std::vector<ManifestEntry> read_manifest(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open " + file.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(file.string() + ": " + e.what());
    }
    std::vector<ManifestEntry> entries;
    std::set<std::string> ids;
    try {
        for (const auto& e : doc.at("entries")) {
            ManifestEntry m{e.at("id").get<std::string>(), label_from_index(e.at("label").get<long long>()),
                            e.at("path").get<std::string>(), e.at("split").get<std::string>()};
            if (m.split != "train" && m.split != "test") {
                throw ValidationError("manifest entry '" + m.id + "' has split '" + m.split + "'");
            }
            if (!ids.insert(m.id).second) throw ValidationError("manifest lists id '" + m.id + "' twice");
            entries.push_back(std::move(m));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(file.string() + ": malformed manifest: " + e.what());
    }
    return entries;
}

void write_dataset(const fs::path& dir, const Dataset& d, const nlohmann::json& provenance) {
    validate_dataset(d);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    std::vector<ManifestEntry> entries;
    const auto emit = [&](const std::vector<AdjacencyMatrix>& list, const char* split) {
        for (const auto& m : list) {
            const std::string file = m.id + ".csv";
            save_matrix(dir / file, m);
            entries.push_back({m.id, m.label, file, split});
        }
    };
    emit(d.train, "train");
    emit(d.test, "test");
    write_manifest(dir / "manifest.json", entries, provenance);
}

Dataset load_dataset(const fs::path& dir_or_manifest) {
    const fs::path manifest = fs::is_directory(dir_or_manifest) ? dir_or_manifest / "manifest.json" : dir_or_manifest;
    const fs::path base = manifest.parent_path();
    Dataset d;
    for (auto& e : read_manifest(manifest)) {
        auto m = load_adjacency(base / e.path, e.id, e.label);
        (e.split == "train" ? d.train : d.test).push_back(std::move(m));
    }
    validate_dataset(d);
    return d;
}

} // namespace dnefc

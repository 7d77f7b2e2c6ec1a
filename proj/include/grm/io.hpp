#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "grm/analysis.hpp"
#include "grm/errors.hpp"
#include "grm/google_matrix.hpp"
#include "grm/reduced_matrix.hpp"

namespace grm::io {

// 17 significant digits: enough for a bit-stable double round-trip.
inline std::string format_sig17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (const char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

// FNV-1a 64-bit over the file bytes; cheap provenance stamp for meta files.
inline std::string file_checksum(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open for checksum: " + path.string());
    std::uint64_t h = 1469598103934665603ULL;
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        const std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ULL;
        }
        if (!in) break;
    }
    char out[24];
    std::snprintf(out, sizeof(out), "fnv1a64:%016llx", static_cast<unsigned long long>(h));
    return out;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot open for writing: " + path.string());
    return out;
}

inline void write_rank_csv(const std::filesystem::path& path,
                           std::span<const RankedNode> rows) {
    auto out = open_out(path);
    out << "K,original_id,title,probability\n";
    for (const auto& r : rows)
        out << r.k << ',' << r.original_id << ',' << csv_quote(r.label) << ','
            << format_sig17(r.probability) << '\n';
}

inline void write_local_rank_csv(const std::filesystem::path& path,
                                 std::span<const LocalRankRow> rows) {
    auto out = open_out(path);
    out << "R,name,original_id,K,probability\n";
    for (const auto& r : rows)
        out << r.local_rank << ',' << csv_quote(r.name) << ',' << r.original_id << ','
            << r.global_k << ',' << format_sig17(r.probability) << '\n';
}

// Parses a local-rank CSV (columns R,name,...) back into a rank table.
inline EditionRankTable read_rank_table_csv(const std::filesystem::path& path,
                                            std::string edition_tag = {}) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open rank table: " + path.string());
    EditionRankTable table;
    table.edition_tag = edition_tag.empty() ? path.stem().string() : std::move(edition_tag);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 || line.empty()) continue; // header
        const auto fields = split_csv_line(line);
        if (fields.size() < 2)
            throw ParseError(path.string() + ":" + std::to_string(line_no)
                             + ": malformed rank row");
        char* end = nullptr;
        const unsigned long rank = std::strtoul(fields[0].c_str(), &end, 10);
        if (end == fields[0].c_str() || *end != '\0' || rank == 0)
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": bad rank value");
        if (!table.entries.emplace(fields[1], rank).second)
            throw ParseError(path.string() + ":" + std::to_string(line_no)
                             + ": duplicate name " + fields[1]);
    }
    if (table.entries.empty()) throw ParseError(path.string() + ": empty rank table");
    return table;
}

// Matrix CSV: header row of column (source) names, first column of row
// (destination) names, values at 17 significant digits.
inline void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m,
                             std::span<const std::string> row_names,
                             std::span<const std::string> col_names) {
    if (m.rows() != static_cast<Eigen::Index>(row_names.size())
        || m.cols() != static_cast<Eigen::Index>(col_names.size()))
        throw std::invalid_argument("matrix shape does not match the name lists");
    auto out = open_out(path);
    out << "name";
    for (const auto& name : col_names) out << ',' << csv_quote(name);
    out << '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        out << csv_quote(row_names[static_cast<std::size_t>(i)]);
        for (Eigen::Index j = 0; j < m.cols(); ++j) out << ',' << format_sig17(m(i, j));
        out << '\n';
    }
}

inline void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m,
                             std::span<const std::string> names) {
    write_matrix_csv(path, m, names, names);
}

struct NamedMatrix {
    Eigen::MatrixXd matrix;
    std::vector<std::string> row_names, col_names;
};

inline NamedMatrix read_matrix_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open matrix: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path.string() + ": empty matrix file");
    auto header = split_csv_line(line);
    if (header.size() < 2) throw ParseError(path.string() + ": malformed matrix header");
    NamedMatrix nm;
    nm.col_names.assign(header.begin() + 1, header.end());
    std::vector<std::vector<double>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw ParseError(path.string() + ":" + std::to_string(line_no)
                             + ": row width does not match header");
        nm.row_names.push_back(fields[0]);
        std::vector<double> row;
        row.reserve(fields.size() - 1);
        for (std::size_t j = 1; j < fields.size(); ++j) {
            char* end = nullptr;
            const double x = std::strtod(fields[j].c_str(), &end);
            if (end == fields[j].c_str() || *end != '\0')
                throw ParseError(path.string() + ":" + std::to_string(line_no)
                                 + ": bad number '" + fields[j] + "'");
            row.push_back(x);
        }
        rows.push_back(std::move(row));
    }
    nm.matrix.resize(static_cast<Eigen::Index>(rows.size()),
                     static_cast<Eigen::Index>(nm.col_names.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            nm.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return nm;
}

inline nlohmann::json tolerances_json(const ReduceTolerances& t) {
    return {{"eigen_tol", t.eigen_tol},
            {"eigen_max_iter", t.eigen_max_iter},
            {"series_tol", t.series_tol},
            {"series_max_terms", t.series_max_terms}};
}

// Bundle directory: one CSV per component plus meta.json.  extra is merged
// into the meta object (run config, input checksums, ...).
inline void write_bundle(const std::filesystem::path& dir, const ReducedMatrixSet& rs,
                         const nlohmann::json& extra = nlohmann::json::object()) {
    std::filesystem::create_directories(dir);
    const auto names = std::span<const std::string>(rs.subset.names);
    write_matrix_csv(dir / "GR.csv", rs.gr, names);
    write_matrix_csv(dir / "Grr.csv", rs.grr, names);
    write_matrix_csv(dir / "Gpr.csv", rs.gpr, names);
    write_matrix_csv(dir / "Gqrd.csv", rs.gqrd, names);
    write_matrix_csv(dir / "Gqrnd.csv", rs.gqrnd, names);
    nlohmann::json meta{{"alpha", rs.alpha},
                        {"lambda_c", rs.lambda_c},
                        {"edition_tag", rs.edition_tag},
                        {"subset", rs.subset.names},
                        {"tolerances", tolerances_json(rs.tolerances)}};
    for (const auto& [key, value] : extra.items()) meta[key] = value;
    auto out = open_out(dir / "meta.json");
    out << meta.dump(2) << '\n';
}

inline ReducedMatrixSet read_bundle(const std::filesystem::path& dir) {
    std::ifstream meta_in(dir / "meta.json", std::ios::binary);
    if (!meta_in) throw ParseError("cannot open bundle meta: " + (dir / "meta.json").string());
    nlohmann::json meta;
    try {
        meta_in >> meta;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError((dir / "meta.json").string() + ": " + e.what());
    }
    ReducedMatrixSet rs;
    rs.alpha = meta.at("alpha").get<double>();
    rs.lambda_c = meta.at("lambda_c").get<double>();
    rs.edition_tag = meta.at("edition_tag").get<std::string>();
    rs.subset.names = meta.at("subset").get<std::vector<std::string>>();
    rs.subset.indices.resize(rs.subset.names.size());
    std::iota(rs.subset.indices.begin(), rs.subset.indices.end(), NodeId{0});
    if (meta.contains("tolerances")) {
        const auto& t = meta["tolerances"];
        rs.tolerances.eigen_tol = t.value("eigen_tol", rs.tolerances.eigen_tol);
        rs.tolerances.eigen_max_iter = t.value("eigen_max_iter", rs.tolerances.eigen_max_iter);
        rs.tolerances.series_tol = t.value("series_tol", rs.tolerances.series_tol);
        rs.tolerances.series_max_terms =
            t.value("series_max_terms", rs.tolerances.series_max_terms);
    }
    const auto load = [&](const char* file) {
        auto nm = read_matrix_csv(dir / file);
        if (nm.row_names != rs.subset.names || nm.col_names != rs.subset.names)
            throw ParseError((dir / file).string() + ": names disagree with meta.json subset");
        return std::move(nm.matrix);
    };
    rs.gr = load("GR.csv");
    rs.grr = load("Grr.csv");
    rs.gpr = load("Gpr.csv");
    rs.gqrd = load("Gqrd.csv");
    rs.gqrnd = load("Gqrnd.csv");
    return rs;
}

inline void write_theta_csv(const std::filesystem::path& path,
                            std::span<const ThetaEntry> entries,
                            std::span<const std::string> edition_tags) {
    auto out = open_out(path);
    out << "theta_rank,name,theta";
    for (const auto& tag : edition_tags) out << ',' << csv_quote(tag);
    out << '\n';
    for (std::size_t i = 0; i < entries.size(); ++i) {
        out << (i + 1) << ',' << csv_quote(entries[i].name) << ',' << entries[i].theta;
        for (const auto& rank : entries[i].ranks) {
            out << ',';
            if (rank) out << *rank;
        }
        out << '\n';
    }
}

inline void write_sensitivity_csv(const std::filesystem::path& path,
                                  std::span<const std::string> names,
                                  std::span<const double> d) {
    if (names.size() != d.size())
        throw std::invalid_argument("name and value lists differ in length");
    auto out = open_out(path);
    out << "name,D\n";
    for (std::size_t i = 0; i < names.size(); ++i)
        out << csv_quote(names[i]) << ',' << format_sig17(d[i]) << '\n';
}

namespace detail {

inline std::string xml_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (const char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out += c;
        }
    }
    return out;
}

inline std::string dot_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (const char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out;
}

} // namespace detail

// GEXF 1.2, directed, with weight on the edge element and dominance and
// generation as declared edge attributes.
inline std::string to_gexf(const FriendshipGraph& fg) {
    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<gexf xmlns=\"http://www.gexf.net/1.2draft\" version=\"1.2\">\n"
        << "  <graph defaultedgetype=\"directed\">\n"
        << "    <attributes class=\"edge\">\n"
        << "      <attribute id=\"dominance\" title=\"dominance\" type=\"string\"/>\n"
        << "      <attribute id=\"generation\" title=\"generation\" type=\"string\"/>\n"
        << "    </attributes>\n"
        << "    <nodes>\n";
    for (std::size_t i = 0; i < fg.nodes.size(); ++i)
        out << "      <node id=\"" << i << "\" label=\"" << detail::xml_escape(fg.nodes[i])
            << "\"/>\n";
    out << "    </nodes>\n    <edges>\n";
    for (std::size_t e = 0; e < fg.edges.size(); ++e) {
        const auto& edge = fg.edges[e];
        out << "      <edge id=\"" << e << "\" source=\"" << edge.source << "\" target=\""
            << edge.target << "\" weight=\"" << format_sig17(edge.weight) << "\">\n"
            << "        <attvalues>\n"
            << "          <attvalue for=\"dominance\" value=\"" << to_string(edge.dominance)
            << "\"/>\n"
            << "          <attvalue for=\"generation\" value=\"" << to_string(edge.generation)
            << "\"/>\n"
            << "        </attvalues>\n"
            << "      </edge>\n";
    }
    out << "    </edges>\n  </graph>\n</gexf>\n";
    return out.str();
}

// DOT with red edges where the hidden component dominates the direct one.
inline std::string to_dot(const FriendshipGraph& fg) {
    std::ostringstream out;
    out << "digraph friendship {\n";
    for (const auto& name : fg.nodes)
        out << "  \"" << detail::dot_escape(name) << "\";\n";
    for (const auto& edge : fg.edges)
        out << "  \"" << detail::dot_escape(fg.nodes[edge.source]) << "\" -> \""
            << detail::dot_escape(fg.nodes[edge.target]) << "\" [color="
            << (edge.dominance == Dominance::Indirect ? "red" : "black") << ", weight=\""
            << format_sig17(edge.weight) << "\", generation=\"" << to_string(edge.generation)
            << "\"];\n";
    out << "}\n";
    return out.str();
}

inline void write_gexf(const std::filesystem::path& path, const FriendshipGraph& fg) {
    open_out(path) << to_gexf(fg);
}

inline void write_dot(const std::filesystem::path& path, const FriendshipGraph& fg) {
    open_out(path) << to_dot(fg);
}

} // namespace grm::io

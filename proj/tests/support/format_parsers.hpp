// Minimal parsers for the GEXF/DOT output of this project, used to verify
// that exports round-trip their edge attributes.  They only understand the
// subset of each format the writers emit.
#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace testutil {

inline std::string xml_unescape(std::string s) {
    const std::pair<const char*, const char*> repl[] = {
        {"&lt;", "<"}, {"&gt;", ">"}, {"&quot;", "\""}, {"&apos;", "'"}, {"&amp;", "&"}};
    for (const auto& [from, to] : repl) {
        std::size_t pos = 0;
        while ((pos = s.find(from, pos)) != std::string::npos) {
            s.replace(pos, std::string(from).size(), to);
            pos += 1;
        }
    }
    return s;
}

// Attribute value inside an element string: name="value"
inline std::string tag_attr(const std::string& element, const std::string& name) {
    const std::string key = name + "=\"";
    const auto start = element.find(key);
    if (start == std::string::npos) throw std::runtime_error("missing attribute " + name);
    const auto value_start = start + key.size();
    const auto end = element.find('"', value_start);
    return xml_unescape(element.substr(value_start, end - value_start));
}

struct GexfEdge {
    std::string source, target;
    double weight = 0.0;
    std::map<std::string, std::string> attvalues;
};

struct GexfDocument {
    std::map<std::string, std::string> node_labels; // id -> label
    std::vector<GexfEdge> edges;
};

inline GexfDocument parse_gexf(const std::string& text) {
    GexfDocument doc;
    std::size_t pos = 0;
    while ((pos = text.find("<node ", pos)) != std::string::npos) {
        const auto end = text.find("/>", pos);
        const std::string element = text.substr(pos, end - pos);
        doc.node_labels[tag_attr(element, "id")] = tag_attr(element, "label");
        pos = end;
    }
    pos = 0;
    while ((pos = text.find("<edge ", pos)) != std::string::npos) {
        const auto close = text.find("</edge>", pos);
        const std::string block = text.substr(pos, close - pos);
        GexfEdge edge;
        edge.source = tag_attr(block, "source");
        edge.target = tag_attr(block, "target");
        edge.weight = std::stod(tag_attr(block, "weight"));
        std::size_t apos = 0;
        while ((apos = block.find("<attvalue ", apos)) != std::string::npos) {
            const auto aend = block.find("/>", apos);
            const std::string attr = block.substr(apos, aend - apos);
            edge.attvalues[tag_attr(attr, "for")] = tag_attr(attr, "value");
            apos = aend;
        }
        doc.edges.push_back(std::move(edge));
        pos = close;
    }
    return doc;
}

struct DotEdge {
    std::string source, target;
    std::map<std::string, std::string> attrs;
};

inline std::string dot_unescape(const std::string& s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '\\' && i + 1 < s.size()) ++i;
        out += s[i];
    }
    return out;
}

// Reads one quoted identifier starting at pos (which must point at '"').
inline std::string read_quoted(const std::string& line, std::size_t& pos) {
    std::string raw;
    ++pos; // opening quote
    while (pos < line.size()) {
        if (line[pos] == '\\' && pos + 1 < line.size()) {
            raw += line[pos];
            raw += line[pos + 1];
            pos += 2;
            continue;
        }
        if (line[pos] == '"') break;
        raw += line[pos++];
    }
    ++pos; // closing quote
    return dot_unescape(raw);
}

inline std::vector<DotEdge> parse_dot_edges(const std::string& text) {
    std::vector<DotEdge> edges;
    std::size_t line_start = 0;
    while (line_start < text.size()) {
        auto line_end = text.find('\n', line_start);
        if (line_end == std::string::npos) line_end = text.size();
        const std::string line = text.substr(line_start, line_end - line_start);
        line_start = line_end + 1;
        const auto arrow = line.find("->");
        if (arrow == std::string::npos) continue;
        DotEdge edge;
        std::size_t pos = line.find('"');
        edge.source = read_quoted(line, pos);
        pos = line.find('"', line.find("->", pos));
        edge.target = read_quoted(line, pos);
        const auto bracket = line.find('[', pos);
        if (bracket != std::string::npos) {
            const auto end = line.find(']', bracket);
            std::string attrs = line.substr(bracket + 1, end - bracket - 1);
            std::size_t apos = 0;
            while (apos < attrs.size()) {
                auto eq = attrs.find('=', apos);
                if (eq == std::string::npos) break;
                std::string key = attrs.substr(apos, eq - apos);
                while (!key.empty() && (key.front() == ' ' || key.front() == ','))
                    key.erase(key.begin());
                std::size_t vpos = eq + 1;
                std::string value;
                if (attrs[vpos] == '"') {
                    value = read_quoted(attrs, vpos);
                } else {
                    const auto vend = attrs.find_first_of(", ]", vpos);
                    value = attrs.substr(vpos, vend - vpos);
                    vpos = vend == std::string::npos ? attrs.size() : vend;
                }
                edge.attrs[key] = value;
                apos = vpos;
            }
        }
        edges.push_back(std::move(edge));
    }
    return edges;
}

} // namespace testutil

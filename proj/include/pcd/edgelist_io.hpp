#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "pcd/graph.hpp"

namespace pcd {

// Plain-text edge-list format shared by all graph kinds:
//
//   p=<node count>
//   <u> <mark_u><mark_v> <v>
//   ...
//
// with u < v, one edge per line sorted by (u, v), marks drawn from
// {-, >, o}, and a trailing newline.  Examples: "0 -> 1" (0 -> 1),
// "4 -- 5" (undirected), "2 o- 3" (circle at 2, tail at 3),
// "1 >> 2" (bidirected).  Serialization is canonical, so
// parse-then-serialize reproduces the input byte for byte.

inline std::string to_edge_list(const MixedGraph& g) {
    std::string out = "p=" + std::to_string(g.p()) + "\n";
    for (const auto& e : g.edges()) {
        out += std::to_string(e.u);
        out += ' ';
        out += mark_char(e.mark_u);
        out += mark_char(e.mark_v);
        out += ' ';
        out += std::to_string(e.v);
        out += '\n';
    }
    return out;
}

inline std::string to_edge_list(const Dag& g) { return to_edge_list(mixed_from_dag(g)); }

inline std::string to_edge_list(const Superstructure& ss) {
    std::string out = "p=" + std::to_string(ss.p()) + "\n";
    for (auto [u, v] : ss.edges())
        out += std::to_string(u) + " -- " + std::to_string(v) + "\n";
    return out;
}

namespace detail {

inline std::runtime_error parse_error(size_t line_no, const std::string& what) {
    return std::runtime_error("edge list line " + std::to_string(line_no) + ": " + what);
}

inline int parse_node(const std::string& tok, size_t line_no) {
    size_t pos = 0;
    int v = 0;
    try {
        v = std::stoi(tok, &pos);
    } catch (const std::exception&) {
        throw parse_error(line_no, "expected node id, got '" + tok + "'");
    }
    if (pos != tok.size() || v < 0)
        throw parse_error(line_no, "expected non-negative node id, got '" + tok + "'");
    return v;
}

}  // namespace detail

inline MixedGraph mixed_graph_from_edge_list(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    size_t line_no = 1;
    if (!std::getline(in, line) || line.rfind("p=", 0) != 0)
        throw detail::parse_error(line_no, "expected header 'p=<count>'");
    int p = detail::parse_node(line.substr(2), line_no);
    MixedGraph g(p);
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string ut, marks, vt, extra;
        if (!(ls >> ut >> marks >> vt) || (ls >> extra))
            throw detail::parse_error(line_no, "expected '<u> <marks> <v>', got '" + line + "'");
        if (marks.size() != 2)
            throw detail::parse_error(line_no, "expected two-character mark token, got '" + marks + "'");
        NodeId u = detail::parse_node(ut, line_no);
        NodeId v = detail::parse_node(vt, line_no);
        try {
            g.add_edge(u, v, mark_from_char(marks[0]), mark_from_char(marks[1]));
        } catch (const std::invalid_argument& e) {
            throw detail::parse_error(line_no, e.what());
        }
    }
    return g;
}

inline Dag dag_from_edge_list(const std::string& text) {
    MixedGraph g = mixed_graph_from_edge_list(text);
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (const auto& e : g.edges()) {
        if (e.mark_u == Mark::Tail && e.mark_v == Mark::Arrow) edges.emplace_back(e.u, e.v);
        else if (e.mark_u == Mark::Arrow && e.mark_v == Mark::Tail) edges.emplace_back(e.v, e.u);
        else
            throw std::runtime_error("dag_from_edge_list: non-directed edge {" +
                                     std::to_string(e.u) + "," + std::to_string(e.v) + "}");
    }
    return Dag(g.p(), edges);
}

inline Superstructure superstructure_from_edge_list(const std::string& text) {
    MixedGraph g = mixed_graph_from_edge_list(text);
    Superstructure ss(g.p());
    for (const auto& e : g.edges()) {
        if (!(e.mark_u == Mark::Tail && e.mark_v == Mark::Tail))
            throw std::runtime_error("superstructure_from_edge_list: non-undirected edge {" +
                                     std::to_string(e.u) + "," + std::to_string(e.v) + "}");
        ss.add_edge(e.u, e.v);
    }
    return ss;
}

// -- small file helpers -----------------------------------------------------

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file for reading: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open file for writing: " + path);
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace pcd

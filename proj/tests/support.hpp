#pragma once

#include <algorithm>
#include <filesystem>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "relq/corpus.hpp"
#include "relq/model.hpp"

namespace relq::test {

inline std::filesystem::path corpus_dir() {
    return std::filesystem::path(RELQ_CORPUS_DIR);
}

// Plain digraph description used by the generators and oracles.
struct RawGraph {
    int nodes = 0;
    // endpoint -1 = dangling
    std::vector<std::pair<int, int>> edges;
};

inline RawGraph random_graph(std::mt19937& rng, int max_nodes = 8, int max_edges = 16,
                             double dangling_prob = 0.0) {
    RawGraph g;
    g.nodes = std::uniform_int_distribution<int>(0, max_nodes)(rng);
    int edge_count = std::uniform_int_distribution<int>(0, max_edges)(rng);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    for (int i = 0; i < edge_count; ++i) {
        auto endpoint = [&]() -> int {
            if (g.nodes == 0 || coin(rng) < dangling_prob) return -1;
            return std::uniform_int_distribution<int>(0, g.nodes - 1)(rng);
        };
        g.edges.emplace_back(endpoint(), endpoint());
    }
    return g;
}

inline Model to_model(const RawGraph& g) {
    const Metamodel& mm = corpus::simple_graph_mm();
    Model m(mm);
    m.add_element("g", "Graph");
    std::vector<std::string> node_ids, edge_ids;
    for (int i = 0; i < g.nodes; ++i) {
        std::string id = "n" + std::to_string(i + 1);
        m.add_element(id, "Node");
        m.set_attr(id, "name", Value(id));
        node_ids.push_back(id);
    }
    for (std::size_t i = 0; i < g.edges.size(); ++i) {
        std::string id = "e" + std::to_string(i + 1);
        m.add_element(id, "Edge");
        auto [s, t] = g.edges[i];
        if (s >= 0) m.set_ref(id, "src", {node_ids[static_cast<std::size_t>(s)]});
        if (t >= 0) m.set_ref(id, "trg", {node_ids[static_cast<std::size_t>(t)]});
        edge_ids.push_back(id);
    }
    m.set_ref("g", "nodes", node_ids);
    m.set_ref("g", "edges", edge_ids);
    return m;
}

// Exhaustive enumeration of directed simple cycles of length exactly k,
// canonicalized to their (rotation-invariant) node set; returns the number
// of distinct sets. Independent of the engine's circle implementation.
inline int cycle_count_oracle(const RawGraph& g, int k) {
    std::vector<std::set<int>> succ(static_cast<std::size_t>(g.nodes));
    for (auto [s, t] : g.edges)
        if (s >= 0 && t >= 0) succ[static_cast<std::size_t>(s)].insert(t);

    std::set<std::vector<int>> found;
    std::vector<int> path;
    std::vector<bool> on_path(static_cast<std::size_t>(g.nodes), false);

    auto dfs = [&](auto&& self, int start, int v) -> void {
        if (static_cast<int>(path.size()) == k) {
            if (succ[static_cast<std::size_t>(v)].count(start)) {
                std::vector<int> key = path;
                std::sort(key.begin(), key.end());
                found.insert(std::move(key));
            }
            return;
        }
        for (int w : succ[static_cast<std::size_t>(v)]) {
            if (on_path[static_cast<std::size_t>(w)]) continue;
            on_path[static_cast<std::size_t>(w)] = true;
            path.push_back(w);
            self(self, start, w);
            path.pop_back();
            on_path[static_cast<std::size_t>(w)] = false;
        }
    };

    for (int start = 0; start < g.nodes; ++start) {
        path = {start};
        std::fill(on_path.begin(), on_path.end(), false);
        on_path[static_cast<std::size_t>(start)] = true;
        dfs(dfs, start, start);
    }
    return static_cast<int>(found.size());
}

// Length-2 path composition over a model's edge set: pairs (a, c) with some
// a->b->c, a != c, and no existing a->c edge.
inline std::set<std::pair<std::string, std::string>> path2_oracle(const Model& m) {
    std::vector<std::pair<std::string, std::string>> edges;
    for (const Element* e : m.elements_of_class("Edge", true)) {
        const auto& s = e->ref("src");
        const auto& t = e->ref("trg");
        if (s.empty() || t.empty()) continue;
        edges.emplace_back(s.front(), t.front());
    }
    std::set<std::pair<std::string, std::string>> existing(edges.begin(), edges.end());
    std::set<std::pair<std::string, std::string>> out;
    for (const auto& [a, b] : edges)
        for (const auto& [b2, c] : edges)
            if (b == b2 && a != c && !existing.count({a, c})) out.insert({a, c});
    return out;
}

} // namespace relq::test

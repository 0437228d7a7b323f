#include "doctest.h"
#include "relq/natives.hpp"
#include "support.hpp"

using namespace relq;

namespace {

std::vector<std::string> ids(const std::vector<ElemRef>& refs) {
    std::vector<std::string> out;
    for (const auto& r : refs) out.push_back(r.id);
    return out;
}

Model triangle() {
    test::RawGraph g;
    g.nodes = 3;
    g.edges = {{0, 1}, {1, 2}, {2, 0}};
    return test::to_model(g);
}

} // namespace

TEST_CASE("linked_nodes follows outgoing edges in document order") {
    Model g1 = corpus::reference_graph_g1();
    CHECK(ids(linked_nodes(g1, {&g1, "n3"})) == std::vector<std::string>{"n1", "n4"});
    CHECK(ids(linked_nodes(g1, {&g1, "n6"})) == std::vector<std::string>{"n6"});
    CHECK(linked_nodes(g1, {&g1, "n8"}).empty());
}

TEST_CASE("linked_nodes skips dangling targets and keeps duplicates") {
    test::RawGraph g;
    g.nodes = 2;
    g.edges = {{0, 1}, {0, -1}, {0, 1}};
    Model m = test::to_model(g);
    CHECK(ids(linked_nodes(m, {&m, "n1"})) == std::vector<std::string>{"n2", "n2"});
}

TEST_CASE("circle_nodes walks the recursion of the k-circle search") {
    Model g1 = corpus::reference_graph_g1();
    ElemRef n1{&g1, "n1"};
    CHECK(circle_nodes(g1, n1, {n1}, 2) == std::vector<std::string>{"n1|n2|n3"});
    ElemRef n6{&g1, "n6"};
    CHECK(circle_nodes(g1, n6, {n6}, 2).empty()); // the loop is rejected while walking
    ElemRef n7{&g1, "n7"};
    CHECK(circle_nodes(g1, n7, {n7}, 2).empty()); // no outgoing edges
}

TEST_CASE("all_circle_count on the reference fixtures") {
    Model g1 = corpus::reference_graph_g1();
    CHECK(all_circle_count(g1, 3) == 2);
    CHECK(all_circle_count(g1, 2) == 0);
    CHECK(all_circle_count(triangle(), 3) == 1);
    CHECK_THROWS_AS(all_circle_count(g1, 1), EvalError);
}

TEST_CASE("self-loops never contribute to circle counts") {
    test::RawGraph g;
    g.nodes = 3;
    g.edges = {{0, 0}, {1, 1}, {0, 1}, {1, 0}, {2, 2}};
    Model m = test::to_model(g);
    CHECK(all_circle_count(m, 2) == 1); // only the n1<->n2 pair
    CHECK(all_circle_count(m, 3) == 0);
    CHECK(all_circle_count(m, 4) == 0);
}

TEST_CASE("circle counting matches the exhaustive oracle") {
    std::mt19937 rng(42);
    for (int trial = 0; trial < 100; ++trial) {
        test::RawGraph g = test::random_graph(rng, 8, 16, 0.0);
        Model m = test::to_model(g);
        for (int k = 2; k <= 4; ++k) {
            CAPTURE(trial);
            CAPTURE(k);
            CHECK(all_circle_count(m, k) == test::cycle_count_oracle(g, k));
        }
    }
}

TEST_CASE("circle counts are invariant under id relabeling") {
    std::mt19937 rng(43);
    for (int trial = 0; trial < 25; ++trial) {
        test::RawGraph g = test::random_graph(rng, 8, 12, 0.0);
        Model a = test::to_model(g);

        const Metamodel& mm = corpus::simple_graph_mm();
        Model b(mm);
        b.add_element("zz_graph", "Graph");
        std::vector<std::string> node_ids, edge_ids;
        for (int i = 0; i < g.nodes; ++i) {
            // Injective but order-scrambling rename.
            std::string id = "q" + std::to_string(997 - i);
            b.add_element(id, "Node");
            node_ids.push_back(id);
        }
        for (std::size_t i = 0; i < g.edges.size(); ++i) {
            std::string id = "w" + std::to_string(i);
            b.add_element(id, "Edge");
            auto [s, t] = g.edges[i];
            if (s >= 0) b.set_ref(id, "src", {node_ids[static_cast<std::size_t>(s)]});
            if (t >= 0) b.set_ref(id, "trg", {node_ids[static_cast<std::size_t>(t)]});
            edge_ids.push_back(id);
        }
        b.set_ref("zz_graph", "nodes", node_ids);
        b.set_ref("zz_graph", "edges", edge_ids);

        for (int k = 2; k <= 4; ++k) CHECK(all_circle_count(a, k) == all_circle_count(b, k));
    }
}

TEST_CASE("the registry exposes the published names") {
    const NativeRegistry& reg = NativeRegistry::standard();
    REQUIRE(reg.find("GetLinkedNodes"));
    REQUIRE(reg.find("GetCircleNodes"));
    REQUIRE(reg.find("GetAllCircleNodes"));
    CHECK(reg.find("GetLinkedNodes")->arity == 1);
    CHECK(reg.find("GetCircleNodes")->arity == 3);
    CHECK(reg.find("GetAllCircleNodes")->arity == 2);
    CHECK(reg.find("Nope") == nullptr);

    Model g1 = corpus::reference_graph_g1();
    Env env;
    env.source = &g1;
    Value linked = reg.find("GetLinkedNodes")->call({Value(ElemRef{&g1, "n3"})}, env);
    REQUIRE(linked.is_list());
    CHECK(linked.as_list().size() == 2);
    Value count = reg.find("GetAllCircleNodes")->call({Value(ElemRef{&g1, "g1"}), Value(3)}, env);
    CHECK(count.as_int() == 2);
}

#include "doctest.h"
#include "relq/model.hpp"
#include "support.hpp"

using namespace relq;

TEST_CASE("the reference fixture validates cleanly") {
    Model g1 = corpus::reference_graph_g1();
    CHECK(validate_model(g1, corpus::simple_graph_mm()).empty());
    Model g2 = corpus::dangling_graph_g2();
    CHECK(validate_model(g2, corpus::simple_graph_mm()).empty());
}

TEST_CASE("undeclared attributes show up as diagnostics") {
    Model g1 = corpus::reference_graph_g1();
    // Element contents are normally only touched through the Model API;
    // going around it fabricates the invalid state under test.
    Element& n1 = g1.add_element("bad", "Node");
    n1.attrs["color"] = Value("red");
    auto diags = validate_model(g1, corpus::simple_graph_mm());
    REQUIRE(diags.size() == 1);
    CHECK(diags[0].where == "bad");
    CHECK(diags[0].message.find("color") != std::string::npos);
}

TEST_CASE("dangling optional references are not diagnostics") {
    Model g2 = corpus::dangling_graph_g2();
    CHECK(validate_model(g2, corpus::simple_graph_mm()).empty());
}

TEST_CASE("broken idrefs and multiplicity violations are diagnostics") {
    Model g1 = corpus::reference_graph_g1();
    Element& e1 = const_cast<Element&>(g1.require("e1"));
    e1.refs["src"] = {"nowhere"};
    auto diags = validate_model(g1, corpus::simple_graph_mm());
    REQUIRE(diags.size() == 1);
    CHECK(diags[0].message.find("unknown id") != std::string::npos);

    e1.refs["src"] = {"n1", "n2"};
    diags = validate_model(g1, corpus::simple_graph_mm());
    CHECK(diags.size() == 1);
}

TEST_CASE("elements_of_class returns document order") {
    Model g1 = corpus::reference_graph_g1();
    auto nodes = g1.elements_of_class("Node", false);
    REQUIRE(nodes.size() == 8);
    for (int i = 0; i < 8; ++i) CHECK(nodes[static_cast<std::size_t>(i)]->id == "n" + std::to_string(i + 1));

    auto edges = g1.elements_of_class("Edge", false);
    REQUIRE(edges.size() == 7);
    CHECK(edges.front()->id == "e1");
    CHECK(edges.back()->id == "e7");

    // Stable across calls.
    auto again = g1.elements_of_class("Node", false);
    CHECK(nodes == again);
}

TEST_CASE("elements_of_class on an empty model and unknown classes") {
    Model empty(corpus::simple_graph_mm());
    CHECK(empty.elements_of_class("Node", false).empty());
    CHECK_THROWS_AS(empty.elements_of_class("Vertex", false), Error);
}

TEST_CASE("elements_of_class can include subclasses") {
    Metamodel mm = parse_metamodel(corpus::read_file(test::corpus_dir() / "metamodels" /
                                                     "EvolvedGraph.mm"));
    Model m(mm);
    m.add_element("g", "Graph");
    m.add_element("a", "Node");
    m.add_element("b", "Edge");
    m.set_ref("g", "gcs", {"a", "b"});
    CHECK(m.elements_of_class("GraphComponent", true).size() == 2);
    CHECK(m.elements_of_class("Node", false).size() == 1);
}

TEST_CASE("key lookup by attribute and by xmi:id") {
    Model g1 = corpus::reference_graph_g1();
    const Element* n3 = g1.key_lookup("Node", "name", Value("n3"));
    REQUIRE(n3);
    CHECK(n3->id == "n3");
    CHECK(g1.key_lookup("Node", "name", Value("n99")) == nullptr);
    CHECK(g1.key_lookup("Node", "xmi:id", Value("n5"))->id == "n5");
}

TEST_CASE("ambiguous keys are an error") {
    Metamodel mm = parse_metamodel("metamodel HelloWorld\nclass Greeting\n  attr text: string\n");
    Model m(mm);
    m.add_element("a", "Greeting");
    m.set_attr("a", "text", Value("Hello"));
    m.add_element("b", "Greeting");
    m.set_attr("b", "text", Value("Hello"));
    CHECK_THROWS_WITH_AS(m.key_lookup("Greeting", "text", Value("Hello")),
                         doctest::Contains("ambiguous key"), EngineError);
}

TEST_CASE("containment maintenance re-parents and re-roots") {
    Model m(corpus::simple_graph_mm());
    m.add_element("g", "Graph");
    m.add_element("h", "Graph");
    m.add_element("n1", "Node");
    CHECK(m.roots().size() == 3);

    m.set_ref("g", "nodes", {"n1"});
    CHECK(m.roots() == std::vector<std::string>{"g", "h"});
    CHECK(m.require("n1").container_id == "g");

    // Moving the node to the other graph removes it from the first list.
    m.set_ref("h", "nodes", {"n1"});
    CHECK(m.require("g").ref("nodes").empty());
    CHECK(m.require("n1").container_id == "h");

    // Dropping it from the list makes it a root again.
    m.set_ref("h", "nodes", {});
    CHECK(m.roots() == std::vector<std::string>{"g", "h", "n1"});
    CHECK(validate_model(m, corpus::simple_graph_mm()).empty());
}

TEST_CASE("erase_element scrubs incoming references") {
    Model g1 = corpus::reference_graph_g1();
    g1.erase_element("n1");
    CHECK_FALSE(g1.contains("n1"));
    for (const Element* e : g1.elements_of_class("Edge", false)) {
        for (const auto& [name, targets] : e->refs)
            for (const auto& t : targets) CHECK(t != "n1");
    }
    CHECK(g1.require("g1").ref("nodes").size() == 7);
}

TEST_CASE("mutation API rejects undeclared properties and bad types") {
    Model m(corpus::simple_graph_mm());
    m.add_element("n", "Node");
    CHECK_THROWS_AS(m.set_attr("n", "color", Value("red")), EngineError);
    CHECK_THROWS_AS(m.set_attr("n", "name", Value(5)), EngineError);
    CHECK_THROWS_AS(m.set_ref("n", "friends", {"n"}), EngineError);
    CHECK_THROWS_AS(m.add_element("n", "Node"), EngineError);
}

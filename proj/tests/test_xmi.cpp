#include "doctest.h"
#include "relq/xmi.hpp"
#include "support.hpp"

using namespace relq;

TEST_CASE("xmi round trip is the identity") {
    Model g1 = corpus::reference_graph_g1();
    std::string text = write_xmi(g1);
    Model back = read_model(text, corpus::simple_graph_mm());
    CHECK(back == g1);
    CHECK(write_xmi(back) == text);

    Model g2 = corpus::dangling_graph_g2();
    CHECK(read_model(write_xmi(g2), corpus::simple_graph_mm()) == g2);
}

TEST_CASE("round trip preserves document order") {
    Model g1 = corpus::reference_graph_g1();
    Model back = read_model(write_xmi(g1), corpus::simple_graph_mm());
    auto before = g1.elements_of_class("Node", false);
    auto after = back.elements_of_class("Node", false);
    REQUIRE(before.size() == after.size());
    for (std::size_t i = 0; i < before.size(); ++i) CHECK(before[i]->id == after[i]->id);
}

TEST_CASE("serialization is canonical and deterministic") {
    Model g1 = corpus::reference_graph_g1();
    CHECK(write_xmi(g1) == write_xmi(g1));
    CHECK(write_xmi(read_model(write_xmi(g1), corpus::simple_graph_mm())) == write_xmi(g1));
}

TEST_CASE("attribute values with markup round-trip escaped") {
    const Metamodel& mm = corpus::simple_graph_mm();
    Model m(mm);
    m.add_element("n1", "Node");
    m.set_attr("n1", "name", Value("a & <b> \"c\""));
    std::string text = write_xmi(m);
    CHECK(text.find("&amp;") != std::string::npos);
    CHECK(read_model(text, mm) == m);
}

TEST_CASE("duplicate xmi:id is rejected") {
    const char* text = R"(<Graph xmi:id="g">
  <nodes>
    <Node xmi:id="n1" name="a"/>
    <Node xmi:id="n1" name="b"/>
  </nodes>
</Graph>
)";
    CHECK_THROWS_WITH_AS(read_model(text, corpus::simple_graph_mm()),
                         doctest::Contains("duplicate element id"), ParseError);
}

TEST_CASE("an edge without a src attribute reads as dangling") {
    const char* text = R"(<Graph xmi:id="g">
  <nodes>
    <Node xmi:id="n1" name="a"/>
  </nodes>
  <edges>
    <Edge xmi:id="e1" trg="n1"/>
  </edges>
</Graph>
)";
    Model m = read_model(text, corpus::simple_graph_mm());
    CHECK_FALSE(m.require("e1").has_ref("src"));
    CHECK(m.require("e1").ref("trg").front() == "n1");
    CHECK(validate_model(m, corpus::simple_graph_mm()).empty());
}

TEST_CASE("reader rejects malformed documents") {
    const Metamodel& mm = corpus::simple_graph_mm();
    CHECK_THROWS_WITH_AS(read_model("<Node name=\"a\"/>\n", mm), doctest::Contains("xmi:id"),
                         ParseError);
    CHECK_THROWS_WITH_AS(read_model("<Edge xmi:id=\"e\" src=\"nope\"/>\n", mm),
                         doctest::Contains("resolves to nothing"), ParseError);
    CHECK_THROWS_WITH_AS(read_model("<Vertex xmi:id=\"v\"/>\n", mm),
                         doctest::Contains("not in metamodel"), ParseError);
    CHECK_THROWS_AS(read_model("<Node xmi:id=\"n\">text</Node>\n", mm), ParseError);
    CHECK_THROWS_AS(read_model("<Node xmi:id=\"n\"></Edge>\n", mm), ParseError);
    CHECK_THROWS_AS(read_model("<Node xmi:id=\"n\" color=\"red\"/>\n", mm), ParseError);
}

TEST_CASE("multi-root and empty models use the wrapper element") {
    const Metamodel& mm = corpus::simple_graph_mm();
    Model empty(mm);
    CHECK(write_xmi(empty) == "<model/>\n");
    CHECK(read_model(write_xmi(empty), mm) == empty);

    Model two(mm);
    two.add_element("a", "Graph");
    two.add_element("b", "Graph");
    std::string text = write_xmi(two);
    CHECK(text.find("<model>") == 0);
    CHECK(read_model(text, mm) == two);
}

TEST_CASE("html rendering follows the fixed template") {
    Metamodel mm = parse_metamodel(corpus::read_file(test::corpus_dir() / "metamodels" /
                                                     "HtmlMetaModel.mm"));
    Model m(mm);
    m.add_element("h", "Html");
    m.set_attr("h", "title", Value("Hello"));
    m.add_element("p1", "Paragraph");
    m.set_attr("p1", "text", Value("Hello TTC Participants"));
    m.set_ref("h", "body", {"p1"});

    std::string page = write_html(m);
    CHECK(page ==
          "<html><head><title>Hello</title></head><body><p>Hello TTC Participants</p></body>"
          "</html>\n");

    SUBCASE("empty body renders an empty body element") {
        m.set_ref("h", "body", {});
        m.erase_element("p1"); // an unparented paragraph would be a second root
        CHECK(write_html(m) ==
              "<html><head><title>Hello</title></head><body></body></html>\n");
    }
}

TEST_CASE("html mode rejects non-Html models") {
    Model g1 = corpus::reference_graph_g1();
    CHECK_THROWS_WITH_AS(write_model(g1, OutputFormat::Html), doctest::Contains("Html"),
                         EngineError);
}

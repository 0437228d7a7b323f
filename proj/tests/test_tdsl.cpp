#include "doctest.h"
#include "relq/natives.hpp"
#include "relq/tdsl.hpp"
#include "support.hpp"

using namespace relq;

namespace {

std::string task_text(const std::string& file) {
    return corpus::read_file(test::corpus_dir() / "tasks" / file);
}

Metamodel load_mm(const std::string& name) {
    return parse_metamodel(corpus::read_file(test::corpus_dir() / "metamodels" / (name + ".mm")));
}

// Minimal valid scaffold used by the negative tests.
std::string wrap(const std::string& body, const std::string& extra_config = "") {
    return "transformation T {\n"
           "  config { source SimpleGraph key xmi:id as s; target SimpleGraph key xmi:id as t; " +
           extra_config + " }\n" + body + "\n}\n";
}

} // namespace

TEST_CASE("the reverse task parses to three top relations") {
    Transformation t = parse_transformation(task_text("reverse.tdsl"));
    CHECK(t.name == "TTC_ReverseEdges");
    REQUIRE(t.relations.size() == 3);
    CHECK(t.queries.empty());
    CHECK(t.natives.empty());
    for (const auto& r : t.relations) CHECK(r.is_top);
    const Relation* edge = t.find_relation("EdgeToEdge");
    REQUIRE(edge);
    REQUIRE(edge->source);
    CHECK(edge->source->root.class_name == "Graph");
    CHECK(edge->source->root.var_name == "g");
    REQUIRE(edge->source->root.slots.size() == 1);
    CHECK(edge->source->root.slots[0].first == "edges");
}

TEST_CASE("the count task parses to 2 relations, 5 queries, 2 natives") {
    Transformation t = parse_transformation(task_text("count.tdsl"));
    CHECK(t.relations.size() == 2);
    CHECK(t.queries.size() == 5);
    CHECK(t.natives.size() == 2);
    const Relation* show = t.find_relation("ShowIntResult");
    REQUIRE(show);
    CHECK_FALSE(show->is_top);
    CHECK_FALSE(show->source.has_value());
    REQUIRE(show->target.has_value());
    CHECK(show->params.size() == 2);
    CHECK(show->call_signature() == std::vector<std::string>{"rs", "v", "d"});
}

TEST_CASE("parse determinism: identical text yields identical structure") {
    for (const auto& fx : corpus::task_fixtures()) {
        std::string text = task_text(fx.tdsl_file);
        CHECK(parse_transformation(text).dump() == parse_transformation(text).dump());
    }
}

TEST_CASE("every corpus task checks cleanly against its metamodels") {
    for (const auto& fx : corpus::task_fixtures()) {
        CAPTURE(fx.id);
        Transformation t = parse_transformation(task_text(fx.tdsl_file));
        Metamodel src = load_mm(t.config.source_mm);
        Metamodel trg = load_mm(t.config.target_mm);
        auto diags = check_transformation(t, src, trg);
        for (const auto& d : diags) CAPTURE(to_string(d));
        CHECK(diags.empty());
    }
}

TEST_CASE("unknown relation in a where clause is a parse error") {
    CHECK_THROWS_WITH_AS(
        parse_transformation(wrap(R"(
  top relation R {
    domain s g:Graph { };
    domain t g:Graph { };
    where { call Nope(g); }
  })")),
        doctest::Contains("unknown relation 'Nope'"), ParseError);
}

TEST_CASE("diff markers outside in-place mode are a parse error") {
    CHECK_THROWS_WITH_AS(parse_transformation(wrap(R"(
  top relation R {
    domain s n:Node { };
    domain t n:Node { } diff remove;
  })")),
                         doctest::Contains("in-place"), ParseError);
}

TEST_CASE("where definitions cannot shadow existing variables") {
    CHECK_THROWS_WITH_AS(parse_transformation(wrap(R"(
  top relation R {
    domain s g:Graph { };
    domain t g:Graph { };
    where { g = g.nodes.size(); }
  })")),
                         doctest::Contains("shadows"), ParseError);
}

TEST_CASE("unbound variables in clauses are parse errors") {
    CHECK_THROWS_WITH_AS(parse_transformation(wrap(R"(
  top relation R {
    domain s g:Graph { };
    domain t g:Graph { };
    when { mystery.isEmpty(); }
  })")),
                         doctest::Contains("used before bound"), ParseError);
    CHECK_THROWS_WITH_AS(parse_transformation(wrap(R"(
  top relation R {
    domain s g:Graph { };
    domain t h:Graph { nodes = n:Node { name = ghost; }; };
  })")),
                         doctest::Contains("used before bound"), ParseError);
}

TEST_CASE("a transformation needs a top-level relation") {
    CHECK_THROWS_WITH_AS(parse_transformation(wrap(R"(
  relation R {
    domain s g:Graph { };
    domain t g:Graph { };
  })")),
                         doctest::Contains("top-level"), ParseError);
}

TEST_CASE("call arity is checked at parse time") {
    CHECK_THROWS_WITH_AS(parse_transformation(wrap(R"(
  top relation R {
    domain s g:Graph { };
    domain t g:Graph { };
    where { call S(g, g); }
  }
  relation S {
    domain s h:Graph { };
    domain t h:Graph { };
  })")),
                         doctest::Contains("expects 1 arguments"), ParseError);
}

TEST_CASE("in-place transformations need matching metamodels") {
    CHECK_THROWS_AS(parse_transformation(
                        "transformation T { config { source SimpleGraph key xmi:id as s; "
                        "target Result key xmi:id as t; inplace; } top relation R { domain s "
                        "g:Graph { }; domain t r:ResultSet { }; } }"),
                    ParseError);
}

TEST_CASE("config parameters must be primitive") {
    CHECK_THROWS_WITH_AS(
        parse_transformation(wrap("  top relation R { domain s g:Graph { }; domain t g:Graph "
                                  "{ }; }",
                                  "param p: Node;")),
        doctest::Contains("primitive"), ParseError);
}

TEST_CASE("checker flags unknown classes, bad literals, and bad natives") {
    Metamodel sg = load_mm("SimpleGraph");

    Transformation t = parse_transformation(wrap(R"(
  top relation R {
    domain s v:Vertex { };
    domain t g:Graph { };
  })"));
    auto diags = check_transformation(t, sg, sg);
    REQUIRE(diags.size() == 1);
    CHECK(diags[0].message.find("Vertex") != std::string::npos);

    t = parse_transformation(wrap(R"(
  top relation R {
    domain s n:Node { name = 42; };
    domain t g:Graph { };
  })"));
    diags = check_transformation(t, sg, sg);
    REQUIRE(diags.size() == 1);
    CHECK(diags[0].message.find("literal 42 in string attribute slot") != std::string::npos);

    t = parse_transformation(wrap(R"(
  native NoSuchFunction;
  top relation R {
    domain s g:Graph { };
    domain t g:Graph { };
  })"));
    diags = check_transformation(t, sg, sg);
    REQUIRE(diags.size() == 1);
    CHECK(diags[0].where == "native NoSuchFunction");
}

TEST_CASE("checker flags nested templates under multi-valued non-containment refs") {
    Metamodel more = load_mm("MoreEvolvedGraph");
    Transformation t = parse_transformation(
        "transformation T { config { source MoreEvolvedGraph key xmi:id as s; target "
        "MoreEvolvedGraph key xmi:id as t; } top relation R { domain s n:Node { linksTo = "
        "m:Node { }; }; domain t n:Node { }; } }");
    auto diags = check_transformation(t, more, more);
    REQUIRE(diags.size() == 1);
    CHECK(diags[0].message.find("non-containment") != std::string::npos);
}

TEST_CASE("checker reports config/metamodel mismatches") {
    Metamodel sg = load_mm("SimpleGraph");
    Metamodel result = load_mm("Result");
    Transformation t = parse_transformation(task_text("reverse.tdsl"));
    auto diags = check_transformation(t, sg, result);
    CHECK(!diags.empty());
}

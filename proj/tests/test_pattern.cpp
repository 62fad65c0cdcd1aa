#include <catch2/catch_amalgamated.hpp>

#include "bagsem/pattern_parser.hpp"

using namespace bagsem;
using namespace bagsem::sparql;
using rdf::Term;

TEST_CASE("triple pattern parse and positional rules") {
    PatternPtr p = parse_pattern("{ ?x <p> ?y }");
    REQUIRE(p->kind == GraphPattern::Kind::Triple);
    CHECK(dom(p) == std::set<Variable>{Variable("x"), Variable("y")});
    // literal subject is allowed in patterns, literal predicate is not
    CHECK_NOTHROW(parse_pattern("{ \"s\" <p> ?y }"));
    CHECK_THROWS_AS(parse_pattern("{ ?x \"p\" ?y }"), ValidationError);
    CHECK_THROWS_AS(parse_pattern("{ <a> <p> <b> }"), ValidationError);  // no variable
}

TEST_CASE("dot chains triples inside braces") {
    PatternPtr p = parse_pattern("{ ?x <p> ?y . ?y <q> ?z }");
    REQUIRE(p->kind == GraphPattern::Kind::And);
    CHECK(p->left->kind == GraphPattern::Kind::Triple);
    CHECK(p->right->kind == GraphPattern::Kind::Triple);
}

TEST_CASE("binary operators are left-associative") {
    PatternPtr p = parse_pattern("{ ?x <p> ?y } UNION { ?x <q> ?y } UNION { ?x <r> ?y }");
    REQUIRE(p->kind == GraphPattern::Kind::Union);
    CHECK(p->left->kind == GraphPattern::Kind::Union);
    CHECK(p->right->kind == GraphPattern::Kind::Triple);
}

TEST_CASE("filter binds as a postfix to the nearest pattern") {
    PatternPtr p = parse_pattern("{ ?x <p> ?y } FILTER (?y = <a>) FILTER (bound(?x))");
    REQUIRE(p->kind == GraphPattern::Kind::Filter);
    CHECK(p->left->kind == GraphPattern::Kind::Filter);
}

TEST_CASE("select takes a variable list") {
    PatternPtr p = parse_pattern("SELECT ?x { ?x <p> ?y }");
    REQUIRE(p->kind == GraphPattern::Kind::Select);
    CHECK(p->projection == std::set<Variable>{Variable("x")});
    // zero-variable projection is legal
    PatternPtr z = parse_pattern("SELECT ({ ?x <p> ?y })");
    CHECK(z->kind == GraphPattern::Kind::Select);
    CHECK(z->projection.empty());
    CHECK(dom(z).empty());
}

TEST_CASE("constraint grammar honors precedence") {
    ConstraintPtr c = parse_constraint("?x = <a> || ?y = <b> && !bound(?z)");
    REQUIRE(c->kind == FilterConstraint::Kind::Or);
    CHECK(c->rhs->kind == FilterConstraint::Kind::And);
    CHECK(c->rhs->rhs->kind == FilterConstraint::Kind::Not);
}

TEST_CASE("domains follow the operator table") {
    auto d = [](const char* q) { return dom(parse_pattern(q)); };
    std::set<Variable> xy{Variable("x"), Variable("y")};
    std::set<Variable> xyz{Variable("x"), Variable("y"), Variable("z")};
    CHECK(d("{ ?x <p> ?y } AND { ?y <q> ?z }") == xyz);
    CHECK(d("{ ?x <p> ?y } UNION { ?x <q> ?z }") == xyz);
    CHECK(d("{ ?x <p> ?y } OPT { ?y <q> ?z }") == xyz);
    CHECK(d("{ ?x <p> ?y } MINUS { ?y <q> ?z }") == xy);
    CHECK(d("{ ?x <p> ?y } DIFF { ?y <q> ?z }") == xy);
    CHECK(d("{ ?x <p> ?y } EXCEPTSTAR { ?y <q> ?z }") == xy);
    CHECK(d("SELECT ?x { ?x <p> ?y }") == std::set<Variable>{Variable("x")});
    CHECK(d("{ ?x <p> ?y } FILTER (?x = ?y)") == xy);
}

TEST_CASE("well-formedness violations name the offending variable") {
    // filter variable outside dom
    try {
        parse_pattern("{ ?x <p> ?y } FILTER (?z = <a>)");
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring("?z"));
        CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring("outside the domain"));
    }
    // select variable outside dom
    CHECK_THROWS_AS(parse_pattern("SELECT ?z { ?x <p> ?y }"), ValidationError);
    // EXCEPT needs equal domains
    CHECK_THROWS_AS(parse_pattern("{ ?x <p> ?y } EXCEPT { ?x <q> ?z }"), ValidationError);
    CHECK_NOTHROW(parse_pattern("{ ?x <p> ?y } EXCEPT { ?y <q> ?x }"));
    // projected-away variable no longer filterable
    CHECK_THROWS_AS(parse_pattern("(SELECT ?x { ?x <p> ?y }) FILTER (?y = <a>)"),
                    ValidationError);
}

TEST_CASE("filters on union-padded variables are well-formed") {
    // ?z is in dom but not bound by the left branch; this must be legal
    CHECK_NOTHROW(parse_pattern("({ ?x <p> ?y } UNION { ?x <q> ?z }) FILTER (?z = <a>)"));
}

TEST_CASE("render and reparse is the identity") {
    const char* queries[] = {
        "{ ?x <p> ?y }",
        "{ \"s\" <p> ?y }",
        "{ ?x <p> \"a b\" } AND { ?x <q> ?z }",
        "({ ?x <p> ?y } UNION { ?x <q> ?z }) FILTER (!(?z = <a>) && bound(?y))",
        "SELECT ?x (({ ?x <p> ?y } OPT { ?y <q> ?z }) MINUS { ?x <r> ?w })",
        "{ ?x <p> ?y } DIFF { ?y <q> ?x }",
        "{ ?x <p> ?y } EXCEPTSTAR (SELECT ?y { ?y <q> ?z })",
        "SELECT ({ ?x <p> ?y })",
        "{ ?x <p> ?y } FILTER (?x = ?y || ?y = \"v\")",
    };
    for (const char* q : queries) {
        PatternPtr p = parse_pattern(q);
        PatternPtr again = parse_pattern(render(p));
        CHECK(pattern_equal(p, again));
    }
}

TEST_CASE("f_of preserves constraint structure") {
    ConstraintPtr c = parse_constraint("!(?x = ?y) && (bound(?x) || ?y = <a>)");
    FormulaPtr f = f_of(c);
    Mapping m;
    m.bind(Variable("x"), Term::iri("a"));
    m.bind(Variable("y"), Term::iri("b"));
    CHECK(eval_formula(m, f) == ThreeValued::True);
}

TEST_CASE("var collects filter and projection variables") {
    PatternPtr p = parse_pattern("SELECT ?x ({ ?x <p> ?y } FILTER (?y = ?x))");
    CHECK(all_vars(p) == std::set<Variable>{Variable("x"), Variable("y")});
}

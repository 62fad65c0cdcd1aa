#include <catch2/catch_amalgamated.hpp>

#include "bagsem/algebra.hpp"
#include "oracle.hpp"

using namespace bagsem;
using namespace bagsem::sparql;
using rdf::Term;

namespace {

Mapping mk(std::initializer_list<std::pair<const char*, Term>> bs) {
    Mapping m;
    for (const auto& [v, t] : bs) m.bind(Variable(v), t);
    return m;
}

const Term a = Term::iri("a");
const Term b = Term::iri("b");

}  // namespace

TEST_CASE("three-valued atoms") {
    Mapping m = mk({{"X", a}});
    CHECK(eval_formula(m, SelectionFormula::eq(Variable("X"), a)) == ThreeValued::True);
    CHECK(eval_formula(m, SelectionFormula::eq(Variable("X"), b)) == ThreeValued::False);
    CHECK(eval_formula(m, SelectionFormula::eq(Variable("Y"), a)) == ThreeValued::Error);
    CHECK(eval_formula(m, SelectionFormula::eq(Variable("X"), Variable("Y"))) ==
          ThreeValued::Error);
    CHECK(eval_formula(m, SelectionFormula::bound(Variable("X"))) == ThreeValued::True);
    CHECK(eval_formula(m, SelectionFormula::bound(Variable("Y"))) == ThreeValued::False);
    CHECK(eval_formula(m, SelectionFormula::make_true()) == ThreeValued::True);
}

TEST_CASE("three-valued connectives follow dominance rules") {
    CHECK(tv_not(ThreeValued::Error) == ThreeValued::Error);
    CHECK(tv_not(ThreeValued::True) == ThreeValued::False);
    CHECK(tv_and(ThreeValued::False, ThreeValued::Error) == ThreeValued::False);
    CHECK(tv_and(ThreeValued::True, ThreeValued::Error) == ThreeValued::Error);
    CHECK(tv_and(ThreeValued::True, ThreeValued::True) == ThreeValued::True);
    CHECK(tv_or(ThreeValued::True, ThreeValued::Error) == ThreeValued::True);
    CHECK(tv_or(ThreeValued::False, ThreeValued::Error) == ThreeValued::Error);
    CHECK(tv_or(ThreeValued::False, ThreeValued::False) == ThreeValued::False);
}

TEST_CASE("join accumulates over decompositions") {
    MappingMultiset l;
    l.add(mk({{"X", a}}), 1);
    l.add(Mapping{}, 1);  // the empty mapping joins with everything
    MappingMultiset r;
    r.add(mk({{"X", a}}), 1);

    MappingMultiset expect;
    expect.add(mk({{"X", a}}), 2);
    CHECK(join(l, r) == expect);
    CHECK(join(l, r) == oracle::join_oracle(l, r));
}

TEST_CASE("projection sums coinciding restrictions") {
    MappingMultiset ms;
    ms.add(mk({{"X", a}}), 1);
    ms.add(mk({{"X", b}}), 1);
    MappingMultiset expect;
    expect.add(Mapping{}, 2);
    CHECK(project(ms, {}) == expect);
    CHECK(project(ms, {}) == oracle::project_oracle(ms, {}));
}

TEST_CASE("union adds counts") {
    MappingMultiset l, r;
    l.add(mk({{"X", a}}), 1);
    r.add(mk({{"X", a}}), 2);
    r.add(mk({{"X", b}}), 1);
    MappingMultiset u = multiset_union(l, r);
    CHECK(u.count(mk({{"X", a}})) == 3);
    CHECK(u.count(mk({{"X", b}})) == 1);
}

TEST_CASE("selection keeps only true, dropping error") {
    MappingMultiset ms;
    ms.add(mk({{"X", a}}), 2);
    ms.add(mk({{"Y", b}}), 3);  // X unbound: eq is an error, not false
    auto f = SelectionFormula::eq(Variable("X"), a);
    MappingMultiset s = select_sigma(ms, f);
    CHECK(s.count(mk({{"X", a}})) == 2);
    CHECK(s.distinct() == 1);
    // negation of an error is still an error, so the row stays out
    MappingMultiset n = select_sigma(ms, SelectionFormula::negate(f));
    CHECK(n.empty());
}

TEST_CASE("left join keeps unmatched rows with their counts") {
    MappingMultiset l, r;
    l.add(mk({{"X", a}}), 2);
    r.add(mk({{"X", a}}), 1);
    r.add(mk({{"X", b}}), 1);
    MappingMultiset out = left_join(l, r, SelectionFormula::make_true());
    MappingMultiset expect;
    expect.add(mk({{"X", a}}), 2);
    CHECK(out == expect);
    CHECK(out == oracle::left_join_oracle(l, r, SelectionFormula::make_true()));
}

TEST_CASE("minus needs a shared bound variable to cancel") {
    MappingMultiset l, r;
    l.add(mk({{"X", a}}), 1);
    r.add(mk({{"Y", b}}), 1);
    CHECK(minus(l, r) == l);  // disjoint domains: nothing cancels
    MappingMultiset r2;
    r2.add(mk({{"X", a}, {"Y", b}}), 1);
    CHECK(minus(l, r2).empty());
    // diff with True cancels on compatibility alone
    CHECK(diff(l, r, SelectionFormula::make_true()).empty());
}

TEST_CASE("algebra operators agree with copy-expansion oracles") {
    const std::vector<std::string> vars{"X", "Y", "Z"};
    oracle::TestRng rng(20260814);
    for (int i = 0; i < 300; ++i) {
        MappingMultiset l = oracle::random_multiset(rng, vars);
        MappingMultiset r = oracle::random_multiset(rng, vars);
        FormulaPtr f = oracle::random_formula(rng, vars);
        CHECK(join(l, r) == oracle::join_oracle(l, r));
        CHECK(multiset_union(l, r) == oracle::union_oracle(l, r));
        CHECK(minus(l, r) == oracle::minus_oracle(l, r));
        CHECK(diff(l, r, f) == oracle::diff_oracle(l, r, f));
        CHECK(select_sigma(l, f) == oracle::select_oracle(l, f));
        CHECK(left_join(l, r, f) == oracle::left_join_oracle(l, r, f));
        std::set<Variable> w;
        for (const auto& v : vars)
            if (rng.coin()) w.insert(Variable(v));
        CHECK(project(l, w) == oracle::project_oracle(l, w));
    }
}

TEST_CASE("join is associative and commutative on these inputs") {
    const std::vector<std::string> vars{"X", "Y"};
    oracle::TestRng rng(7);
    for (int i = 0; i < 100; ++i) {
        MappingMultiset x = oracle::random_multiset(rng, vars);
        MappingMultiset y = oracle::random_multiset(rng, vars);
        MappingMultiset z = oracle::random_multiset(rng, vars);
        CHECK(join(x, y) == join(y, x));
        CHECK(join(join(x, y), z) == join(x, join(y, z)));
        CHECK(multiset_union(x, y) == multiset_union(y, x));
    }
}

#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "bagsem/datalog.hpp"
#include "bagsem/datalog_normalize.hpp"
#include "bagsem/datalog_parser.hpp"

using namespace bagsem;
using namespace bagsem::datalog;

namespace {

Substitution sub(std::initializer_list<std::pair<std::string, std::string>> bs) {
    Substitution s;
    for (const auto& [k, v] : bs) s.emplace(k, v);
    return s;
}

Atom goal(const std::string& pred, std::initializer_list<std::string> vars) {
    Atom a{pred, {}};
    for (const auto& v : vars) a.args.push_back(DlTerm::var(v));
    return a;
}

}  // namespace

TEST_CASE("datalog parser round trips and rejects malformed input") {
    std::string src =
        "% family example\n"
        "parent(alice, bob).\n"
        "parent(alice, carol) * 3.\n"
        "tag(\"x\").\n"
        "odd('Not A Plain:ident').\n"
        "zero().\n"
        "gp(X, Z) :- parent(X, Y), parent(Y, Z).\n"
        "only(X) :- parent(X, Y), not parent(Y, X), X != Y.\n"
        "pin(X, Y) :- parent(X, Y), Y = bob.\n";
    Program p = parse_program(src);
    REQUIRE(p.rules.size() == 3);
    REQUIRE(p.facts.size() == 5);
    REQUIRE(p.facts.at(GroundFact{"parent", {"alice", "carol"}}) == 3);
    REQUIRE(p.facts.count(GroundFact{"tag", {"\"x\""}}) == 1);
    REQUIRE(p.facts.count(GroundFact{"odd", {"Not A Plain:ident"}}) == 1);

    Program again = parse_program(to_string(p));
    REQUIRE(again.rules == p.rules);
    REQUIRE(again.facts == p.facts);

    REQUIRE(to_string(p.rules[0]) == "gp(X, Z) :- parent(X, Y), parent(Y, Z).");
    REQUIRE(to_string(p.rules[1]) ==
            "only(X) :- parent(X, Y), not parent(Y, X), X != Y.");

    REQUIRE_THROWS_AS(parse_program("p(X)."), ParseError);           // non-ground fact
    REQUIRE_THROWS_AS(parse_program("p(a). p(a, b)."), ValidationError);
    REQUIRE_THROWS_AS(parse_program("P(a)."), ParseError);           // uppercase predicate
    REQUIRE_THROWS_AS(parse_program("p(not)."), ParseError);
    REQUIRE_THROWS_AS(parse_program("p(\"a)."), ParseError);
    REQUIRE_THROWS_AS(parse_program("q(X) :- ."), ParseError);
    REQUIRE_THROWS_AS(parse_program("p(a)"), ParseError);            // missing dot
}

TEST_CASE("string-tagged, raw and plain constants stay distinct") {
    Program p = parse_program("c(a). c(\"a\") * 2. c('b c').\n");
    REQUIRE(p.facts.at(GroundFact{"c", {"a"}}) == 1);
    REQUIRE(p.facts.at(GroundFact{"c", {"\"a\""}}) == 2);
    REQUIRE(p.facts.at(GroundFact{"c", {"b c"}}) == 1);
    // facts render sorted by constant text; '"' precedes letters
    REQUIRE(to_string(p) == "c(\"a\") * 2.\nc(a).\nc('b c').\n");

    Program esc = parse_program("e('it\\'s', \"a\\\"b\", 'x\\ny').\n");
    REQUIRE(esc.facts.count(GroundFact{"e", {"it's", "\"a\"b\"", "x\ny"}}) == 1);
    Program esc2 = parse_program(to_string(esc));
    REQUIRE(esc2.facts == esc.facts);
}

TEST_CASE("safety check finds every unbound variable") {
    auto violations = [](const std::string& src) {
        return check_safe(parse_program(src));
    };
    REQUIRE(violations("q(X) :- p(X).").empty());
    REQUIRE(violations("q(X, Y) :- p(X), Y = c.").empty());
    REQUIRE(violations("q(X, Y) :- p(X), Y = Z, Z = X.").empty());
    REQUIRE(violations("q(X) :- p(X), not r(X), X != a.").empty());

    REQUIRE(violations("q(X, Y) :- p(X).") ==
            std::vector<std::string>{"rule 1: unsafe variable Y"});
    REQUIRE(violations("q(X) :- p(X), not r(Y).") ==
            std::vector<std::string>{"rule 1: unsafe variable Y"});
    REQUIRE(violations("q(X) :- p(X), X != Y.") ==
            std::vector<std::string>{"rule 1: unsafe variable Y"});
    // equality to a variable that is itself unsafe does not help
    REQUIRE(violations("q(X) :- p(X), Y = Z.").size() == 2);
}

TEST_CASE("recursion detection reports a predicate cycle") {
    REQUIRE(check_nonrecursive(parse_program("q(X) :- p(X). r(X) :- q(X).")));
    REQUIRE_FALSE(check_nonrecursive(parse_program("q(X) :- q(X).")));
    auto cycle = find_predicate_cycle(
        parse_program("a(X) :- b(X). b(X) :- c(X). c(X) :- a(X)."));
    REQUIRE(cycle.has_value());
    REQUIRE(cycle->size() == 3);
    // negative edges count too
    REQUIRE_FALSE(check_nonrecursive(parse_program("a(X) :- p(X), not b(X). b(X) :- a(X).")));
}

TEST_CASE("bottom-up evaluation: unions of rules add counts") {
    Program p = parse_program("p(a) * 2. r(a) * 3. q(X) :- p(X). q(X) :- r(X).");
    auto ans = eval_program(p, goal("q", {"X"}));
    REQUIRE(ans.entries.size() == 1);
    REQUIRE(ans.count(sub({{"X", "a"}})) == 5);
}

TEST_CASE("bottom-up evaluation: joins multiply counts") {
    Program p = parse_program("p(a) * 2. p(b). q(X, Y) :- p(X), p(Y).");
    auto ans = eval_program(p, goal("q", {"X", "Y"}));
    REQUIRE(ans.entries.size() == 4);
    REQUIRE(ans.count(sub({{"X", "a"}, {"Y", "a"}})) == 4);
    REQUIRE(ans.count(sub({{"X", "a"}, {"Y", "b"}})) == 2);
    REQUIRE(ans.count(sub({{"X", "b"}, {"Y", "a"}})) == 2);
    REQUIRE(ans.count(sub({{"X", "b"}, {"Y", "b"}})) == 1);

    SECTION("goal arguments filter and unify") {
        Atom g{"q", {DlTerm::constant("a"), DlTerm::var("Y")}};
        auto partial = eval_program(p, g);
        REQUIRE(partial.entries.size() == 2);
        REQUIRE(partial.count(sub({{"Y", "a"}})) == 4);
        REQUIRE(partial.count(sub({{"Y", "b"}})) == 2);

        Atom diag{"q", {DlTerm::var("X"), DlTerm::var("X")}};
        auto d = eval_program(p, diag);
        REQUIRE(d.count(sub({{"X", "a"}})) == 4);
        REQUIRE(d.count(sub({{"X", "b"}})) == 1);
    }

    SECTION("derived relations chain") {
        Program q = parse_program(
            "p(a) * 2. p(b). q(X, Y) :- p(X), p(Y). s(X) :- q(X, X).");
        auto s = eval_program(q, goal("s", {"X"}));
        REQUIRE(s.count(sub({{"X", "a"}})) == 4);
        REQUIRE(s.count(sub({{"X", "b"}})) == 1);
    }
}

TEST_CASE("bottom-up evaluation: repeated literal squares the count") {
    Program p = parse_program("p(a) * 3. q(X) :- p(X), p(X).");
    auto ans = eval_program(p, goal("q", {"X"}));
    REQUIRE(ans.count(sub({{"X", "a"}})) == 9);
}

TEST_CASE("bottom-up evaluation: negation tests presence only") {
    Program p = parse_program("p(a) * 3. p(b) * 2. r(b) * 5. q(X) :- p(X), not r(X).");
    auto ans = eval_program(p, goal("q", {"X"}));
    REQUIRE(ans.entries.size() == 1);
    REQUIRE(ans.count(sub({{"X", "a"}})) == 3);
}

TEST_CASE("bottom-up evaluation: equality and inequality atoms") {
    Program base = parse_program("p(a) * 2. p(b).");
    SECTION("variable pinned to a constant") {
        Program p = base;
        p.add_rule(parse_program("q(X, Y) :- p(X), Y = c.").rules[0]);
        auto ans = eval_program(p, goal("q", {"X", "Y"}));
        REQUIRE(ans.count(sub({{"X", "a"}, {"Y", "c"}})) == 2);
        REQUIRE(ans.count(sub({{"X", "b"}, {"Y", "c"}})) == 1);
    }
    SECTION("variable-to-variable equality") {
        Program p = base;
        p.add_rule(parse_program("q(X, Y) :- p(X), X = Y.").rules[0]);
        auto ans = eval_program(p, goal("q", {"X", "Y"}));
        REQUIRE(ans.entries.size() == 2);
        REQUIRE(ans.count(sub({{"X", "a"}, {"Y", "a"}})) == 2);
    }
    SECTION("unsatisfiable equality kills the rule") {
        Program p = base;
        p.add_rule(parse_program("q(X) :- p(X), a = b.").rules[0]);
        REQUIRE(eval_program(p, goal("q", {"X"})).entries.empty());
    }
    SECTION("inequality filters joined pairs") {
        Program p = base;
        p.add_rule(parse_program("q(X, Y) :- p(X), p(Y), X != Y.").rules[0]);
        auto ans = eval_program(p, goal("q", {"X", "Y"}));
        REQUIRE(ans.entries.size() == 2);
        REQUIRE(ans.count(sub({{"X", "a"}, {"Y", "b"}})) == 2);
        REQUIRE(ans.count(sub({{"X", "b"}, {"Y", "a"}})) == 2);
    }
}

TEST_CASE("bottom-up evaluation: zero-ary predicates multiply in") {
    Program p = parse_program("t() * 4. p(a) * 2. q(X) :- p(X), t().");
    auto ans = eval_program(p, goal("q", {"X"}));
    REQUIRE(ans.count(sub({{"X", "a"}})) == 8);
}

TEST_CASE("bottom-up evaluation: repeated variable inside one literal") {
    Program p = parse_program("s(a, a) * 2. s(a, b). q(X) :- s(X, X).");
    auto ans = eval_program(p, goal("q", {"X"}));
    REQUIRE(ans.entries.size() == 1);
    REQUIRE(ans.count(sub({{"X", "a"}})) == 2);
}

TEST_CASE("evaluation rejects unsafe and recursive programs") {
    REQUIRE_THROWS_AS(
        eval_program(parse_program("q(X, Y) :- p(X)."), goal("q", {"X", "Y"})),
        ValidationError);
    REQUIRE_THROWS_AS(eval_program(parse_program("q(X) :- q(X)."), goal("q", {"X"})),
                      ValidationError);
}

TEST_CASE("join count fault is observable") {
    Program p = parse_program("p(a) * 2. p(b). q(X, Y) :- p(X), p(Y).");
    EvalOptions bad;
    bad.fault = EvalOptions::Fault::AddJoinCounts;
    auto ans = eval_program(p, goal("q", {"X", "Y"}), bad);
    REQUIRE(ans.count(sub({{"X", "a"}, {"Y", "a"}})) == 5);
    REQUIRE(ans != eval_program(p, goal("q", {"X", "Y"})));
}

TEST_CASE("derivation tree enumeration matches bottom-up counts on fixtures") {
    auto both_agree = [](const std::string& src, const Atom& g) {
        Program p = parse_program(src);
        auto fast = eval_program(p, g);
        auto slow = enumerate_derivation_trees(p, g);
        REQUIRE(fast == slow);
        return fast;
    };
    both_agree("p(a) * 2. r(a) * 3. q(X) :- p(X). q(X) :- r(X).", goal("q", {"X"}));
    both_agree("p(a) * 2. p(b). q(X, Y) :- p(X), p(Y).", goal("q", {"X", "Y"}));
    both_agree("p(a) * 3. q(X) :- p(X), p(X).", goal("q", {"X"}));
    both_agree("p(a) * 3. p(b) * 2. r(b) * 5. q(X) :- p(X), not r(X).", goal("q", {"X"}));
    both_agree("p(a) * 2. p(b). q(X, Y) :- p(X), p(Y), X != Y.", goal("q", {"X", "Y"}));
    both_agree("t() * 4. p(a) * 2. q(X) :- p(X), t().", goal("q", {"X"}));
    both_agree("p(a). q(c) :- p(X).", goal("q", {"Z"}));
    auto neg = both_agree("p(a). d(X) :- p(X), not m(X). m(X) :- p(X), X != a.",
                          goal("d", {"X"}));
    REQUIRE(neg.count(sub({{"X", "a"}})) == 1);
}

TEST_CASE("derivation tree enumeration honors its budget") {
    Program p = parse_program(
        "p(a). p(b). p(c). q(X,Y,Z) :- p(X), p(Y), p(Z). r(X,Y,Z) :- q(X,Y,Z), q(Y,Z,X).");
    REQUIRE_THROWS_AS(enumerate_derivation_trees(p, goal("r", {"X", "Y", "Z"}), 50),
                      BudgetError);
    REQUIRE_NOTHROW(enumerate_derivation_trees(p, goal("r", {"X", "Y", "Z"})));
}

TEST_CASE("rule shapes are recognized") {
    auto shape = [](const std::string& src) {
        return shape_of(parse_program(src).rules[0]);
    };
    REQUIRE(shape("q(X) :- p(X, Y).") == RuleShape::Projection);
    REQUIRE(shape("q() :- p(X).") == RuleShape::Projection);
    REQUIRE(shape("q(X) :- p(X, Y), X != Y.") == RuleShape::Selection);
    REQUIRE(shape("q(X) :- p(X, Y), X = a, Y != b.") == RuleShape::Selection);
    REQUIRE(shape("q(X, Y) :- p(X), r(Y).") == RuleShape::Join);
    REQUIRE(shape("q(X) :- p(X), r(X).") == RuleShape::Join);
    REQUIRE(shape("q(X, Y) :- p(X, Y), not r(Y).") == RuleShape::Negation);

    REQUIRE(shape("q(X) :- p(X), r(X), s(X).") == RuleShape::None);
    REQUIRE(shape("q(X) :- p(X), not r(X), X != a.") == RuleShape::None);
    REQUIRE(shape("q(X) :- p(X), Y = a.") == RuleShape::None);        // cmp var outside
    REQUIRE(shape("q(X) :- p(X), r(X), not s(X).") == RuleShape::None);
    REQUIRE(shape("q(X, Y) :- p(X), r(Y), not s(X).") == RuleShape::None);
    REQUIRE(shape("q(X) :- p(X), b != c.") == RuleShape::None);       // ground cmp
    REQUIRE(shape("q(X) :- p(X), X = X.") == RuleShape::None);        // trivial cmp
    REQUIRE(shape("q(X, Y) :- p(X), r(Y), s(Y).") == RuleShape::None);
}

TEST_CASE("normalize: mixed rule unfolds into the four shapes, text frozen") {
    Program p = parse_program(
        "e1(a). e1(b) * 2. e2(a, b). e2(b, b) * 3. e3(a).\n"
        "big(X) :- e1(X), e2(X, Y), X != Y, not e3(Y).\n");
    Program n = normalize(p);
    REQUIRE(check_normalized(n).empty());
    REQUIRE(to_string(n) ==
            "e1(a).\n"
            "e1(b) * 2.\n"
            "e2(a, b).\n"
            "e2(b, b) * 3.\n"
            "e3(a).\n"
            "q1(X, Y) :- e1(X), e2(X, Y).\n"
            "q2(X, Y) :- q1(X, Y), X != Y.\n"
            "q3(X, Y) :- q2(X, Y), not e3(Y).\n"
            "big(X) :- q3(X, Y).\n");
    auto before = eval_program(p, goal("big", {"X"}));
    auto after = eval_program(n, goal("big", {"X"}));
    REQUIRE(before == after);
    REQUIRE(after.count(sub({{"X", "a"}})) == 1);
}

TEST_CASE("normalize: equality substitution and unsatisfiable rules") {
    SECTION("variable pinned to constant moves into the head") {
        Program p = parse_program("e1(a). e1(b) * 2. qq(X, Y) :- e1(X), Y = c.");
        Program n = normalize(p);
        REQUIRE(check_normalized(n).empty());
        REQUIRE(to_string(n.rules[0]) == "qq(X, c) :- e1(X).");
        REQUIRE(eval_program(p, goal("qq", {"X", "Y"})) ==
                eval_program(n, goal("qq", {"X", "Y"})));
    }
    SECTION("equality among bound variables becomes a selection") {
        Program p = parse_program("e2(a, b). e2(c, c) * 2. q(X) :- e2(X, Y), X = Y.");
        Program n = normalize(p);
        REQUIRE(check_normalized(n).empty());
        auto ans = eval_program(n, goal("q", {"X"}));
        REQUIRE(ans.entries.size() == 1);
        REQUIRE(ans.count(sub({{"X", "c"}})) == 2);
    }
    SECTION("contradictory equalities drop a rewritten rule") {
        Program p = parse_program("e1(a). q(X) :- e1(X), e1(Y), X = a, X = b.");
        Program n = normalize(p);
        REQUIRE(n.rules.empty());
    }
    SECTION("an already-shaped unsatisfiable selection stays but yields nothing") {
        Program p = parse_program("e1(a). q(X) :- e1(X), X = a, X = b.");
        Program n = normalize(p);
        REQUIRE(n.rules.size() == 1);
        REQUIRE(eval_program(n, goal("q", {"X"})).entries.empty());
    }
    SECTION("ground inequality is evaluated statically") {
        Program t = normalize(parse_program("e1(a). q(X) :- e1(X), b != c."));
        REQUIRE(check_normalized(t).empty());
        REQUIRE(eval_program(t, goal("q", {"X"})).count(sub({{"X", "a"}})) == 1);
        Program f = normalize(parse_program("e1(a). q(X) :- e1(X), b != b."));
        REQUIRE(f.rules.empty());
    }
}

TEST_CASE("normalize: rule with no positive literal gets a unit fact") {
    Program p = parse_program("e3(b). yes() :- not e3(a).");
    Program n = normalize(p);
    REQUIRE(check_normalized(n).empty());
    auto ans = eval_program(n, Atom{"yes", {}});
    REQUIRE(ans.count({}) == 1);
    REQUIRE(eval_program(p, Atom{"yes", {}}) == ans);

    Program blocked = normalize(parse_program("e3(a). yes() :- not e3(a)."));
    REQUIRE(eval_program(blocked, Atom{"yes", {}}).entries.empty());
}

TEST_CASE("normalize: colliding final rules keep separate derivation paths") {
    Program p = parse_program(
        "p(a) * 2.\n"
        "q(X) :- p(X).\n"
        "q(X) :- p(X), X = X.\n"
        "q(X) :- p(X), a = a.\n");
    REQUIRE(p.rules.size() == 3);
    auto before = eval_program(p, goal("q", {"X"}));
    REQUIRE(before.count(sub({{"X", "a"}})) == 6);
    Program n = normalize(p);
    REQUIRE(check_normalized(n).empty());
    REQUIRE(eval_program(n, goal("q", {"X"})) == before);
}

TEST_CASE("normalize: dropping inequalities is observable") {
    Program p = parse_program("p(a). p(b). q(X, Y) :- p(X), p(Y), X != Y.");
    NormalizeOptions bad;
    bad.drop_inequalities = true;
    Program broken = normalize(p, bad);
    auto good = eval_program(normalize(p), goal("q", {"X", "Y"}));
    auto faulty = eval_program(broken, goal("q", {"X", "Y"}));
    REQUIRE(good == eval_program(p, goal("q", {"X", "Y"})));
    REQUIRE(faulty != good);
    REQUIRE(faulty.count(sub({{"X", "a"}, {"Y", "a"}})) == 1);
}

namespace {

// Small random programs: layered derived predicates over a few base facts,
// safe and non-recursive by construction.
struct MiniGen {
    std::mt19937_64 rng;
    explicit MiniGen(unsigned long long seed) : rng(seed) {}

    size_t below(size_t n) { return std::uniform_int_distribution<size_t>(0, n - 1)(rng); }
    bool coin() { return below(2) == 0; }

    Program gen() {
        Program p;
        std::vector<std::string> consts = {"a", "b", "c"};
        std::vector<std::pair<std::string, size_t>> preds;  // name, arity
        for (size_t i = 0; i < 2 + below(2); ++i) {
            std::string name = "e" + std::to_string(i + 1);
            size_t arity = 1 + below(2);
            preds.emplace_back(name, arity);
            size_t nfacts = 1 + below(3);
            for (size_t f = 0; f < nfacts; ++f) {
                Tuple t;
                for (size_t k = 0; k < arity; ++k) t.push_back(consts[below(consts.size())]);
                p.add_fact(GroundFact{name, std::move(t)}, 1 + static_cast<Count>(below(3)));
            }
        }
        std::vector<std::string> vars = {"X", "Y", "Z", "W"};
        size_t nder = 1 + below(3);
        for (size_t d = 0; d < nder; ++d) {
            Rule r;
            size_t npos = 1 + below(2);
            std::set<std::string> bound;
            for (size_t i = 0; i < npos; ++i) {
                auto [name, arity] = preds[below(preds.size())];
                Atom a{name, {}};
                for (size_t k = 0; k < arity; ++k) {
                    if (below(4) == 0)
                        a.args.push_back(DlTerm::constant(consts[below(consts.size())]));
                    else {
                        std::string v = vars[below(vars.size())];
                        a.args.push_back(DlTerm::var(v));
                        bound.insert(v);
                    }
                }
                r.body.push_back(Literal::pos(a));
            }
            std::vector<std::string> pool(bound.begin(), bound.end());
            if (!pool.empty() && coin()) {
                DlTerm lhs = DlTerm::var(pool[below(pool.size())]);
                DlTerm rhs = coin() ? DlTerm::constant(consts[below(consts.size())])
                                    : DlTerm::var(pool[below(pool.size())]);
                r.body.push_back(coin() ? Literal::eq(lhs, rhs) : Literal::neq(lhs, rhs));
            }
            if (!pool.empty() && coin()) {
                auto [name, arity] = preds[below(preds.size())];
                Atom a{name, {}};
                for (size_t k = 0; k < arity; ++k)
                    a.args.push_back(coin()
                                         ? DlTerm::var(pool[below(pool.size())])
                                         : DlTerm::constant(consts[below(consts.size())]));
                r.body.push_back(Literal::neg(a));
            }
            std::string head = "d" + std::to_string(d + 1);
            size_t head_arity = pool.empty() ? 0 : 1 + below(std::min<size_t>(pool.size(), 2));
            Atom h{head, {}};
            for (size_t k = 0; k < head_arity; ++k)
                h.args.push_back(DlTerm::var(pool[below(pool.size())]));
            r.head = h;
            p.add_rule(std::move(r));
            preds.emplace_back(head, head_arity);
        }
        return p;
    }
};

}  // namespace

TEST_CASE("random programs: trees agree with bottom-up, normalize preserves answers") {
    MiniGen gen(20260814);
    int checked = 0;
    for (int iter = 0; iter < 200; ++iter) {
        Program p = gen.gen();
        REQUIRE(check_safe(p).empty());
        REQUIRE(check_nonrecursive(p));
        std::string target;
        size_t arity = 0;
        for (const auto& r : p.rules)
            if (r.head.pred[0] == 'd') {
                target = r.head.pred;
                arity = r.head.args.size();
            }
        Atom g{target, {}};
        for (size_t i = 0; i < arity; ++i) g.args.push_back(DlTerm::var("G" + std::to_string(i)));

        auto fast = eval_program(p, g);
        INFO("program:\n" << to_string(p));
        try {
            auto slow = enumerate_derivation_trees(p, g);
            REQUIRE(fast == slow);
            ++checked;
        } catch (const BudgetError&) {
        }

        Program n = normalize(p);
        REQUIRE(check_normalized(n).empty());
        REQUIRE(eval_program(n, g) == fast);

        Program reparsed = parse_program(to_string(p));
        REQUIRE(eval_program(reparsed, g) == fast);
    }
    REQUIRE(checked > 150);
}

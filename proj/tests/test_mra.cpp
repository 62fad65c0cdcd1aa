#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "bagsem/mra.hpp"
#include "bagsem/mra_parser.hpp"

using namespace bagsem;
using namespace bagsem::mra;

namespace {

MultisetRelation rel(Schema s, std::initializer_list<std::pair<Tuple, Count>> rows) {
    MultisetRelation r(std::move(s));
    for (const auto& [t, c] : rows) r.add_row(t, c);
    return r;
}

Database sample_db() {
    Database db;
    db.emplace("r", rel({"A", "B"}, {{{"a", "b"}, 2}, {{"a", "c"}, 1}}));
    db.emplace("s", rel({"B", "C"}, {{{"b", "d"}, 3}}));
    db.emplace("t", rel({"A", "B"}, {{{"a", "b"}, 5}, {{"x", "y"}, 1}}));
    return db;
}

}  // namespace

TEST_CASE("mra join multiplies counts and appends unshared columns") {
    Database db = sample_db();
    auto out = eval_expr(db, Expr::join(Expr::base_rel("r"), Expr::base_rel("s")));
    REQUIRE(out.schema == Schema{"A", "B", "C"});
    REQUIRE(out.rows.size() == 1);
    REQUIRE(out.count({"a", "b", "d"}) == 6);

    SECTION("no shared attributes gives the full product") {
        Database db2;
        db2.emplace("p", rel({"A"}, {{{"a"}, 2}, {{"b"}, 1}}));
        db2.emplace("q", rel({"B"}, {{{"c"}, 3}}));
        auto prod = eval_expr(db2, Expr::join(Expr::base_rel("p"), Expr::base_rel("q")));
        REQUIRE(prod.schema == Schema{"A", "B"});
        REQUIRE(prod.count({"a", "c"}) == 6);
        REQUIRE(prod.count({"b", "c"}) == 3);
    }
    SECTION("all attributes shared intersects with count products") {
        auto both = eval_expr(db, Expr::join(Expr::base_rel("r"), Expr::base_rel("t")));
        REQUIRE(both.schema == Schema{"A", "B"});
        REQUIRE(both.rows.size() == 1);
        REQUIRE(both.count({"a", "b"}) == 10);
    }
}

TEST_CASE("mra projection sums coinciding rows") {
    Database db = sample_db();
    auto out = eval_expr(db, Expr::project({"A"}, Expr::base_rel("r")));
    REQUIRE(out.schema == Schema{"A"});
    REQUIRE(out.count({"a"}) == 3);

    SECTION("empty projection yields the zero-ary relation") {
        auto zero = eval_expr(db, Expr::project({}, Expr::base_rel("r")));
        REQUIRE(zero.schema.empty());
        REQUIRE(zero.count({}) == 3);
    }
    SECTION("projection can reorder columns") {
        auto swapped = eval_expr(db, Expr::project({"B", "A"}, Expr::base_rel("r")));
        REQUIRE(swapped.schema == Schema{"B", "A"});
        REQUIRE(swapped.count({"b", "a"}) == 2);
        REQUIRE(swapped.count({"c", "a"}) == 1);
    }
}

TEST_CASE("mra selection keeps matching rows with their counts") {
    Database db = sample_db();
    auto all = eval_expr(db, Expr::select(Condition::eq_const("A", "a"), Expr::base_rel("r")));
    REQUIRE(all.rows == db.at("r").rows);

    auto none = eval_expr(db, Expr::select(Condition::eq_attr("A", "B"), Expr::base_rel("r")));
    REQUIRE(none.rows.empty());

    auto mixed = eval_expr(
        db, Expr::select(Condition::conj(Condition::negate(Condition::eq_const("B", "b")),
                                         Condition::truth()),
                         Expr::base_rel("r")));
    REQUIRE(mixed.rows.size() == 1);
    REQUIRE(mixed.count({"a", "c"}) == 1);

    auto disj = eval_expr(
        db, Expr::select(Condition::disj(Condition::eq_const("B", "b"),
                                         Condition::eq_const("B", "c")),
                         Expr::base_rel("r")));
    REQUIRE(disj.rows == db.at("r").rows);
}

TEST_CASE("mra union adds counts after aligning column order") {
    Database db;
    db.emplace("r", rel({"A", "B"}, {{{"a", "b"}, 2}}));
    db.emplace("s2", rel({"B", "A"}, {{{"b", "a"}, 3}, {{"z", "w"}, 1}}));
    auto out = eval_expr(db, Expr::set_union(Expr::base_rel("r"), Expr::base_rel("s2")));
    REQUIRE(out.schema == Schema{"A", "B"});
    REQUIRE(out.count({"a", "b"}) == 5);
    REQUIRE(out.count({"w", "z"}) == 1);

    SECTION("mismatched attribute sets are rejected") {
        Database bad = sample_db();
        REQUIRE_THROWS_AS(
            eval_expr(bad, Expr::set_union(Expr::base_rel("r"), Expr::base_rel("s"))),
            ValidationError);
    }
    SECTION("the union fault adds one copy per distinct row") {
        EvalOptions opts;
        opts.union_plus_one = true;
        auto faulty = eval_expr(db, Expr::set_union(Expr::base_rel("r"), Expr::base_rel("s2")), opts);
        REQUIRE(faulty.count({"a", "b"}) == 6);
        REQUIRE(faulty.count({"w", "z"}) == 2);
        REQUIRE(faulty.rows != out.rows);
    }
}

TEST_CASE("mra difference removes every copy of tuples present on the right") {
    Database db;
    db.emplace("l", rel({"A", "B"}, {{{"a", "b"}, 2}, {{"c", "d"}, 1}}));
    db.emplace("r1", rel({"A", "B"}, {{{"a", "b"}, 5}}));
    db.emplace("r2", rel({"B", "A"}, {{{"b", "a"}, 1}}));
    auto out = eval_expr(db, Expr::except(Expr::base_rel("l"), Expr::base_rel("r1")));
    REQUIRE(out.rows.size() == 1);
    REQUIRE(out.count({"c", "d"}) == 1);

    auto permuted = eval_expr(db, Expr::except(Expr::base_rel("l"), Expr::base_rel("r2")));
    REQUIRE(permuted.rows == out.rows);
}

TEST_CASE("mra zero-ary relations behave like counters") {
    Database db;
    MultisetRelation unit{Schema{}};
    unit.add_row({}, 3);
    db.emplace("u", unit);
    db.emplace("r", rel({"A"}, {{{"a"}, 2}}));

    auto scaled = eval_expr(db, Expr::join(Expr::base_rel("u"), Expr::base_rel("r")));
    REQUIRE(scaled.schema == Schema{"A"});
    REQUIRE(scaled.count({"a"}) == 6);

    auto doubled = eval_expr(db, Expr::set_union(Expr::base_rel("u"), Expr::base_rel("u")));
    REQUIRE(doubled.count({}) == 6);

    auto gone = eval_expr(db, Expr::except(Expr::base_rel("u"), Expr::base_rel("u")));
    REQUIRE(gone.rows.empty());
}

TEST_CASE("mra expression validation") {
    Database db = sample_db();
    std::map<std::string, Schema> schemas;
    for (const auto& [n, r] : db) schemas.emplace(n, r.schema);

    REQUIRE(infer_schema(schemas, Expr::join(Expr::base_rel("r"), Expr::base_rel("s"))) ==
            Schema{"A", "B", "C"});

    REQUIRE_THROWS_AS(eval_expr(db, Expr::base_rel("nope")), ValidationError);
    REQUIRE_THROWS_AS(
        eval_expr(db, Expr::select(Condition::eq_const("Z", "a"), Expr::base_rel("r"))),
        ValidationError);
    REQUIRE_THROWS_AS(eval_expr(db, Expr::project({"C"}, Expr::base_rel("r"))),
                      ValidationError);
    REQUIRE_THROWS_AS(eval_expr(db, Expr::project({"A", "A"}, Expr::base_rel("r"))),
                      ValidationError);
    REQUIRE_THROWS_AS(infer_schema(schemas, Expr::except(Expr::base_rel("r"), Expr::base_rel("s"))),
                      ValidationError);
    REQUIRE_THROWS_AS(MultisetRelation(Schema{"lower"}), ValidationError);
}

TEST_CASE("mra database text round trips") {
    std::string src =
        "% two relations\n"
        "relation parent[A, B] {\n"
        "  (alice, bob) * 2\n"
        "  (\"x\", 'odd one') \n"
        "}\n"
        "relation unit[] { () * 3 }\n";
    Database db = parse_database(src);
    REQUIRE(db.size() == 2);
    REQUIRE(db.at("parent").count({"alice", "bob"}) == 2);
    REQUIRE(db.at("parent").count({"\"x\"", "odd one"}) == 1);
    REQUIRE(db.at("unit").count({}) == 3);

    std::string text = render(db);
    REQUIRE(parse_database(text) == db);
    REQUIRE(text ==
            "relation parent[A, B] {\n"
            "  (\"x\", 'odd one')\n"
            "  (alice, bob) * 2\n"
            "}\n"
            "relation unit[] {\n"
            "  () * 3\n"
            "}\n");

    REQUIRE_THROWS_AS(parse_database("relation r[A] { (a, b) }"), ValidationError);
    REQUIRE_THROWS_AS(parse_database("relation r[A] { (a) } relation r[A] { }"), ParseError);
    REQUIRE_THROWS_AS(parse_database("relation select[A] { }"), ParseError);
    REQUIRE_THROWS_AS(parse_database("relation r[a] { }"), ParseError);
    REQUIRE_THROWS_AS(parse_database("relation r[A] { (a"), ParseError);
}

TEST_CASE("mra expression text round trips") {
    std::string src = "project[A](join(r, select[A = b && !(B = C)](s)))";
    ExprPtr e = parse_expression(src);
    REQUIRE(render(e) == "project[A](join(r, select[(A = b) && (!(B = C))](s)))");
    REQUIRE(render(parse_expression(render(e))) == render(e));

    ExprPtr u = parse_expression("union(except(r, t), project[](s))");
    REQUIRE(render(u) == "union(except(r, t), project[](s))");

    ExprPtr c = parse_expression("select[A != b || true](r)");
    REQUIRE(render(c) == "select[(!(A = b)) || (true)](r)");

    ExprPtr q = parse_expression("select[A = 'not'](r)");
    REQUIRE(q->cond->rhs_value == "not");

    REQUIRE_THROWS_AS(parse_expression("union(r)"), ParseError);
    REQUIRE_THROWS_AS(parse_expression("select[A](r)"), ParseError);
    REQUIRE_THROWS_AS(parse_expression("project[A](r) extra"), ParseError);
    REQUIRE_THROWS_AS(parse_expression("Relation"), ParseError);
}

TEST_CASE("same_content equates relations up to column order") {
    auto a = rel({"A", "B"}, {{{"x", "y"}, 2}});
    auto b = rel({"B", "A"}, {{{"y", "x"}, 2}});
    auto c = rel({"B", "A"}, {{{"x", "y"}, 2}});
    REQUIRE(same_content(a, b));
    REQUIRE_FALSE(same_content(a, c));
    REQUIRE_FALSE(same_content(a, rel({"A", "C"}, {{{"x", "y"}, 2}})));
}

// --- reference implementation over expanded copy lists -----------------------

namespace {

struct ListRel {
    Schema schema;
    std::vector<Tuple> rows;
};

ListRel expand(const MultisetRelation& r) {
    ListRel out{r.schema, {}};
    for (const auto& [t, c] : r.rows)
        for (Count i = 0; i < c; ++i) out.rows.push_back(t);
    return out;
}

MultisetRelation recount(const ListRel& r) {
    MultisetRelation out(r.schema);
    for (const auto& t : r.rows) out.add_row(t, 1);
    return out;
}

Tuple pick_row(const Tuple& t, const std::vector<size_t>& idx) {
    Tuple out;
    for (size_t i : idx) out.push_back(t[i]);
    return out;
}

std::vector<size_t> positions(const Schema& from, const Schema& to) {
    std::vector<size_t> out;
    for (const auto& a : to)
        out.push_back(static_cast<size_t>(
            std::find(from.begin(), from.end(), a) - from.begin()));
    return out;
}

ListRel list_eval(const std::map<std::string, ListRel>& db, const ExprPtr& e) {
    switch (e->kind) {
        case Expr::Kind::Base: return db.at(e->base);
        case Expr::Kind::Select: {
            ListRel in = list_eval(db, e->left);
            std::map<std::string, size_t> index;
            for (size_t i = 0; i < in.schema.size(); ++i) index[in.schema[i]] = i;
            ListRel out{in.schema, {}};
            for (const auto& t : in.rows)
                if (eval_condition(e->cond, index, t)) out.rows.push_back(t);
            return out;
        }
        case Expr::Kind::Project: {
            ListRel in = list_eval(db, e->left);
            auto idx = positions(in.schema, e->attrs);
            ListRel out{e->attrs, {}};
            for (const auto& t : in.rows) out.rows.push_back(pick_row(t, idx));
            return out;
        }
        case Expr::Kind::Join: {
            ListRel l = list_eval(db, e->left);
            ListRel r = list_eval(db, e->right);
            Schema out_schema = l.schema;
            std::vector<size_t> extra;
            std::vector<std::pair<size_t, size_t>> shared;
            for (size_t j = 0; j < r.schema.size(); ++j) {
                auto pos = std::find(l.schema.begin(), l.schema.end(), r.schema[j]);
                if (pos == l.schema.end()) {
                    out_schema.push_back(r.schema[j]);
                    extra.push_back(j);
                } else {
                    shared.emplace_back(static_cast<size_t>(pos - l.schema.begin()), j);
                }
            }
            ListRel out{out_schema, {}};
            for (const auto& lt : l.rows)
                for (const auto& rt : r.rows) {
                    bool ok = true;
                    for (auto [li, ri] : shared)
                        if (lt[li] != rt[ri]) { ok = false; break; }
                    if (!ok) continue;
                    Tuple nt = lt;
                    for (size_t j : extra) nt.push_back(rt[j]);
                    out.rows.push_back(std::move(nt));
                }
            return out;
        }
        case Expr::Kind::Union: {
            ListRel l = list_eval(db, e->left);
            ListRel r = list_eval(db, e->right);
            auto idx = positions(r.schema, l.schema);
            ListRel out = l;
            for (const auto& t : r.rows) out.rows.push_back(pick_row(t, idx));
            return out;
        }
        case Expr::Kind::Except: {
            ListRel l = list_eval(db, e->left);
            ListRel r = list_eval(db, e->right);
            auto idx = positions(r.schema, l.schema);
            std::set<Tuple> present;
            for (const auto& t : r.rows) present.insert(pick_row(t, idx));
            ListRel out{l.schema, {}};
            for (const auto& t : l.rows)
                if (!present.count(t)) out.rows.push_back(t);
            return out;
        }
    }
    throw Error("unreachable");
}

struct ExprGen {
    std::mt19937_64 rng;
    Database db;
    std::map<std::string, Schema> schemas;
    std::vector<std::string> names;

    explicit ExprGen(unsigned long long seed) : rng(seed) {
        std::vector<std::string> attr_pool = {"A", "B", "C", "D"};
        std::vector<std::string> consts = {"a", "b", "c"};
        size_t nrels = 2 + below(2);
        for (size_t i = 0; i < nrels; ++i) {
            std::string name = "r" + std::to_string(i + 1);
            size_t arity = 1 + below(3);
            // contiguous slice of the pool so attribute overlap across relations is likely
            Schema s;
            size_t start = below(attr_pool.size() - arity + 1);
            for (size_t k = 0; k < arity; ++k) s.push_back(attr_pool[start + k]);
            MultisetRelation rel(s);
            size_t nrows = below(4);
            for (size_t rix = 0; rix < nrows; ++rix) {
                Tuple t;
                for (size_t k = 0; k < arity; ++k) t.push_back(consts[below(consts.size())]);
                rel.add_row(std::move(t), 1 + static_cast<Count>(below(3)));
            }
            db.emplace(name, rel);
            schemas.emplace(name, s);
            names.push_back(name);
        }
    }

    size_t below(size_t n) { return std::uniform_int_distribution<size_t>(0, n - 1)(rng); }
    bool coin() { return below(2) == 0; }

    ConditionPtr gen_cond(const Schema& s, int depth) {
        if (depth > 0 && below(3) == 0) {
            switch (below(3)) {
                case 0: return Condition::negate(gen_cond(s, depth - 1));
                case 1: return Condition::conj(gen_cond(s, depth - 1), gen_cond(s, depth - 1));
                default: return Condition::disj(gen_cond(s, depth - 1), gen_cond(s, depth - 1));
            }
        }
        if (s.empty()) return Condition::truth();
        std::string lhs = s[below(s.size())];
        if (coin()) return Condition::eq_const(lhs, std::vector<std::string>{"a", "b", "c"}[below(3)]);
        return Condition::eq_attr(lhs, s[below(s.size())]);
    }

    ExprPtr gen(int depth) {
        if (depth == 0 || below(3) == 0) return Expr::base_rel(names[below(names.size())]);
        switch (below(5)) {
            case 0: {
                ExprPtr in = gen(depth - 1);
                return Expr::select(gen_cond(infer_schema(schemas, in), 2), in);
            }
            case 1: {
                ExprPtr in = gen(depth - 1);
                Schema s = infer_schema(schemas, in);
                std::shuffle(s.begin(), s.end(), rng);
                s.resize(below(s.size() + 1));
                return Expr::project(s, in);
            }
            case 2: return Expr::join(gen(depth - 1), gen(depth - 1));
            default: {
                ExprPtr l = gen(depth - 1);
                Schema s = infer_schema(schemas, l);
                std::shuffle(s.begin(), s.end(), rng);
                ExprPtr r = Expr::project(s, gen_same(l));
                return below(4) == 3 ? Expr::except(l, r) : Expr::set_union(l, r);
            }
        }
    }

    // something with the same attribute set as e: e itself or a selection on it
    ExprPtr gen_same(const ExprPtr& e) {
        if (coin()) return e;
        return Expr::select(gen_cond(infer_schema(schemas, e), 1), e);
    }
};

}  // namespace

TEST_CASE("random mra expressions agree with the expanded-copy reference") {
    for (unsigned long long seed = 1; seed <= 150; ++seed) {
        ExprGen gen(20260814 * 1000 + seed);
        std::map<std::string, ListRel> lists;
        for (const auto& [n, r] : gen.db) lists.emplace(n, expand(r));
        for (int k = 0; k < 4; ++k) {
            ExprPtr e = gen.gen(3);
            INFO("expr: " << render(e) << "\ndb:\n" << render(gen.db));
            MultisetRelation fast = eval_expr(gen.db, e);
            MultisetRelation slow = recount(list_eval(lists, e));
            REQUIRE(fast == slow);

            ExprPtr reparsed = parse_expression(render(e));
            REQUIRE(eval_expr(gen.db, reparsed) == fast);
        }
    }
}

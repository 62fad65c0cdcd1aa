#pragma once

#include <random>

#include "bagsem/datalog.hpp"
#include "bagsem/mra.hpp"
#include "bagsem/pattern.hpp"

namespace bagsem::gen {

using rdf::Term;
using rdf::Variable;

// Deterministic source of randomness. child() derives an independent
// stream from the original seed, not from engine state, so the same
// (seed, salt) pair always yields the same stream no matter how much the
// parent has consumed.
struct Rng {
    uint64_t seed;
    std::mt19937_64 eng;

    explicit Rng(uint64_t s) : seed(s), eng(s) {}

    uint64_t next() { return eng(); }
    size_t below(size_t n) {
        if (n == 0) return 0;
        return std::uniform_int_distribution<size_t>(0, n - 1)(eng);
    }
    size_t range(size_t lo, size_t hi) { return lo + below(hi - lo + 1); }
    bool coin() { return below(2) == 0; }
    bool chance(size_t num, size_t den) { return below(den) < num; }
    template <class T>
    const T& pick(const std::vector<T>& xs) {
        return xs[below(xs.size())];
    }
    Rng child(uint64_t salt) const {
        return Rng(seed ^ (0x9E3779B97F4A7C15ULL * (salt + 0x632BE59BD9B4E019ULL)));
    }
};

// Shared value pools. Subjects and objects draw from a..o style iri names,
// predicates from p..z, literals from u0, u1, ... so the three kinds never
// collide and rendered instances stay easy to read.
struct Pools {
    size_t max_iris = 4;
    size_t max_literals = 3;

    static std::string iri_name(size_t k) {
        if (k < 15) return std::string(1, char('a' + k));
        return "a" + std::to_string(k);
    }
    static std::string predicate_name(size_t k) {
        if (k < 11) return std::string(1, char('p' + k));
        return "p" + std::to_string(k);
    }

    size_t predicate_count() const { return std::max<size_t>(1, max_iris / 2); }

    Term iri(Rng& rng) const { return Term::iri(iri_name(rng.below(max_iris))); }
    Term predicate(Rng& rng) const {
        return Term::iri(predicate_name(rng.below(predicate_count())));
    }
    Term literal(Rng& rng) const {
        return Term::literal("u" + std::to_string(rng.below(std::max<size_t>(1, max_literals))));
    }
    Term object_term(Rng& rng) const { return rng.chance(1, 3) ? literal(rng) : iri(rng); }
};

struct GraphGenConfig {
    Pools pools;
    size_t max_triples = 8;
};

inline rdf::Graph gen_graph(Rng& rng, const GraphGenConfig& cfg = {}) {
    rdf::Graph g;
    size_t n = rng.below(cfg.max_triples + 1);
    for (size_t i = 0; i < n; ++i)
        g.insert(rdf::Triple{cfg.pools.iri(rng), cfg.pools.predicate(rng),
                             cfg.pools.object_term(rng)});
    return g;
}

// Which operators a generated pattern may use. Core stays inside the core
// fragment (atomic filters, domain-aligned EXCEPT); W3c adds OPTIONAL,
// MINUS and composite filters; Extended adds DIFF and both EXCEPT forms.
enum class PatternFlavor { Core, W3c, Extended };

struct PatternGenConfig {
    Pools pools;
    PatternFlavor flavor = PatternFlavor::W3c;
    size_t max_depth = 3;
    size_t var_count = 4;
    size_t condition_depth = 2;
    // Relative operator weights; absent operators count as 1, weight 0 bans.
    std::map<sparql::GraphPattern::Kind, size_t> weights;

    size_t weight_of(sparql::GraphPattern::Kind k) const {
        auto it = weights.find(k);
        return it == weights.end() ? 1 : it->second;
    }

    std::vector<Variable> var_pool() const {
        static const char* names[] = {"x", "y", "z", "w", "s", "t"};
        std::vector<Variable> out;
        for (size_t i = 0; i < var_count; ++i)
            out.push_back(i < 6 ? Variable(names[i]) : Variable("x" + std::to_string(i)));
        return out;
    }
};

namespace gen_detail {

inline sparql::ConstraintPtr gen_atom(Rng& rng, const std::vector<Variable>& vars,
                                      const Pools& pools) {
    using FC = sparql::FilterConstraint;
    switch (rng.below(3)) {
        case 0: return FC::eq(rng.pick(vars), pools.object_term(rng));
        case 1: return FC::eq(rng.pick(vars), rng.pick(vars));
        default: return FC::bound(rng.pick(vars));
    }
}

inline sparql::ConstraintPtr gen_condition(Rng& rng, const std::vector<Variable>& vars,
                                           const Pools& pools, size_t depth) {
    using FC = sparql::FilterConstraint;
    if (depth == 0 || rng.chance(2, 5)) return gen_atom(rng, vars, pools);
    switch (rng.below(3)) {
        case 0: return FC::negate(gen_condition(rng, vars, pools, depth - 1));
        case 1:
            return FC::conj(gen_condition(rng, vars, pools, depth - 1),
                            gen_condition(rng, vars, pools, depth - 1));
        default:
            return FC::disj(gen_condition(rng, vars, pools, depth - 1),
                            gen_condition(rng, vars, pools, depth - 1));
    }
}

inline sparql::PatternPtr gen_triple(Rng& rng, const std::vector<Variable>& vars,
                                     const Pools& pools) {
    using TV = sparql::TermOrVar;
    TV s = rng.coin() ? TV(rng.pick(vars)) : TV(pools.iri(rng));
    TV p = rng.chance(1, 4) ? TV(rng.pick(vars)) : TV(pools.predicate(rng));
    TV o = rng.coin() ? TV(rng.pick(vars)) : TV(pools.object_term(rng));
    if (!sparql::is_var(s) && !sparql::is_var(p) && !sparql::is_var(o))
        s = TV(rng.pick(vars));
    return sparql::GraphPattern::make_triple(std::move(s), std::move(p), std::move(o));
}

inline sparql::PatternPtr gen_pattern_rec(Rng& rng, const PatternGenConfig& cfg,
                                          const std::vector<Variable>& vars,
                                          size_t depth) {
    using GP = sparql::GraphPattern;
    using K = GP::Kind;
    using FC = sparql::FilterConstraint;
    if (depth == 0 || rng.chance(1, 3)) return gen_triple(rng, vars, cfg.pools);

    std::vector<K> ops = {K::And, K::Union, K::Filter, K::Select};
    if (cfg.flavor == PatternFlavor::Core) ops.push_back(K::Except);
    if (cfg.flavor != PatternFlavor::Core) {
        ops.push_back(K::Opt);
        ops.push_back(K::Minus);
    }
    if (cfg.flavor == PatternFlavor::Extended) {
        ops.push_back(K::Diff);
        ops.push_back(K::Except);
        ops.push_back(K::ExceptStar);
    }
    size_t total = 0;
    for (K k : ops) total += cfg.weight_of(k);
    if (total == 0) return gen_triple(rng, vars, cfg.pools);
    size_t roll = rng.below(total);
    K op = ops.front();
    for (K k : ops) {
        size_t w = cfg.weight_of(k);
        if (roll < w) {
            op = k;
            break;
        }
        roll -= w;
    }
    auto sub = [&] { return gen_pattern_rec(rng, cfg, vars, depth - 1); };
    switch (op) {
        case K::And:
        case K::Union:
        case K::Minus:
        case K::Diff:
        case K::ExceptStar:
            return GP::binary(op, sub(), sub());
        case K::Opt: {
            sparql::PatternPtr l = sub();
            sparql::PatternPtr r = sub();
            auto rd = sparql::dom(r);
            if (rng.coin() && !rd.empty()) {
                std::vector<Variable> rv(rd.begin(), rd.end());
                r = GP::filter(r, gen_condition(rng, rv, cfg.pools, cfg.condition_depth));
            }
            return GP::binary(K::Opt, l, r);
        }
        case K::Except: {
            // EXCEPT needs equal domains, so both sides are projected onto a
            // shared subset of their common variables.
            sparql::PatternPtr a = sub();
            sparql::PatternPtr b = sub();
            auto da = sparql::dom(a);
            auto db = sparql::dom(b);
            std::set<Variable> w;
            for (const auto& v : da)
                if (db.count(v) && rng.chance(2, 3)) w.insert(v);
            sparql::PatternPtr lhs = GP::select(w, a);
            sparql::PatternPtr rhs = GP::select(std::move(w), b);
            return GP::binary(K::Except, std::move(lhs), std::move(rhs));
        }
        case K::Filter: {
            sparql::PatternPtr child = sub();
            auto d = sparql::dom(child);
            if (d.empty()) return child;
            std::vector<Variable> dv(d.begin(), d.end());
            sparql::ConstraintPtr c;
            if (cfg.flavor == PatternFlavor::Core) {
                c = gen_atom(rng, dv, cfg.pools);
                if (rng.chance(1, 3)) c = FC::negate(c);
            } else {
                c = gen_condition(rng, dv, cfg.pools, cfg.condition_depth);
            }
            return GP::filter(child, c);
        }
        case K::Select: {
            sparql::PatternPtr child = sub();
            std::set<Variable> w;
            for (const auto& v : sparql::dom(child))
                if (rng.coin()) w.insert(v);
            return GP::select(std::move(w), child);
        }
        default:
            return gen_triple(rng, vars, cfg.pools);
    }
}

}  // namespace gen_detail

inline sparql::PatternPtr gen_pattern(Rng& rng, const PatternGenConfig& cfg = {}) {
    return gen_detail::gen_pattern_rec(rng, cfg, cfg.var_pool(), cfg.max_depth);
}

// --- Datalog programs in translatable shape -----------------------------------
// Nonrecursive programs whose rules already sit in the four normal shapes.
// Heads always take pairwise-distinct variables; with plain_atoms set, body
// atoms do too, which is what the pattern translation requires. Without it,
// body atoms may repeat variables and carry constants.

struct ShapedProgramConfig {
    size_t base_preds = 3;
    size_t max_arity = 3;
    size_t max_facts = 3;
    size_t max_count = 3;   // fact multiplicity
    size_t rule_count = 4;
    bool plain_atoms = true;
};

struct ShapedProgram {
    datalog::Program program;
    datalog::Atom goal;
};

namespace gen_detail {

inline std::vector<std::string> shaped_vars() { return {"X", "Y", "Z", "W", "U", "S"}; }
inline std::vector<std::string> shaped_consts() { return {"a", "b", "c"}; }

inline datalog::Atom gen_body_atom(Rng& rng, const std::string& pred, size_t arity,
                                   bool plain) {
    auto vars = shaped_vars();
    for (size_t i = vars.size() - 1; i > 0; --i)
        std::swap(vars[i], vars[rng.below(i + 1)]);
    datalog::Atom a{pred, {}};
    for (size_t k = 0; k < arity; ++k) {
        if (!plain && rng.chance(1, 5)) {
            a.args.push_back(datalog::DlTerm::constant(rng.pick(shaped_consts())));
        } else if (!plain && rng.chance(1, 4) && k > 0) {
            a.args.push_back(datalog::DlTerm::var(vars[rng.below(k)]));
        } else {
            a.args.push_back(datalog::DlTerm::var(vars[k]));
        }
    }
    return a;
}

inline std::vector<std::string> var_subset(Rng& rng, const std::set<std::string>& vs,
                                           size_t size) {
    std::vector<std::string> pool(vs.begin(), vs.end());
    for (size_t i = pool.size(); i > 1; --i)
        std::swap(pool[i - 1], pool[rng.below(i)]);
    pool.resize(size);
    return pool;
}

}  // namespace gen_detail

inline ShapedProgram gen_shaped_program(Rng& rng, const ShapedProgramConfig& cfg = {}) {
    using datalog::Atom;
    using datalog::DlTerm;
    using datalog::Literal;
    using datalog::Rule;

    ShapedProgram out;
    auto consts = gen_detail::shaped_consts();
    std::vector<std::pair<std::string, size_t>> available;

    size_t nbase = rng.range(2, std::max<size_t>(2, cfg.base_preds));
    for (size_t i = 0; i < nbase; ++i) {
        std::string name = "e" + std::to_string(i + 1);
        size_t arity = rng.range(1, cfg.max_arity);
        available.emplace_back(name, arity);
        size_t nfacts = rng.below(cfg.max_facts + 1);
        for (size_t f = 0; f < nfacts; ++f) {
            datalog::Tuple t;
            for (size_t k = 0; k < arity; ++k) t.push_back(rng.pick(consts));
            out.program.add_fact(datalog::GroundFact{name, std::move(t)},
                                 1 + static_cast<Count>(rng.below(cfg.max_count)));
        }
    }

    size_t nrules = rng.range(1, std::max<size_t>(1, cfg.rule_count));
    Atom last_head;
    for (size_t i = 0; i < nrules; ++i) {
        const auto& [p1, a1] = rng.pick(available);
        Atom l1 = gen_detail::gen_body_atom(rng, p1, a1, cfg.plain_atoms);
        auto v1 = l1.vars();

        Rule r;
        r.body.push_back(Literal::pos(l1));
        std::set<std::string> head_vars;
        switch (rng.below(4)) {
            case 0:  // projection
                break;
            case 1: {  // selection
                if (v1.empty()) break;
                size_t ncmp = rng.range(1, 2);
                for (size_t k = 0; k < ncmp; ++k) {
                    std::vector<std::string> vs(v1.begin(), v1.end());
                    DlTerm lhs = DlTerm::var(rng.pick(vs));
                    DlTerm rhs = DlTerm::constant(rng.pick(consts));
                    if (vs.size() > 1 && rng.coin()) {
                        std::string other = rng.pick(vs);
                        if (other != lhs.text) rhs = DlTerm::var(other);
                    }
                    r.body.push_back(rng.coin() ? Literal::eq(lhs, rhs)
                                                : Literal::neq(lhs, rhs));
                }
                break;
            }
            case 2: {  // join
                const auto& [p2, a2] = rng.pick(available);
                Atom l2 = gen_detail::gen_body_atom(rng, p2, a2, cfg.plain_atoms);
                auto v2 = l2.vars();
                head_vars = v1;
                head_vars.insert(v2.begin(), v2.end());
                r.body.push_back(Literal::pos(std::move(l2)));
                break;
            }
            default: {  // negation
                std::vector<std::pair<std::string, size_t>> fits;
                for (const auto& pa : available)
                    if (pa.second <= v1.size()) fits.push_back(pa);
                if (fits.empty()) break;
                const auto& [p2, a2] = rng.pick(fits);
                Atom l2{p2, {}};
                for (const auto& v : gen_detail::var_subset(rng, v1, a2))
                    l2.args.push_back(DlTerm::var(v));
                head_vars = v1;
                r.body.push_back(Literal::neg(std::move(l2)));
                break;
            }
        }
        // join and negation heads must carry every variable; projection and
        // selection heads keep a random slice of the atom's variables
        std::vector<std::string> head_args;
        if (!head_vars.empty())
            head_args = gen_detail::var_subset(rng, head_vars, head_vars.size());
        else if (r.body.back().kind != Literal::Kind::Neg)
            head_args = gen_detail::var_subset(rng, v1, rng.below(v1.size() + 1));

        std::string head_pred = "d" + std::to_string(i + 1);
        Atom head{head_pred, {}};
        for (const auto& v : head_args) head.args.push_back(DlTerm::var(v));
        r.head = head;
        out.program.add_rule(std::move(r));
        available.emplace_back(head_pred, head_args.size());
        last_head = head;

        // occasionally a second rule for the same predicate
        if (rng.chance(1, 3)) {
            std::vector<std::pair<std::string, size_t>> fits;
            for (size_t k = 0; k + 1 < available.size(); ++k)
                if (available[k].second >= head_args.size()) fits.push_back(available[k]);
            if (!fits.empty()) {
                const auto& [p2, a2] = rng.pick(fits);
                Atom l2 = gen_detail::gen_body_atom(rng, p2, a2, true);
                Rule extra;
                extra.body.push_back(Literal::pos(l2));
                Atom head2{head_pred, {}};
                for (const auto& v :
                     gen_detail::var_subset(rng, l2.vars(), head_args.size()))
                    head2.args.push_back(DlTerm::var(v));
                extra.head = std::move(head2);
                out.program.add_rule(std::move(extra));
            }
        }
    }

    out.goal = Atom{last_head.pred, {}};
    for (size_t i = 0; i < last_head.args.size(); ++i)
        out.goal.args.push_back(DlTerm::var("G" + std::to_string(i + 1)));
    return out;
}

// --- free-form Datalog programs -------------------------------------------------
// Safe nonrecursive programs without shape discipline: bodies mix several
// positive atoms, comparisons and negation, atoms repeat variables and carry
// constants. This is the input diet for the normalizer.

struct ProgramGenConfig {
    size_t base_preds = 3;
    size_t max_arity = 2;
    size_t max_facts = 3;
    size_t max_count = 3;
    size_t rule_count = 3;
    size_t max_body_atoms = 3;
};

inline ShapedProgram gen_program(Rng& rng, const ProgramGenConfig& cfg = {}) {
    using datalog::Atom;
    using datalog::DlTerm;
    using datalog::Literal;
    using datalog::Rule;

    ShapedProgram out;
    auto consts = gen_detail::shaped_consts();
    auto vars = gen_detail::shaped_vars();
    std::vector<std::pair<std::string, size_t>> preds;

    size_t nbase = rng.range(2, std::max<size_t>(2, cfg.base_preds));
    for (size_t i = 0; i < nbase; ++i) {
        std::string name = "e" + std::to_string(i + 1);
        size_t arity = rng.range(1, cfg.max_arity);
        preds.emplace_back(name, arity);
        size_t nfacts = rng.range(1, cfg.max_facts);
        for (size_t f = 0; f < nfacts; ++f) {
            datalog::Tuple t;
            for (size_t k = 0; k < arity; ++k) t.push_back(rng.pick(consts));
            out.program.add_fact(datalog::GroundFact{name, std::move(t)},
                                 1 + static_cast<Count>(rng.below(cfg.max_count)));
        }
    }

    size_t nrules = rng.range(1, std::max<size_t>(1, cfg.rule_count));
    Atom last_head;
    for (size_t i = 0; i < nrules; ++i) {
        Rule r;
        std::set<std::string> bound;
        size_t npos = rng.range(1, std::max<size_t>(1, cfg.max_body_atoms));
        for (size_t k = 0; k < npos; ++k) {
            const auto& [name, arity] = rng.pick(preds);
            Atom a{name, {}};
            for (size_t j = 0; j < arity; ++j) {
                if (rng.chance(1, 4)) {
                    a.args.push_back(DlTerm::constant(rng.pick(consts)));
                } else {
                    std::string v = rng.pick(vars);
                    a.args.push_back(DlTerm::var(v));
                    bound.insert(v);
                }
            }
            r.body.push_back(Literal::pos(std::move(a)));
        }
        std::vector<std::string> pool(bound.begin(), bound.end());
        if (!pool.empty() && rng.coin()) {
            DlTerm lhs = DlTerm::var(rng.pick(pool));
            DlTerm rhs = rng.coin() ? DlTerm::constant(rng.pick(consts))
                                    : DlTerm::var(rng.pick(pool));
            r.body.push_back(rng.coin() ? Literal::eq(lhs, rhs)
                                        : Literal::neq(lhs, rhs));
        }
        if (!pool.empty() && rng.coin()) {
            const auto& [name, arity] = rng.pick(preds);
            Atom a{name, {}};
            for (size_t j = 0; j < arity; ++j)
                a.args.push_back(rng.coin() ? DlTerm::var(rng.pick(pool))
                                            : DlTerm::constant(rng.pick(consts)));
            r.body.push_back(Literal::neg(std::move(a)));
        }

        std::string head_pred = "d" + std::to_string(i + 1);
        size_t head_arity =
            pool.empty() ? 0 : rng.range(1, std::min<size_t>(pool.size(), 3));
        Atom head{head_pred, {}};
        for (size_t k = 0; k < head_arity; ++k)
            head.args.push_back(DlTerm::var(rng.pick(pool)));
        r.head = head;
        out.program.add_rule(std::move(r));
        preds.emplace_back(head_pred, head_arity);
        last_head = std::move(head);
    }

    out.goal = Atom{last_head.pred, {}};
    for (size_t i = 0; i < last_head.args.size(); ++i)
        out.goal.args.push_back(DlTerm::var("G" + std::to_string(i + 1)));
    return out;
}

// --- relational instances and expressions ---------------------------------------

struct MraGenConfig {
    size_t max_relations = 3;
    size_t max_arity = 3;
    size_t max_rows = 4;
    size_t max_count = 3;
    size_t max_depth = 3;
    size_t condition_depth = 2;
};

inline mra::Database gen_database(Rng& rng, const MraGenConfig& cfg = {}) {
    static const std::vector<std::string> attr_pool = {"A", "B", "C", "D"};
    auto consts = gen_detail::shaped_consts();
    mra::Database db;
    size_t nrels = rng.range(2, std::max<size_t>(2, cfg.max_relations));
    for (size_t i = 0; i < nrels; ++i) {
        size_t arity = rng.range(1, cfg.max_arity);
        // contiguous pool slice so attribute overlap across relations is likely
        size_t start = rng.below(attr_pool.size() - arity + 1);
        mra::Schema s(attr_pool.begin() + start, attr_pool.begin() + start + arity);
        mra::MultisetRelation rel(s);
        size_t nrows = rng.below(cfg.max_rows + 1);
        for (size_t rix = 0; rix < nrows; ++rix) {
            mra::Tuple t;
            for (size_t k = 0; k < arity; ++k) t.push_back(rng.pick(consts));
            rel.add_row(std::move(t), 1 + static_cast<Count>(rng.below(cfg.max_count)));
        }
        db.emplace("r" + std::to_string(i + 1), std::move(rel));
    }
    return db;
}

namespace gen_detail {

inline mra::ConditionPtr gen_mra_cond(Rng& rng, const mra::Schema& s, size_t depth) {
    using mra::Condition;
    if (depth > 0 && rng.chance(1, 3)) {
        switch (rng.below(3)) {
            case 0: return Condition::negate(gen_mra_cond(rng, s, depth - 1));
            case 1:
                return Condition::conj(gen_mra_cond(rng, s, depth - 1),
                                       gen_mra_cond(rng, s, depth - 1));
            default:
                return Condition::disj(gen_mra_cond(rng, s, depth - 1),
                                       gen_mra_cond(rng, s, depth - 1));
        }
    }
    if (s.empty()) return Condition::truth();
    const std::string& lhs = s[rng.below(s.size())];
    if (rng.coin()) return Condition::eq_const(lhs, rng.pick(shaped_consts()));
    return Condition::eq_attr(lhs, s[rng.below(s.size())]);
}

inline mra::ExprPtr gen_expr_rec(Rng& rng, const std::map<std::string, mra::Schema>& sch,
                                 const std::vector<std::string>& names,
                                 const MraGenConfig& cfg, size_t depth) {
    using mra::Expr;
    if (depth == 0 || rng.chance(1, 3)) return Expr::base_rel(rng.pick(names));
    auto sub = [&] { return gen_expr_rec(rng, sch, names, cfg, depth - 1); };
    switch (rng.below(5)) {
        case 0: {
            mra::ExprPtr in = sub();
            return Expr::select(
                gen_mra_cond(rng, mra::infer_schema(sch, in), cfg.condition_depth), in);
        }
        case 1: {
            mra::ExprPtr in = sub();
            mra::Schema s = mra::infer_schema(sch, in);
            for (size_t i = s.size(); i > 1; --i) std::swap(s[i - 1], s[rng.below(i)]);
            s.resize(rng.below(s.size() + 1));
            return Expr::project(s, in);
        }
        case 2: return Expr::join(sub(), sub());
        default: {
            mra::ExprPtr l = sub();
            mra::Schema s = mra::infer_schema(sch, l);
            for (size_t i = s.size(); i > 1; --i) std::swap(s[i - 1], s[rng.below(i)]);
            // the right side reuses the left's attribute set, maybe filtered
            mra::ExprPtr r = l;
            if (rng.coin())
                r = Expr::select(gen_mra_cond(rng, s, 1), r);
            r = Expr::project(s, r);
            return rng.coin() ? Expr::except(l, r) : Expr::set_union(l, r);
        }
    }
}

}  // namespace gen_detail

inline mra::ExprPtr gen_expr(Rng& rng, const std::map<std::string, mra::Schema>& schemas,
                             const MraGenConfig& cfg = {}) {
    std::vector<std::string> names;
    for (const auto& [n, s] : schemas) names.push_back(n);
    return gen_detail::gen_expr_rec(rng, schemas, names, cfg, cfg.max_depth);
}

}  // namespace bagsem::gen

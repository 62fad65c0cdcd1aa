#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "bagsem/common.hpp"
#include "bagsem/datalog.hpp"
#include "bagsem/datalog_normalize.hpp"
#include "bagsem/mra.hpp"
#include "bagsem/pattern.hpp"
#include "bagsem/rewrite.hpp"

// Translations between the three query languages. Each direction is exact on
// multiplicities: evaluating the image must give the same multiset as the
// source, up to the value encodings defined here.
namespace bagsem::translate {

using rdf::Graph;
using rdf::Term;
using rdf::Triple;
using rdf::Variable;

// --- value encodings ----------------------------------------------------------
// RDF terms become opaque Datalog constants: IRIs keep their name, literals
// are wrapped in double quotes so the two kinds cannot collide. The constant
// "null" is the unbound marker; rdf::Term construction already refuses it.

inline std::string null_constant() { return "null"; }

inline std::string encode_term(const Term& t) {
    if (t.is_iri()) return t.value;
    return "\"" + t.value + "\"";
}

inline Term decode_constant(const std::string& c) {
    if (c == null_constant())
        throw TranslationError("the null marker does not decode to a term");
    try {
        if (c.size() >= 2 && c.front() == '"' && c.back() == '"')
            return Term::literal(c.substr(1, c.size() - 2));
        return Term::iri(c);
    } catch (const ValidationError& e) {
        throw TranslationError("constant '" + c + "' does not decode to a term: " +
                               e.what());
    }
}

// Pattern variables gain a fixed prefix on the Datalog side; the prefix makes
// them uppercase-initial and keeps them apart from the helper variables the
// translation introduces.
inline std::string encode_var(const Variable& v) { return "V_" + v.name; }

inline Variable decode_var(const std::string& name) {
    if (name.size() < 3 || name.compare(0, 2, "V_") != 0)
        throw TranslationError("'" + name + "' is not an encoded pattern variable");
    return Variable(name.substr(2));
}

// --- graph patterns to Datalog -------------------------------------------------
// Defined on core patterns only. Every pattern node gets one predicate whose
// arity is the node's domain in sorted variable order; unbound positions hold
// the null marker. Compatibility of two bindings during AND is delegated to
// the comp/3 relation, part of the graph encoding below. Rule heads stay
// variable-only, so translated programs normalize into the relational
// fragment.

struct PatternTranslationOptions {
    // Fault injection for the differential harness.
    bool drop_comp_rule = false;     // omit one comp/3 merge direction
    bool swap_null_padding = false;  // pad UNION branches by the sibling's domain
};

struct PatternAsDatalog {
    datalog::Program program;          // rules over the graph encoding
    datalog::Atom goal;                // one atom over the root predicate
    std::vector<Variable> var_order;   // sorted dom of the root pattern
    PatternTranslationOptions options;  // replayed when graphs are attached
};

// Facts encoding a graph, all with multiplicity one: t/3 per triple, adom/1
// per distinct term, nullrel/1 holding just the null marker, and comp/3 with
// the compatibility merge of every active-domain value with itself and with
// null. Keeping these set-like makes joins against them count-neutral.
inline datalog::Program graph_to_facts(const Graph& g,
                                       const PatternTranslationOptions& opts = {}) {
    datalog::Program out;
    std::set<std::string> dom;
    for (const Triple& tr : g) {
        std::string s = encode_term(tr.subject);
        std::string p = encode_term(tr.predicate);
        std::string o = encode_term(tr.object);
        out.add_fact(datalog::GroundFact{"t", {s, p, o}}, 1);
        dom.insert(s);
        dom.insert(p);
        dom.insert(o);
    }
    std::string null = null_constant();
    for (const auto& c : dom) {
        out.add_fact(datalog::GroundFact{"adom", {c}}, 1);
        out.add_fact(datalog::GroundFact{"comp", {c, c, c}}, 1);
        out.add_fact(datalog::GroundFact{"comp", {c, null, c}}, 1);
        if (!opts.drop_comp_rule)
            out.add_fact(datalog::GroundFact{"comp", {null, c, c}}, 1);
    }
    out.add_fact(datalog::GroundFact{"comp", {null, null, null}}, 1);
    out.add_fact(datalog::GroundFact{"nullrel", {null}}, 1);
    return out;
}

namespace translate_detail {

using sparql::ConstraintPtr;
using sparql::FilterConstraint;
using sparql::GraphPattern;
using sparql::PatternPtr;

struct PatternToDatalog {
    PatternTranslationOptions opts;
    datalog::Program prog;
    datalog::FreshPredicates preds{{"t", "adom", "comp", "nullrel"}, "g"};
    std::map<const GraphPattern*, std::pair<std::string, std::vector<Variable>>> memo;

    static std::vector<Variable> sorted(const std::set<Variable>& vs) {
        return {vs.begin(), vs.end()};
    }

    static datalog::DlTerm arg_of(const sparql::TermOrVar& tv) {
        if (sparql::is_var(tv))
            return datalog::DlTerm::var(encode_var(std::get<Variable>(tv)));
        return datalog::DlTerm::constant(encode_term(std::get<Term>(tv)));
    }

    static datalog::Atom atom(const std::string& pred, const std::vector<Variable>& vs) {
        std::vector<datalog::DlTerm> args;
        args.reserve(vs.size());
        for (const auto& v : vs) args.push_back(datalog::DlTerm::var(encode_var(v)));
        return datalog::Atom{pred, std::move(args)};
    }

    // Condition literals. The unbound marker needs no dedicated predicate:
    // equality against it plays the role of bound checks, and since no term
    // encodes to "null", a plain equality over an unbound position fails just
    // like the three-valued filter drops it.
    static void condition_literals(const ConstraintPtr& c, bool positive,
                                   std::vector<datalog::Literal>& out) {
        using K = FilterConstraint::Kind;
        using datalog::DlTerm;
        using datalog::Literal;
        auto var = [](const Variable& v) { return DlTerm::var(encode_var(v)); };
        auto null_term = [] { return DlTerm::constant(null_constant()); };
        if (c->kind == K::Not) {
            condition_literals(c->lhs, !positive, out);
            return;
        }
        switch (c->kind) {
            case K::Eq: {
                DlTerm value = DlTerm::constant(encode_term(c->term));
                if (positive) {
                    out.push_back(Literal::eq(var(c->var), value));
                } else {
                    out.push_back(Literal::neq(var(c->var), value));
                    out.push_back(Literal::neq(var(c->var), null_term()));
                }
                return;
            }
            case K::EqVar:
                if (positive) {
                    out.push_back(Literal::eq(var(c->var), var(c->var2)));
                    out.push_back(Literal::neq(var(c->var), null_term()));
                } else {
                    out.push_back(Literal::neq(var(c->var), var(c->var2)));
                    out.push_back(Literal::neq(var(c->var), null_term()));
                    out.push_back(Literal::neq(var(c->var2), null_term()));
                }
                return;
            case K::Bound:
                if (positive)
                    out.push_back(Literal::neq(var(c->var), null_term()));
                else
                    out.push_back(Literal::eq(var(c->var), null_term()));
                return;
            default:
                throw TranslationError("filter condition is not atomic");
        }
    }

    std::pair<std::string, std::vector<Variable>> translate(const PatternPtr& p) {
        auto hit = memo.find(p.get());
        if (hit != memo.end()) return hit->second;

        using K = GraphPattern::Kind;
        using datalog::Literal;
        std::string pred = preds.next();
        std::vector<Variable> d = sorted(sparql::dom(p));
        datalog::Atom head = atom(pred, d);

        switch (p->kind) {
            case K::Triple: {
                datalog::Atom t{"t",
                                {arg_of(p->triple.subject), arg_of(p->triple.predicate),
                                 arg_of(p->triple.object)}};
                prog.add_rule({head, {Literal::pos(std::move(t))}});
                break;
            }
            case K::And: {
                auto [lp, ld] = translate(p->left);
                auto [rp, rd] = translate(p->right);
                std::set<Variable> lset(ld.begin(), ld.end());
                std::set<Variable> rset(rd.begin(), rd.end());

                // Shared variables flow through comp/3: each side keeps its
                // own copy and the third column is the merged value.
                std::map<Variable, std::pair<std::string, std::string>> split;
                std::vector<datalog::DlTerm> largs, rargs;
                for (const auto& v : ld) {
                    if (rset.count(v)) {
                        split[v] = {"V1_" + v.name, "V2_" + v.name};
                        largs.push_back(datalog::DlTerm::var(split[v].first));
                    } else {
                        largs.push_back(datalog::DlTerm::var(encode_var(v)));
                    }
                }
                for (const auto& v : rd)
                    rargs.push_back(datalog::DlTerm::var(
                        lset.count(v) ? split[v].second : encode_var(v)));

                std::vector<Literal> body;
                body.push_back(Literal::pos({lp, std::move(largs)}));
                body.push_back(Literal::pos({rp, std::move(rargs)}));
                for (const auto& [v, names] : split)
                    body.push_back(Literal::pos(
                        {"comp",
                         {datalog::DlTerm::var(names.first),
                          datalog::DlTerm::var(names.second),
                          datalog::DlTerm::var(encode_var(v))}}));
                prog.add_rule({head, std::move(body)});
                break;
            }
            case K::Union: {
                auto [lp, ld] = translate(p->left);
                auto [rp, rd] = translate(p->right);
                if (lp == rp) {
                    // both branches share one node; alias the second so the
                    // two branch rules cannot collapse into one
                    std::string alias = preds.next();
                    prog.add_rule({atom(alias, rd), {Literal::pos(atom(rp, rd))}});
                    rp = alias;
                }
                auto branch = [&](const std::string& bp, const std::vector<Variable>& bd,
                                  const std::vector<Variable>& other) {
                    std::set<Variable> keep(bd.begin(), bd.end());
                    if (opts.swap_null_padding) {
                        std::set<Variable> sibling(other.begin(), other.end());
                        keep.clear();
                        for (const auto& v : bd)
                            if (sibling.count(v)) keep.insert(v);
                    }
                    // positions outside the branch's domain join the
                    // single-row null relation instead of holding a constant
                    std::vector<datalog::DlTerm> hargs;
                    std::vector<Literal> body{Literal::pos(atom(bp, bd))};
                    int pads = 0;
                    for (const auto& v : d) {
                        if (keep.count(v)) {
                            hargs.push_back(datalog::DlTerm::var(encode_var(v)));
                        } else {
                            datalog::DlTerm pad =
                                datalog::DlTerm::var("N" + std::to_string(++pads));
                            body.push_back(Literal::pos({"nullrel", {pad}}));
                            hargs.push_back(std::move(pad));
                        }
                    }
                    prog.add_rule(
                        {datalog::Atom{pred, std::move(hargs)}, std::move(body)});
                };
                branch(lp, ld, rd);
                branch(rp, rd, ld);
                break;
            }
            case K::Except: {
                auto [lp, ld] = translate(p->left);
                auto [rp, rd] = translate(p->right);
                prog.add_rule(
                    {head, {Literal::pos(atom(lp, ld)), Literal::neg(atom(rp, rd))}});
                break;
            }
            case K::Select: {
                auto [ip, id] = translate(p->left);
                prog.add_rule({head, {Literal::pos(atom(ip, id))}});
                break;
            }
            case K::Filter: {
                auto [ip, id] = translate(p->left);
                std::vector<Literal> body{Literal::pos(atom(ip, id))};
                condition_literals(p->constraint, true, body);
                prog.add_rule({head, std::move(body)});
                break;
            }
            default:
                throw TranslationError("pattern is not in core form");
        }

        auto entry = std::make_pair(std::move(pred), std::move(d));
        memo.emplace(p.get(), entry);
        return entry;
    }
};

}  // namespace translate_detail

inline PatternAsDatalog sparql_to_datalog(const sparql::PatternPtr& p,
                                          const PatternTranslationOptions& opts = {}) {
    auto errs = sparql::validate(p);
    if (!errs.empty())
        throw TranslationError("pattern is not well-formed: " + errs.front());
    auto leftovers = sparql::check_core(p);
    if (!leftovers.empty())
        throw TranslationError("pattern is not in core form: " + leftovers.front());

    translate_detail::PatternToDatalog tr{opts};
    auto [pred, d] = tr.translate(p);
    return PatternAsDatalog{std::move(tr.prog),
                            translate_detail::PatternToDatalog::atom(pred, d), d, opts};
}

// Runs a translated pattern against a graph by merging in the graph facts.
inline datalog::AnswerMultiset answers_on_graph(const PatternAsDatalog& q,
                                                const Graph& g,
                                                const datalog::EvalOptions& opts = {}) {
    datalog::Program combined = q.program;
    for (const auto& [f, n] : graph_to_facts(g, q.options).facts)
        combined.add_fact(f, n);
    return datalog::eval_program(combined, q.goal, opts);
}

// Decodes answers of a translated pattern back into mappings: strip the
// variable prefix, skip null positions, decode constants.
inline sparql::MappingMultiset answers_to_mappings(const datalog::AnswerMultiset& am) {
    sparql::MappingMultiset out;
    for (const auto& [sub, c] : am.entries) {
        sparql::Mapping m;
        for (const auto& [name, value] : sub) {
            if (value == null_constant()) continue;
            m.bind(decode_var(name), decode_constant(value));
        }
        out.add(m, c);
    }
    return out;
}

// --- Datalog to graph patterns --------------------------------------------------
// Works on normalized nonrecursive programs whose predicate atoms carry
// pairwise-distinct variables. Facts become a graph in which every fact copy
// is a fresh subject describing its predicate and argument positions; rule
// bodies become patterns over that encoding.

inline std::string position_iri(size_t i) { return "_" + std::to_string(i + 1); }

inline std::string fact_tag_iri() { return "predicate"; }

// One fresh subject per fact copy, so an n-fold fact contributes n matches.
inline Graph facts_to_graph(const datalog::Program& p) {
    Graph g;
    int counter = 0;
    for (const auto& [f, n] : p.facts) {
        for (Count k = 0; k < n; ++k) {
            Term subj = Term::iri("u" + std::to_string(++counter));
            g.insert(Triple{subj, Term::iri(fact_tag_iri()), Term::iri(f.pred)});
            for (size_t i = 0; i < f.args.size(); ++i)
                g.insert(Triple{subj, Term::iri(position_iri(i)),
                                decode_constant(f.args[i])});
        }
    }
    return g;
}

namespace translate_detail {

inline PatternPtr fold_and(std::vector<PatternPtr> parts) {
    if (parts.empty()) throw TranslationError("empty conjunction");
    while (parts.size() > 1) {
        std::vector<PatternPtr> next;
        for (size_t i = 0; i + 1 < parts.size(); i += 2)
            next.push_back(GraphPattern::binary(GraphPattern::Kind::And, parts[i],
                                                parts[i + 1]));
        if (parts.size() % 2) next.push_back(parts.back());
        parts = std::move(next);
    }
    return parts.front();
}

inline PatternPtr fold_union(std::vector<PatternPtr> parts) {
    if (parts.empty()) throw TranslationError("empty union");
    while (parts.size() > 1) {
        std::vector<PatternPtr> next;
        for (size_t i = 0; i + 1 < parts.size(); i += 2)
            next.push_back(GraphPattern::binary(GraphPattern::Kind::Union, parts[i],
                                                parts[i + 1]));
        if (parts.size() % 2) next.push_back(parts.back());
        parts = std::move(next);
    }
    return parts.front();
}

struct DatalogToPattern {
    const datalog::Program& prog;
    std::map<std::string, size_t> arity;
    std::set<std::string> fact_preds;
    std::map<std::string, PatternPtr> canonical;  // predicate -> pattern over canon vars
    int subject_counter = 0;
    int occurrence_counter = 0;

    explicit DatalogToPattern(const datalog::Program& p) : prog(p), arity(p.arities()) {
        for (const auto& [f, n] : p.facts) fact_preds.insert(f.pred);
        check_preconditions();
    }

    static Variable canon_var(const std::string& pred, size_t i) {
        return Variable(pred + "_" + std::to_string(i + 1));
    }

    Variable fresh_subject() {
        return Variable("y" + std::to_string(++subject_counter));
    }

    void check_preconditions() {
        auto unsafe = datalog::check_safe(prog);
        if (!unsafe.empty())
            throw TranslationError("program is unsafe: " + unsafe.front());
        if (!datalog::check_nonrecursive(prog))
            throw TranslationError("program is recursive");
        auto shapes = datalog::check_normalized(prog);
        if (!shapes.empty()) throw TranslationError(shapes.front());
        for (const auto& pred : prog.predicates())
            if (pred == null_constant())
                throw TranslationError("predicate name 'null' is reserved");

        auto check_atom = [](const datalog::Atom& a) {
            std::set<std::string> seen;
            for (const auto& t : a.args) {
                if (!t.is_var())
                    throw TranslationError("atom " + a.pred +
                                           " carries a constant argument");
                if (!seen.insert(t.text).second)
                    throw TranslationError("atom " + a.pred +
                                           " repeats variable " + t.text);
                if (t.text.empty() || !std::isupper(static_cast<unsigned char>(t.text[0])))
                    throw TranslationError("variable " + t.text +
                                           " must start uppercase");
            }
        };
        for (const auto& r : prog.rules) {
            if (fact_preds.count(r.head.pred))
                throw TranslationError("predicate " + r.head.pred +
                                       " mixes facts and rules");
            check_atom(r.head);
            for (const auto& l : r.body) {
                if (l.is_pred()) {
                    check_atom(l.atom);
                    continue;
                }
                for (const datalog::DlTerm* t : {&l.lhs, &l.rhs})
                    if (!t->is_var() && t->text == null_constant())
                        throw TranslationError(
                            "comparison against the null marker is not expressible");
            }
            if (r.head.pred.empty() ||
                !std::islower(static_cast<unsigned char>(r.head.pred[0])))
                throw TranslationError("predicate " + r.head.pred +
                                       " must start lowercase");
        }
        for (const auto& [f, n] : prog.facts)
            for (const auto& c : f.args)
                decode_constant(c);  // throws on the null marker
    }

    // The canonical pattern of a predicate projects onto canon variables.
    PatternPtr pattern_for_pred(const std::string& pred) {
        auto hit = canonical.find(pred);
        if (hit != canonical.end()) return hit->second;

        size_t n = arity.count(pred) ? arity.at(pred) : 0;
        std::set<Variable> canon;
        for (size_t i = 0; i < n; ++i) canon.insert(canon_var(pred, i));

        PatternPtr out;
        auto rules = prog.rules_for(pred);
        if (rules.empty()) {
            // Base predicate: match the fact encoding directly.
            Variable subj = fresh_subject();
            std::vector<PatternPtr> chain;
            chain.push_back(GraphPattern::make_triple(subj, Term::iri(fact_tag_iri()),
                                                      Term::iri(pred)));
            for (size_t i = 0; i < n; ++i)
                chain.push_back(GraphPattern::make_triple(
                    subj, Term::iri(position_iri(i)), canon_var(pred, i)));
            out = GraphPattern::select(canon, fold_and(std::move(chain)));
        } else {
            std::vector<PatternPtr> branches;
            for (const datalog::Rule* r : rules) {
                PatternPtr body = pattern_for_rule(*r);
                sparql::rewrite_detail::Renaming ren;
                for (size_t i = 0; i < r->head.args.size(); ++i)
                    ren[Variable(r->head.args[i].text)] = canon_var(pred, i);
                branches.push_back(GraphPattern::select(
                    canon, sparql::rewrite_detail::rename(body, ren)));
            }
            out = fold_union(std::move(branches));
        }
        canonical.emplace(pred, out);
        return out;
    }

    // Instantiating a canonical pattern renames every variable: canon
    // variables become the occurrence's arguments and everything else gets a
    // fresh name, so arguments can never be captured by rule-internal
    // variables of the same name.
    PatternPtr pattern_for_atom(const datalog::Atom& a) {
        PatternPtr canon = pattern_for_pred(a.pred);
        sparql::rewrite_detail::Renaming ren;
        std::set<Variable> w;
        for (size_t i = 0; i < a.args.size(); ++i) {
            ren[canon_var(a.pred, i)] = Variable(a.args[i].text);
            w.insert(Variable(a.args[i].text));
        }
        for (const Variable& v : sparql::all_vars(canon))
            if (!ren.count(v))
                ren[v] = Variable("b" + std::to_string(++occurrence_counter));
        return GraphPattern::select(w, sparql::rewrite_detail::rename(canon, ren));
    }

    static ConstraintPtr constraint_of(const datalog::Literal& cmp) {
        auto side_var = [](const datalog::DlTerm& t) { return Variable(t.text); };
        bool eq = cmp.kind == datalog::Literal::Kind::Eq;
        ConstraintPtr c;
        if (cmp.lhs.is_var() && cmp.rhs.is_var())
            c = FilterConstraint::eq(side_var(cmp.lhs), side_var(cmp.rhs));
        else if (cmp.lhs.is_var())
            c = FilterConstraint::eq(side_var(cmp.lhs), decode_constant(cmp.rhs.text));
        else
            c = FilterConstraint::eq(side_var(cmp.rhs), decode_constant(cmp.lhs.text));
        return eq ? c : FilterConstraint::negate(c);
    }

    PatternPtr pattern_for_rule(const datalog::Rule& r) {
        std::vector<const datalog::Atom*> pos, neg;
        std::vector<const datalog::Literal*> cmp;
        for (const auto& l : r.body) {
            switch (l.kind) {
                case datalog::Literal::Kind::Pos: pos.push_back(&l.atom); break;
                case datalog::Literal::Kind::Neg: neg.push_back(&l.atom); break;
                default: cmp.push_back(&l); break;
            }
        }
        if (pos.size() == 1 && neg.empty() && cmp.empty())
            return pattern_for_atom(*pos[0]);
        if (pos.size() == 1 && neg.empty()) {
            PatternPtr out = pattern_for_atom(*pos[0]);
            for (const auto* l : cmp)
                out = GraphPattern::filter(out, constraint_of(*l));
            return out;
        }
        if (pos.size() == 2)
            return GraphPattern::binary(GraphPattern::Kind::And,
                                        pattern_for_atom(*pos[0]),
                                        pattern_for_atom(*pos[1]));
        // negation: keep rows of the positive side with no supporting match
        PatternPtr keep = pattern_for_atom(*pos[0]);
        PatternPtr witness = GraphPattern::binary(GraphPattern::Kind::And, keep,
                                                  pattern_for_atom(*neg[0]));
        return GraphPattern::binary(GraphPattern::Kind::Except, keep, witness);
    }
};

}  // namespace translate_detail

// Translates a goal atom over a normalized program into a core pattern whose
// variables are the goal's variable names taken verbatim.
inline sparql::PatternPtr datalog_to_sparql(const datalog::Program& p,
                                            const datalog::Atom& goal) {
    translate_detail::DatalogToPattern tr(p);
    std::set<std::string> seen;
    for (const auto& t : goal.args) {
        if (!t.is_var())
            throw TranslationError("goal arguments must be variables");
        if (!seen.insert(t.text).second)
            throw TranslationError("goal repeats variable " + t.text);
        if (t.text.empty() || !std::isupper(static_cast<unsigned char>(t.text[0])))
            throw TranslationError("goal variable " + t.text + " must start uppercase");
    }
    if (tr.arity.count(goal.pred) && tr.arity.at(goal.pred) != goal.args.size())
        throw TranslationError("goal arity does not match predicate " + goal.pred);
    tr.arity.emplace(goal.pred, goal.args.size());
    return tr.pattern_for_atom(goal);
}

// Decodes answers whose variables already are pattern variable names.
inline sparql::MappingMultiset answers_to_mappings_verbatim(
    const datalog::AnswerMultiset& am) {
    sparql::MappingMultiset out;
    for (const auto& [sub, c] : am.entries) {
        sparql::Mapping m;
        for (const auto& [name, value] : sub)
            m.bind(Variable(name), decode_constant(value));
        out.add(m, c);
    }
    return out;
}

// --- relational algebra to Datalog ----------------------------------------------
// Attribute names double as Datalog variables; every expression node gets a
// predicate over its schema. Selection conditions are split into exclusive
// true-branches first so that one input row fires exactly one rule.

struct ExprAsDatalog {
    datalog::Program program;
    datalog::Atom goal;
    mra::Schema schema;
};

inline datalog::Program db_to_facts(const mra::Database& db) {
    datalog::Program out;
    for (const auto& [name, rel] : db)
        for (const auto& [row, n] : rel.rows)
            out.add_fact(datalog::GroundFact{name, row}, n);
    return out;
}

inline std::map<std::string, mra::Schema> schemas_of(const mra::Database& db) {
    std::map<std::string, mra::Schema> out;
    for (const auto& [name, rel] : db) out.emplace(name, rel.schema);
    return out;
}

namespace translate_detail {

// Exclusive decomposition of a two-valued condition: every tuple satisfies
// exactly one branch across the two lists. Branches are literal conjunctions.
struct CondBranches {
    std::vector<std::vector<datalog::Literal>> when_true, when_false;
};

inline CondBranches cond_branches(const mra::ConditionPtr& c) {
    using datalog::DlTerm;
    using datalog::Literal;
    using K = mra::Condition::Kind;
    auto cross = [](const std::vector<std::vector<Literal>>& a,
                    const std::vector<std::vector<Literal>>& b) {
        std::vector<std::vector<Literal>> out;
        for (const auto& x : a)
            for (const auto& y : b) {
                auto z = x;
                z.insert(z.end(), y.begin(), y.end());
                out.push_back(std::move(z));
            }
        return out;
    };
    auto unite = [](std::vector<std::vector<Literal>> a,
                    const std::vector<std::vector<Literal>>& b) {
        a.insert(a.end(), b.begin(), b.end());
        return a;
    };
    switch (c->kind) {
        case K::True: return {{{}}, {}};
        case K::EqAttr: {
            Literal eq = Literal::eq(DlTerm::var(c->lhs), DlTerm::var(c->rhs_attr));
            Literal ne = Literal::neq(DlTerm::var(c->lhs), DlTerm::var(c->rhs_attr));
            if (c->lhs == c->rhs_attr) return {{{}}, {}};  // trivially true
            return {{{eq}}, {{ne}}};
        }
        case K::EqConst: {
            Literal eq =
                Literal::eq(DlTerm::var(c->lhs), DlTerm::constant(c->rhs_value));
            Literal ne =
                Literal::neq(DlTerm::var(c->lhs), DlTerm::constant(c->rhs_value));
            return {{{eq}}, {{ne}}};
        }
        case K::Not: {
            CondBranches inner = cond_branches(c->a);
            return {inner.when_false, inner.when_true};
        }
        case K::And: {
            CondBranches l = cond_branches(c->a);
            CondBranches r = cond_branches(c->b);
            return {cross(l.when_true, r.when_true),
                    unite(l.when_false, cross(l.when_true, r.when_false))};
        }
        case K::Or: {
            CondBranches l = cond_branches(c->a);
            CondBranches r = cond_branches(c->b);
            return {unite(l.when_true, cross(l.when_false, r.when_true)),
                    cross(l.when_false, r.when_false)};
        }
    }
    throw Error("unreachable condition kind");
}

struct ExprToDatalog {
    const std::map<std::string, mra::Schema>& bases;
    datalog::Program prog;
    datalog::FreshPredicates preds;
    std::map<const mra::Expr*, std::pair<std::string, mra::Schema>> memo;

    explicit ExprToDatalog(const std::map<std::string, mra::Schema>& b)
        : bases(b), preds([&b] {
              std::set<std::string> taken;
              for (const auto& [name, s] : b) taken.insert(name);
              return taken;
          }(), "e") {}

    static datalog::Atom atom(const std::string& pred, const mra::Schema& s) {
        std::vector<datalog::DlTerm> args;
        args.reserve(s.size());
        for (const auto& a : s) args.push_back(datalog::DlTerm::var(a));
        return datalog::Atom{pred, std::move(args)};
    }

    std::pair<std::string, mra::Schema> translate(const mra::ExprPtr& e) {
        auto hit = memo.find(e.get());
        if (hit != memo.end()) return hit->second;

        using K = mra::Expr::Kind;
        using datalog::Literal;
        std::pair<std::string, mra::Schema> entry;
        switch (e->kind) {
            case K::Base: {
                auto it = bases.find(e->base);
                if (it == bases.end())
                    throw TranslationError("unknown relation " + e->base);
                entry = {e->base, it->second};
                break;
            }
            case K::Select: {
                auto [ip, is] = translate(e->left);
                std::string pred = preds.next();
                CondBranches br = cond_branches(e->cond);
                for (const auto& branch : br.when_true) {
                    std::vector<Literal> body{Literal::pos(atom(ip, is))};
                    body.insert(body.end(), branch.begin(), branch.end());
                    prog.add_rule({atom(pred, is), std::move(body)});
                }
                entry = {pred, is};
                break;
            }
            case K::Project: {
                auto [ip, is] = translate(e->left);
                std::string pred = preds.next();
                prog.add_rule({atom(pred, e->attrs), {Literal::pos(atom(ip, is))}});
                entry = {pred, e->attrs};
                break;
            }
            case K::Join: {
                auto [lp, ls] = translate(e->left);
                auto [rp, rs] = translate(e->right);
                mra::Schema joint = ls;
                for (const auto& a : rs)
                    if (std::find(ls.begin(), ls.end(), a) == ls.end())
                        joint.push_back(a);
                std::string pred = preds.next();
                prog.add_rule({atom(pred, joint),
                               {Literal::pos(atom(lp, ls)), Literal::pos(atom(rp, rs))}});
                entry = {pred, joint};
                break;
            }
            case K::Union: {
                auto [lp, ls] = translate(e->left);
                auto [rp, rs] = translate(e->right);
                if (!mra::same_attribute_set(ls, rs))
                    throw TranslationError("union over unequal attribute sets");
                if (lp == rp && ls == rs) {
                    // alias one side so the two branch rules stay distinct
                    std::string alias = preds.next();
                    prog.add_rule({atom(alias, rs), {Literal::pos(atom(rp, rs))}});
                    rp = alias;
                }
                std::string pred = preds.next();
                prog.add_rule({atom(pred, ls), {Literal::pos(atom(lp, ls))}});
                prog.add_rule({atom(pred, ls), {Literal::pos(atom(rp, rs))}});
                entry = {pred, ls};
                break;
            }
            case K::Except: {
                auto [lp, ls] = translate(e->left);
                auto [rp, rs] = translate(e->right);
                if (!mra::same_attribute_set(ls, rs))
                    throw TranslationError("difference over unequal attribute sets");
                std::string pred = preds.next();
                prog.add_rule({atom(pred, ls),
                               {Literal::pos(atom(lp, ls)), Literal::neg(atom(rp, rs))}});
                entry = {pred, ls};
                break;
            }
        }
        memo.emplace(e.get(), entry);
        return entry;
    }
};

}  // namespace translate_detail

inline ExprAsDatalog mra_to_datalog(const std::map<std::string, mra::Schema>& bases,
                                    const mra::ExprPtr& e) {
    translate_detail::ExprToDatalog tr(bases);
    auto [pred, schema] = tr.translate(e);
    return ExprAsDatalog{std::move(tr.prog),
                         translate_detail::ExprToDatalog::atom(pred, schema), schema};
}

inline datalog::AnswerMultiset answers_on_db(const ExprAsDatalog& q,
                                             const mra::Database& db,
                                             const datalog::EvalOptions& opts = {}) {
    datalog::Program combined = q.program;
    for (const auto& [f, n] : db_to_facts(db).facts) combined.add_fact(f, n);
    return datalog::eval_program(combined, q.goal, opts);
}

inline mra::MultisetRelation answers_to_relation(const datalog::AnswerMultiset& am,
                                                 const mra::Schema& schema) {
    mra::MultisetRelation out(schema);
    for (const auto& [sub, c] : am.entries) {
        mra::Tuple row;
        row.reserve(schema.size());
        for (const auto& a : schema) row.push_back(sub.at(a));
        out.add_row(std::move(row), c);
    }
    return out;
}

// --- Datalog to relational algebra ----------------------------------------------
// Works on normalized nonrecursive programs with variable-only, pairwise
// distinct head arguments. Intensional predicates are unfolded recursively;
// each base-predicate occurrence becomes its own relation copy whose schema is
// named after the occurrence's arguments, so natural joins line up by name.
// Repeated variables and constants inside an occurrence turn into selections
// over fresh columns which are then projected away.

struct ProgramAsExpr {
    mra::ExprPtr expr;
    mra::Database relations;  // base copies referenced by the expression
    mra::Schema schema;       // goal argument names in order
};

namespace translate_detail {

struct DatalogToExpr {
    const datalog::Program& prog;
    std::map<std::string, size_t> arity;
    std::set<std::string> fact_preds;
    mra::Database copies;
    std::map<std::pair<std::string, mra::Schema>, mra::ExprPtr> occ_memo;
    std::map<std::pair<std::string, mra::Schema>, std::string> copy_names;
    std::set<std::string> used_names;
    int copy_counter = 0;
    int fresh_counter = 0;

    explicit DatalogToExpr(const datalog::Program& p) : prog(p), arity(p.arities()) {
        for (const auto& [f, n] : p.facts) fact_preds.insert(f.pred);
        check_preconditions();
        for (const auto& r : prog.rules)
            for (const auto& v : r.vars()) used_names.insert(v);
    }

    void check_preconditions() {
        auto unsafe = datalog::check_safe(prog);
        if (!unsafe.empty())
            throw TranslationError("program is unsafe: " + unsafe.front());
        if (!datalog::check_nonrecursive(prog))
            throw TranslationError("program is recursive");
        auto shapes = datalog::check_normalized(prog);
        if (!shapes.empty()) throw TranslationError(shapes.front());
        for (const auto& r : prog.rules) {
            if (fact_preds.count(r.head.pred))
                throw TranslationError("predicate " + r.head.pred +
                                       " mixes facts and rules");
            std::set<std::string> seen;
            for (const auto& t : r.head.args) {
                if (!t.is_var())
                    throw TranslationError("head of " + r.head.pred +
                                           " carries a constant");
                if (!seen.insert(t.text).second)
                    throw TranslationError("head of " + r.head.pred +
                                           " repeats variable " + t.text);
            }
            for (const auto& v : r.vars())
                if (v.empty() || !std::isupper(static_cast<unsigned char>(v[0])))
                    throw TranslationError("variable " + v + " must start uppercase");
        }
    }

    std::string fresh_attr() {
        while (true) {
            std::string name = "F" + std::to_string(++fresh_counter);
            if (used_names.insert(name).second) return name;
        }
    }

    // Renames a rule so its head variables become `targets` and every other
    // variable is fresh, then returns the rule's body expression.
    mra::ExprPtr rule_expr(const datalog::Rule& r, const mra::Schema& targets) {
        datalog::VarMap sub;
        for (size_t i = 0; i < r.head.args.size(); ++i)
            sub[r.head.args[i].text] = datalog::DlTerm::var(targets[i]);
        for (const auto& v : r.vars())
            if (!sub.count(v)) sub[v] = datalog::DlTerm::var(fresh_attr());

        std::vector<datalog::Atom> pos, neg;
        std::vector<datalog::Literal> cmp;
        for (const auto& l : r.body) {
            switch (l.kind) {
                case datalog::Literal::Kind::Pos:
                    pos.push_back(datalog::substitute(sub, l.atom));
                    break;
                case datalog::Literal::Kind::Neg:
                    neg.push_back(datalog::substitute(sub, l.atom));
                    break;
                default: cmp.push_back(datalog::substitute(sub, l)); break;
            }
        }
        datalog::Atom head = datalog::substitute(sub, r.head);
        mra::Schema head_attrs;
        for (const auto& t : head.args) head_attrs.push_back(t.text);

        mra::ExprPtr body;
        if (pos.size() == 1 && neg.empty() && cmp.empty()) {
            body = expr_for_atom(pos[0]);
        } else if (pos.size() == 1 && neg.empty()) {
            mra::ConditionPtr cond;
            for (const auto& l : cmp) {
                mra::ConditionPtr one = condition_of(l);
                cond = cond ? mra::Condition::conj(cond, one) : one;
            }
            body = mra::Expr::select(cond, expr_for_atom(pos[0]));
        } else if (pos.size() == 2) {
            body = mra::Expr::join(expr_for_atom(pos[0]), expr_for_atom(pos[1]));
        } else {
            mra::ExprPtr keep = expr_for_atom(pos[0]);
            body = mra::Expr::except(keep,
                                     mra::Expr::join(keep, expr_for_atom(neg[0])));
        }
        return mra::Expr::project(head_attrs, body);
    }

    static mra::ConditionPtr condition_of(const datalog::Literal& cmp) {
        mra::ConditionPtr c;
        if (cmp.lhs.is_var() && cmp.rhs.is_var())
            c = mra::Condition::eq_attr(cmp.lhs.text, cmp.rhs.text);
        else if (cmp.lhs.is_var())
            c = mra::Condition::eq_const(cmp.lhs.text, cmp.rhs.text);
        else
            c = mra::Condition::eq_const(cmp.rhs.text, cmp.lhs.text);
        return cmp.kind == datalog::Literal::Kind::Eq ? c : mra::Condition::negate(c);
    }

    // Core of an occurrence: the predicate's content under given column names.
    mra::ExprPtr occurrence_expr(const std::string& pred, const mra::Schema& targets) {
        auto key = std::make_pair(pred, targets);
        auto hit = occ_memo.find(key);
        if (hit != occ_memo.end()) return hit->second;

        mra::ExprPtr out;
        auto rules = prog.rules_for(pred);
        if (rules.empty()) {
            auto cn = copy_names.find(key);
            std::string name;
            if (cn != copy_names.end()) {
                name = cn->second;
            } else {
                name = pred + "__" + std::to_string(++copy_counter);
                copy_names.emplace(key, name);
                mra::MultisetRelation rel{targets};
                for (const auto& [f, n] : prog.facts)
                    if (f.pred == pred) rel.add_row(f.args, n);
                copies.emplace(name, std::move(rel));
            }
            out = mra::Expr::base_rel(name);
        } else {
            std::vector<mra::ExprPtr> branches;
            for (const datalog::Rule* r : rules) branches.push_back(rule_expr(*r, targets));
            out = branches.front();
            for (size_t i = 1; i < branches.size(); ++i)
                out = mra::Expr::set_union(out, branches[i]);
        }
        occ_memo.emplace(key, out);
        return out;
    }

    mra::ExprPtr expr_for_atom(const datalog::Atom& a) {
        if (arity.count(a.pred) && arity.at(a.pred) != a.args.size())
            throw TranslationError("atom arity mismatch for " + a.pred);

        mra::Schema targets;
        mra::Schema kept;
        std::map<std::string, std::string> first_col;  // variable -> column
        std::vector<mra::ConditionPtr> constraints;
        for (const auto& t : a.args) {
            if (t.is_var()) {
                auto [it, fresh_var] = first_col.emplace(t.text, t.text);
                if (fresh_var) {
                    targets.push_back(t.text);
                    kept.push_back(t.text);
                    continue;
                }
                std::string col = fresh_attr();
                targets.push_back(col);
                constraints.push_back(mra::Condition::eq_attr(col, it->second));
            } else {
                std::string col = fresh_attr();
                targets.push_back(col);
                constraints.push_back(mra::Condition::eq_const(col, t.text));
            }
        }

        mra::ExprPtr out = occurrence_expr(a.pred, targets);
        if (!constraints.empty()) {
            mra::ConditionPtr cond = constraints.front();
            for (size_t i = 1; i < constraints.size(); ++i)
                cond = mra::Condition::conj(cond, constraints[i]);
            out = mra::Expr::project(kept, mra::Expr::select(cond, out));
        }
        return out;
    }
};

}  // namespace translate_detail

inline ProgramAsExpr datalog_to_mra(const datalog::Program& p,
                                    const datalog::Atom& goal) {
    translate_detail::DatalogToExpr tr(p);
    std::set<std::string> seen;
    for (const auto& t : goal.args) {
        if (!t.is_var())
            throw TranslationError("goal arguments must be variables");
        if (!seen.insert(t.text).second)
            throw TranslationError("goal repeats variable " + t.text);
        if (t.text.empty() || !std::isupper(static_cast<unsigned char>(t.text[0])))
            throw TranslationError("goal variable " + t.text + " must start uppercase");
        tr.used_names.insert(t.text);
    }
    if (tr.arity.count(goal.pred) && tr.arity.at(goal.pred) != goal.args.size())
        throw TranslationError("goal arity does not match predicate " + goal.pred);

    mra::Schema schema;
    for (const auto& t : goal.args) schema.push_back(t.text);
    mra::ExprPtr expr = tr.expr_for_atom(goal);
    return ProgramAsExpr{std::move(expr), std::move(tr.copies), std::move(schema)};
}

// The goal-answer multiset of a program, as a relation over the goal schema.
inline mra::MultisetRelation goal_relation(const datalog::Program& p,
                                           const datalog::Atom& goal,
                                           const datalog::EvalOptions& opts = {}) {
    mra::Schema schema;
    for (const auto& t : goal.args) schema.push_back(t.text);
    return answers_to_relation(datalog::eval_program(p, goal, opts), schema);
}

// --- graph patterns to relational algebra ----------------------------------------
// Composition of the two steps above. The base relations hold the graph
// encoding, so the expression is specific to the pattern-graph pair.

inline ProgramAsExpr sparql_to_mra(const sparql::PatternPtr& p, const Graph& g,
                                   const PatternTranslationOptions& opts = {},
                                   const datalog::NormalizeOptions& nopts = {}) {
    PatternAsDatalog q = sparql_to_datalog(p, opts);
    datalog::Program combined = std::move(q.program);
    for (const auto& [f, n] : graph_to_facts(g, opts).facts) combined.add_fact(f, n);
    return datalog_to_mra(datalog::normalize(combined, nopts), q.goal);
}

// Decodes relation rows over encoded-variable attributes back into mappings.
inline sparql::MappingMultiset relation_to_mappings(const mra::MultisetRelation& rel) {
    sparql::MappingMultiset out;
    for (const auto& [row, c] : rel.rows) {
        sparql::Mapping m;
        for (size_t i = 0; i < rel.schema.size(); ++i) {
            if (row[i] == null_constant()) continue;
            m.bind(decode_var(rel.schema[i]), decode_constant(row[i]));
        }
        out.add(m, c);
    }
    return out;
}

}  // namespace bagsem::translate

#pragma once

#include <memory>
#include <variant>
#include <vector>

#include "bagsem/algebra.hpp"

namespace bagsem::sparql {

using TermOrVar = std::variant<Term, Variable>;

inline bool is_var(const TermOrVar& t) { return std::holds_alternative<Variable>(t); }

inline std::string to_string(const TermOrVar& t) {
    if (is_var(t)) return to_string(std::get<Variable>(t));
    return rdf::to_string(std::get<Term>(t));
}

// Filter constraints: equality atoms, bound(), and the boolean connectives.
// Structurally a subset of SelectionFormula (no True constant); f_of maps
// one into the other.
struct FilterConstraint;
using ConstraintPtr = std::shared_ptr<const FilterConstraint>;

struct FilterConstraint {
    enum class Kind { Eq, EqVar, Bound, Not, And, Or };

    Kind kind = Kind::Eq;
    Variable var;
    Term term;
    Variable var2;
    ConstraintPtr lhs;
    ConstraintPtr rhs;

    static ConstraintPtr eq(Variable v, Term t) {
        FilterConstraint c{Kind::Eq};
        c.var = std::move(v);
        c.term = std::move(t);
        return std::make_shared<FilterConstraint>(std::move(c));
    }
    static ConstraintPtr eq(Variable v, Variable w) {
        FilterConstraint c{Kind::EqVar};
        c.var = std::move(v);
        c.var2 = std::move(w);
        return std::make_shared<FilterConstraint>(std::move(c));
    }
    static ConstraintPtr bound(Variable v) {
        FilterConstraint c{Kind::Bound};
        c.var = std::move(v);
        return std::make_shared<FilterConstraint>(std::move(c));
    }
    static ConstraintPtr negate(ConstraintPtr x) {
        FilterConstraint c{Kind::Not};
        c.lhs = std::move(x);
        return std::make_shared<FilterConstraint>(std::move(c));
    }
    static ConstraintPtr conj(ConstraintPtr a, ConstraintPtr b) {
        FilterConstraint c{Kind::And};
        c.lhs = std::move(a);
        c.rhs = std::move(b);
        return std::make_shared<FilterConstraint>(std::move(c));
    }
    static ConstraintPtr disj(ConstraintPtr a, ConstraintPtr b) {
        FilterConstraint c{Kind::Or};
        c.lhs = std::move(a);
        c.rhs = std::move(b);
        return std::make_shared<FilterConstraint>(std::move(c));
    }
};

inline bool constraint_equal(const ConstraintPtr& a, const ConstraintPtr& b) {
    if (!a || !b) return !a && !b;
    if (a->kind != b->kind) return false;
    using K = FilterConstraint::Kind;
    switch (a->kind) {
        case K::Eq: return a->var == b->var && a->term == b->term;
        case K::EqVar: return a->var == b->var && a->var2 == b->var2;
        case K::Bound: return a->var == b->var;
        case K::Not: return constraint_equal(a->lhs, b->lhs);
        case K::And:
        case K::Or:
            return constraint_equal(a->lhs, b->lhs) && constraint_equal(a->rhs, b->rhs);
    }
    return false;
}

inline FormulaPtr f_of(const ConstraintPtr& c) {
    using K = FilterConstraint::Kind;
    switch (c->kind) {
        case K::Eq: return SelectionFormula::eq(c->var, c->term);
        case K::EqVar: return SelectionFormula::eq(c->var, c->var2);
        case K::Bound: return SelectionFormula::bound(c->var);
        case K::Not: return SelectionFormula::negate(f_of(c->lhs));
        case K::And: return SelectionFormula::conj(f_of(c->lhs), f_of(c->rhs));
        case K::Or: return SelectionFormula::disj(f_of(c->lhs), f_of(c->rhs));
    }
    throw Error("unreachable constraint kind");
}

inline void collect_vars(const ConstraintPtr& c, std::set<Variable>& out) {
    using K = FilterConstraint::Kind;
    switch (c->kind) {
        case K::Eq: out.insert(c->var); return;
        case K::EqVar: out.insert(c->var); out.insert(c->var2); return;
        case K::Bound: out.insert(c->var); return;
        case K::Not: collect_vars(c->lhs, out); return;
        case K::And:
        case K::Or:
            collect_vars(c->lhs, out);
            collect_vars(c->rhs, out);
            return;
    }
}

inline std::set<Variable> constraint_vars(const ConstraintPtr& c) {
    std::set<Variable> out;
    collect_vars(c, out);
    return out;
}

struct TriplePattern {
    TermOrVar subject;
    TermOrVar predicate;
    TermOrVar object;

    std::set<Variable> vars() const {
        std::set<Variable> out;
        for (const TermOrVar* t : {&subject, &predicate, &object})
            if (is_var(*t)) out.insert(std::get<Variable>(*t));
        return out;
    }

    bool operator==(const TriplePattern& o) const {
        return subject == o.subject && predicate == o.predicate && object == o.object;
    }
};

struct GraphPattern;
using PatternPtr = std::shared_ptr<const GraphPattern>;

struct GraphPattern {
    enum class Kind { Triple, And, Union, Opt, Minus, Diff, Except, ExceptStar, Filter, Select };

    Kind kind = Kind::Triple;
    TriplePattern triple;          // Triple
    PatternPtr left, right;        // binary nodes; Filter/Select use left only
    ConstraintPtr constraint;      // Filter
    std::set<Variable> projection; // Select

    static PatternPtr make_triple(TermOrVar s, TermOrVar p, TermOrVar o) {
        GraphPattern g{Kind::Triple};
        g.triple = TriplePattern{std::move(s), std::move(p), std::move(o)};
        return std::make_shared<GraphPattern>(std::move(g));
    }
    static PatternPtr binary(Kind k, PatternPtr l, PatternPtr r) {
        GraphPattern g{k};
        g.left = std::move(l);
        g.right = std::move(r);
        return std::make_shared<GraphPattern>(std::move(g));
    }
    static PatternPtr filter(PatternPtr p, ConstraintPtr c) {
        GraphPattern g{Kind::Filter};
        g.left = std::move(p);
        g.constraint = std::move(c);
        return std::make_shared<GraphPattern>(std::move(g));
    }
    static PatternPtr select(std::set<Variable> w, PatternPtr p) {
        GraphPattern g{Kind::Select};
        g.left = std::move(p);
        g.projection = std::move(w);
        return std::make_shared<GraphPattern>(std::move(g));
    }
};

inline bool pattern_equal(const PatternPtr& a, const PatternPtr& b) {
    if (!a || !b) return !a && !b;
    if (a->kind != b->kind) return false;
    using K = GraphPattern::Kind;
    switch (a->kind) {
        case K::Triple: return a->triple == b->triple;
        case K::Filter:
            return pattern_equal(a->left, b->left) && constraint_equal(a->constraint, b->constraint);
        case K::Select:
            return a->projection == b->projection && pattern_equal(a->left, b->left);
        default:
            return pattern_equal(a->left, b->left) && pattern_equal(a->right, b->right);
    }
}

// dom(P): the variables a result mapping of P may bind.
inline std::set<Variable> dom(const PatternPtr& p) {
    using K = GraphPattern::Kind;
    switch (p->kind) {
        case K::Triple:
            return p->triple.vars();
        case K::And:
        case K::Union:
        case K::Opt: {
            auto d = dom(p->left);
            auto r = dom(p->right);
            d.insert(r.begin(), r.end());
            return d;
        }
        case K::Minus:
        case K::Diff:
        case K::Except:
        case K::ExceptStar:
        case K::Filter:
            return dom(p->left);
        case K::Select:
            return p->projection;
    }
    throw Error("unreachable pattern kind");
}

// var(P): every variable occurring anywhere, including filter constraints
// and projection lists. Used for freshness when rewriting.
inline void collect_all_vars(const PatternPtr& p, std::set<Variable>& out) {
    using K = GraphPattern::Kind;
    switch (p->kind) {
        case K::Triple: {
            auto v = p->triple.vars();
            out.insert(v.begin(), v.end());
            return;
        }
        case K::Filter:
            collect_all_vars(p->left, out);
            collect_vars(p->constraint, out);
            return;
        case K::Select:
            collect_all_vars(p->left, out);
            out.insert(p->projection.begin(), p->projection.end());
            return;
        default:
            collect_all_vars(p->left, out);
            if (p->right) collect_all_vars(p->right, out);
            return;
    }
}

inline std::set<Variable> all_vars(const PatternPtr& p) {
    std::set<Variable> out;
    collect_all_vars(p, out);
    return out;
}

namespace detail {

// Rewritten patterns share subtrees, so the validator caches domains and
// visits each distinct node once; both are needed to stay linear in the
// number of nodes.
struct Validator {
    std::vector<std::string>& out;
    std::map<const GraphPattern*, std::set<Variable>> doms;
    std::set<const GraphPattern*> seen;

    const std::set<Variable>& dom_of(const PatternPtr& p) {
        auto it = doms.find(p.get());
        if (it != doms.end()) return it->second;
        using K = GraphPattern::Kind;
        std::set<Variable> d;
        switch (p->kind) {
            case K::Triple: d = p->triple.vars(); break;
            case K::And:
            case K::Union:
            case K::Opt: {
                d = dom_of(p->left);
                const auto& r = dom_of(p->right);
                d.insert(r.begin(), r.end());
                break;
            }
            case K::Select: d = p->projection; break;
            default: d = dom_of(p->left); break;
        }
        return doms.emplace(p.get(), std::move(d)).first->second;
    }

    void rec(const PatternPtr& p) {
        if (!seen.insert(p.get()).second) return;
        using K = GraphPattern::Kind;
        switch (p->kind) {
            case K::Triple: {
                if (p->triple.vars().empty())
                    out.push_back("triple pattern has no variables");
                if (!is_var(p->triple.predicate) &&
                    !std::get<Term>(p->triple.predicate).is_iri())
                    out.push_back("literal in predicate position");
                return;
            }
            case K::Filter: {
                rec(p->left);
                const auto& d = dom_of(p->left);
                for (const auto& v : constraint_vars(p->constraint))
                    if (!d.count(v))
                        out.push_back("filter mentions " + to_string(v) +
                                      " outside the domain of its pattern");
                return;
            }
            case K::Select: {
                rec(p->left);
                const auto& d = dom_of(p->left);
                for (const auto& v : p->projection)
                    if (!d.count(v))
                        out.push_back("projection variable " + to_string(v) +
                                      " outside the domain of its pattern");
                return;
            }
            case K::Except: {
                rec(p->left);
                rec(p->right);
                if (dom_of(p->left) != dom_of(p->right))
                    out.push_back("EXCEPT requires equal domains");
                return;
            }
            default:
                rec(p->left);
                if (p->right) rec(p->right);
                return;
        }
    }
};

}  // namespace detail

inline std::vector<std::string> validate(const PatternPtr& p) {
    std::vector<std::string> out;
    detail::Validator v{out};
    v.rec(p);
    return out;
}

inline void validate_or_throw(const PatternPtr& p) {
    auto v = validate(p);
    if (!v.empty()) {
        std::string msg = "ill-formed pattern:";
        for (const auto& s : v) msg += "\n  " + s;
        throw ValidationError(msg);
    }
}

// --- canonical rendering -------------------------------------------------
// Fully parenthesized so that parse(render(p)) == p holds structurally.

inline std::string render(const ConstraintPtr& c) {
    using K = FilterConstraint::Kind;
    switch (c->kind) {
        case K::Eq: return to_string(c->var) + " = " + rdf::to_string(c->term);
        case K::EqVar: return to_string(c->var) + " = " + to_string(c->var2);
        case K::Bound: return "bound(" + to_string(c->var) + ")";
        case K::Not: return "!(" + render(c->lhs) + ")";
        case K::And: return "(" + render(c->lhs) + " && " + render(c->rhs) + ")";
        case K::Or: return "(" + render(c->lhs) + " || " + render(c->rhs) + ")";
    }
    throw Error("unreachable constraint kind");
}

inline std::string render(const PatternPtr& p) {
    using K = GraphPattern::Kind;
    switch (p->kind) {
        case K::Triple:
            return "{ " + to_string(p->triple.subject) + " " +
                   to_string(p->triple.predicate) + " " +
                   to_string(p->triple.object) + " }";
        case K::And: return "(" + render(p->left) + " AND " + render(p->right) + ")";
        case K::Union: return "(" + render(p->left) + " UNION " + render(p->right) + ")";
        case K::Opt: return "(" + render(p->left) + " OPT " + render(p->right) + ")";
        case K::Minus: return "(" + render(p->left) + " MINUS " + render(p->right) + ")";
        case K::Diff: return "(" + render(p->left) + " DIFF " + render(p->right) + ")";
        case K::Except: return "(" + render(p->left) + " EXCEPT " + render(p->right) + ")";
        case K::ExceptStar:
            return "(" + render(p->left) + " EXCEPTSTAR " + render(p->right) + ")";
        case K::Filter:
            return "(" + render(p->left) + " FILTER (" + render(p->constraint) + "))";
        case K::Select: {
            std::string out = "(SELECT";
            for (const auto& v : p->projection) out += " " + to_string(v);
            out += " " + render(p->left) + ")";
            return out;
        }
    }
    throw Error("unreachable pattern kind");
}

}  // namespace bagsem::sparql

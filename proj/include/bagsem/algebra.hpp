#pragma once

#include <memory>

#include "bagsem/mapping.hpp"

namespace bagsem::sparql {

// Filter evaluation is three-valued: an equality over an unbound variable
// is an error, not false. bound() never errors. Connectives follow the
// usual dominance rules (false dominates &&, true dominates ||).
enum class ThreeValued { False, True, Error };

inline ThreeValued tv_not(ThreeValued v) {
    switch (v) {
        case ThreeValued::True: return ThreeValued::False;
        case ThreeValued::False: return ThreeValued::True;
        default: return ThreeValued::Error;
    }
}

inline ThreeValued tv_and(ThreeValued a, ThreeValued b) {
    if (a == ThreeValued::False || b == ThreeValued::False) return ThreeValued::False;
    if (a == ThreeValued::Error || b == ThreeValued::Error) return ThreeValued::Error;
    return ThreeValued::True;
}

inline ThreeValued tv_or(ThreeValued a, ThreeValued b) {
    if (a == ThreeValued::True || b == ThreeValued::True) return ThreeValued::True;
    if (a == ThreeValued::Error || b == ThreeValued::Error) return ThreeValued::Error;
    return ThreeValued::False;
}

// Selection formulas mirror filter constraints plus the constant True,
// which the left-join decomposition needs.
struct SelectionFormula;
using FormulaPtr = std::shared_ptr<const SelectionFormula>;

struct SelectionFormula {
    enum class Kind { True, Eq, EqVar, Bound, Not, And, Or };

    Kind kind = Kind::True;
    Variable var;       // Eq, EqVar, Bound
    Term term;          // Eq
    Variable var2;      // EqVar
    FormulaPtr lhs;     // Not, And, Or
    FormulaPtr rhs;     // And, Or

    static FormulaPtr make_true() {
        return std::make_shared<SelectionFormula>(SelectionFormula{Kind::True});
    }
    static FormulaPtr eq(Variable v, Term t) {
        SelectionFormula f{Kind::Eq};
        f.var = std::move(v);
        f.term = std::move(t);
        return std::make_shared<SelectionFormula>(std::move(f));
    }
    static FormulaPtr eq(Variable v, Variable w) {
        SelectionFormula f{Kind::EqVar};
        f.var = std::move(v);
        f.var2 = std::move(w);
        return std::make_shared<SelectionFormula>(std::move(f));
    }
    static FormulaPtr bound(Variable v) {
        SelectionFormula f{Kind::Bound};
        f.var = std::move(v);
        return std::make_shared<SelectionFormula>(std::move(f));
    }
    static FormulaPtr negate(FormulaPtr f) {
        SelectionFormula n{Kind::Not};
        n.lhs = std::move(f);
        return std::make_shared<SelectionFormula>(std::move(n));
    }
    static FormulaPtr conj(FormulaPtr a, FormulaPtr b) {
        SelectionFormula n{Kind::And};
        n.lhs = std::move(a);
        n.rhs = std::move(b);
        return std::make_shared<SelectionFormula>(std::move(n));
    }
    static FormulaPtr disj(FormulaPtr a, FormulaPtr b) {
        SelectionFormula n{Kind::Or};
        n.lhs = std::move(a);
        n.rhs = std::move(b);
        return std::make_shared<SelectionFormula>(std::move(n));
    }
};

inline ThreeValued eval_formula(const Mapping& m, const SelectionFormula& f) {
    using K = SelectionFormula::Kind;
    switch (f.kind) {
        case K::True:
            return ThreeValued::True;
        case K::Eq: {
            auto t = m.get(f.var);
            if (!t) return ThreeValued::Error;
            return *t == f.term ? ThreeValued::True : ThreeValued::False;
        }
        case K::EqVar: {
            auto a = m.get(f.var);
            auto b = m.get(f.var2);
            if (!a || !b) return ThreeValued::Error;
            return *a == *b ? ThreeValued::True : ThreeValued::False;
        }
        case K::Bound:
            return m.bound(f.var) ? ThreeValued::True : ThreeValued::False;
        case K::Not:
            return tv_not(eval_formula(m, *f.lhs));
        case K::And:
            return tv_and(eval_formula(m, *f.lhs), eval_formula(m, *f.rhs));
        case K::Or:
            return tv_or(eval_formula(m, *f.lhs), eval_formula(m, *f.rhs));
    }
    throw Error("unreachable formula kind");
}

inline ThreeValued eval_formula(const Mapping& m, const FormulaPtr& f) {
    return eval_formula(m, *f);
}

// pi_W: restrict every mapping to W; coinciding restrictions add up.
inline MappingMultiset project(const MappingMultiset& omega,
                               const std::set<Variable>& w) {
    MappingMultiset out;
    for (const auto& [m, c] : omega.entries) out.add(restrict_to(m, w), c);
    return out;
}

// sigma_F: keep mappings on which F evaluates to true; counts unchanged.
inline MappingMultiset select_sigma(const MappingMultiset& omega, const FormulaPtr& f) {
    MappingMultiset out;
    for (const auto& [m, c] : omega.entries)
        if (eval_formula(m, f) == ThreeValued::True) out.add(m, c);
    return out;
}

// Join: every compatible pair contributes the product of its counts, so a
// merged mapping accumulates the sum over all of its decompositions.
inline MappingMultiset join(const MappingMultiset& a, const MappingMultiset& b) {
    MappingMultiset out;
    for (const auto& [m1, c1] : a.entries)
        for (const auto& [m2, c2] : b.entries)
            if (compatible(m1, m2)) out.add(merge(m1, m2), checked_mul(c1, c2));
    return out;
}

inline MappingMultiset multiset_union(const MappingMultiset& a, const MappingMultiset& b) {
    MappingMultiset out = a;
    for (const auto& [m, c] : b.entries) out.add(m, c);
    return out;
}

// MINUS: keep m1 iff every m2 is incompatible with it or shares no domain
// variable with it. Multiplicities of survivors are untouched.
inline MappingMultiset minus(const MappingMultiset& a, const MappingMultiset& b) {
    MappingMultiset out;
    for (const auto& [m1, c1] : a.entries) {
        bool keep = true;
        for (const auto& [m2, c2] : b.entries) {
            if (!compatible(m1, m2)) continue;
            bool dom_disjoint = true;
            for (const auto& [v, t] : m2.bindings)
                if (m1.bound(v)) { dom_disjoint = false; break; }
            if (!dom_disjoint) { keep = false; break; }
        }
        if (keep) out.add(m1, c1);
    }
    return out;
}

// Conditional difference: keep m1 iff no compatible m2 makes F true on the
// merged mapping. With F = True this is the plain DIFF operator.
inline MappingMultiset diff(const MappingMultiset& a, const MappingMultiset& b,
                            const FormulaPtr& f) {
    MappingMultiset out;
    for (const auto& [m1, c1] : a.entries) {
        bool keep = true;
        for (const auto& [m2, c2] : b.entries) {
            if (!compatible(m1, m2)) continue;
            if (eval_formula(merge(m1, m2), f) == ThreeValued::True) {
                keep = false;
                break;
            }
        }
        if (keep) out.add(m1, c1);
    }
    return out;
}

inline MappingMultiset left_join(const MappingMultiset& a, const MappingMultiset& b,
                                 const FormulaPtr& f) {
    return multiset_union(select_sigma(join(a, b), f), diff(a, b, f));
}

}  // namespace bagsem::sparql

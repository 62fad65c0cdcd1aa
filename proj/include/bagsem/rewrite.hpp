#pragma once

#include <cstdint>
#include <map>

#include "bagsem/pattern.hpp"

namespace bagsem::sparql {

// Supplies variable names that do not clash with anything already in use.
// Seed it with all_vars() of the pattern being rewritten; every name it
// hands out is recorded so later requests stay distinct.
struct FreshNameSource {
    std::set<Variable> used;
    std::string prefix = "v";
    uint64_t counter = 0;

    explicit FreshNameSource(std::set<Variable> taken, std::string pfx = "v")
        : used(std::move(taken)), prefix(std::move(pfx)) {}

    Variable fresh() {
        Variable v;
        do {
            v = Variable(prefix + std::to_string(++counter));
        } while (used.count(v));
        used.insert(v);
        return v;
    }
};

namespace rewrite_detail {

// Rewritten patterns are DAGs: lowering a difference mentions its left side
// twice, and those occurrences share one node. Rewrite passes memoize on
// node identity so shared subtrees stay shared instead of being expanded
// into exponentially many copies.
using Memo = std::map<const GraphPattern*, PatternPtr>;

inline ConstraintPtr conj_all(const std::vector<ConstraintPtr>& cs) {
    ConstraintPtr out;
    for (const auto& c : cs) out = out ? FilterConstraint::conj(out, c) : c;
    return out;
}

inline ConstraintPtr disj_all(const std::vector<ConstraintPtr>& cs) {
    ConstraintPtr out;
    for (const auto& c : cs) out = out ? FilterConstraint::disj(out, c) : c;
    return out;
}

// A null constraint stands for "no condition"; skip the filter node then.
inline PatternPtr filter_if(PatternPtr p, ConstraintPtr c) {
    if (!c) return p;
    return GraphPattern::filter(std::move(p), std::move(c));
}

inline PatternPtr rebuild_binary(const PatternPtr& p, PatternPtr l, PatternPtr r) {
    if (l == p->left && r == p->right) return p;
    return GraphPattern::binary(p->kind, std::move(l), std::move(r));
}

inline PatternPtr rebuild_filter(const PatternPtr& p, PatternPtr child) {
    if (child == p->left) return p;
    return GraphPattern::filter(std::move(child), p->constraint);
}

inline PatternPtr rebuild_select(const PatternPtr& p, PatternPtr child) {
    if (child == p->left) return p;
    return GraphPattern::select(p->projection, std::move(child));
}

using Renaming = std::map<Variable, Variable>;

inline Variable renamed(const Renaming& r, const Variable& v) {
    auto it = r.find(v);
    return it == r.end() ? v : it->second;
}

inline TermOrVar renamed(const Renaming& r, const TermOrVar& t) {
    if (!is_var(t)) return t;
    return renamed(r, std::get<Variable>(t));
}

inline ConstraintPtr rename(const ConstraintPtr& c, const Renaming& r) {
    using K = FilterConstraint::Kind;
    switch (c->kind) {
        case K::Eq: return FilterConstraint::eq(renamed(r, c->var), c->term);
        case K::EqVar: return FilterConstraint::eq(renamed(r, c->var), renamed(r, c->var2));
        case K::Bound: return FilterConstraint::bound(renamed(r, c->var));
        case K::Not: return FilterConstraint::negate(rename(c->lhs, r));
        case K::And: return FilterConstraint::conj(rename(c->lhs, r), rename(c->rhs, r));
        case K::Or: return FilterConstraint::disj(rename(c->lhs, r), rename(c->rhs, r));
    }
    throw Error("unreachable constraint kind");
}

inline PatternPtr rename(const PatternPtr& p, const Renaming& r, Memo& memo) {
    auto it = memo.find(p.get());
    if (it != memo.end()) return it->second;
    using K = GraphPattern::Kind;
    PatternPtr out;
    switch (p->kind) {
        case K::Triple:
            out = GraphPattern::make_triple(renamed(r, p->triple.subject),
                                            renamed(r, p->triple.predicate),
                                            renamed(r, p->triple.object));
            break;
        case K::Filter:
            out = GraphPattern::filter(rename(p->left, r, memo), rename(p->constraint, r));
            break;
        case K::Select: {
            std::set<Variable> w;
            for (const auto& v : p->projection) w.insert(renamed(r, v));
            out = GraphPattern::select(std::move(w), rename(p->left, r, memo));
            break;
        }
        default:
            out = GraphPattern::binary(p->kind, rename(p->left, r, memo),
                                       rename(p->right, r, memo));
            break;
    }
    memo.emplace(p.get(), out);
    return out;
}

inline PatternPtr rename(const PatternPtr& p, const Renaming& r) {
    Memo memo;
    return rename(p, r, memo);
}

// Rewrites a condition so that evaluating it over a pair mapping (one side
// original, the other renamed apart by theta) gives exactly the value it
// would have on the merged mapping. A variable both sides may bind is read
// through a bound() guard: take the left value when bound there, otherwise
// the renamed right copy. Guards are two-valued, so exactly one branch of
// each disjunction is live and the others collapse to false.
inline ConstraintPtr lift(const ConstraintPtr& c, const std::set<Variable>& shared,
                          const Renaming& theta) {
    using K = FilterConstraint::Kind;
    struct Reading {
        ConstraintPtr guard;  // null means unconditional
        Variable var;
    };
    auto readings = [&](const Variable& v) -> std::vector<Reading> {
        if (shared.count(v))
            return {{FilterConstraint::bound(v), v},
                    {FilterConstraint::negate(FilterConstraint::bound(v)), renamed(theta, v)}};
        return {{nullptr, renamed(theta, v)}};
    };
    switch (c->kind) {
        case K::Eq: {
            std::vector<ConstraintPtr> branches;
            for (const auto& rd : readings(c->var)) {
                ConstraintPtr atom = FilterConstraint::eq(rd.var, c->term);
                branches.push_back(rd.guard ? FilterConstraint::conj(rd.guard, atom) : atom);
            }
            return disj_all(branches);
        }
        case K::EqVar: {
            std::vector<ConstraintPtr> branches;
            for (const auto& ra : readings(c->var))
                for (const auto& rb : readings(c->var2)) {
                    ConstraintPtr atom = FilterConstraint::eq(ra.var, rb.var);
                    if (rb.guard) atom = FilterConstraint::conj(rb.guard, atom);
                    if (ra.guard) atom = FilterConstraint::conj(ra.guard, atom);
                    branches.push_back(atom);
                }
            return disj_all(branches);
        }
        case K::Bound: {
            ConstraintPtr right = FilterConstraint::bound(renamed(theta, c->var));
            if (!shared.count(c->var)) return right;
            return FilterConstraint::disj(FilterConstraint::bound(c->var), right);
        }
        case K::Not: return FilterConstraint::negate(lift(c->lhs, shared, theta));
        case K::And: return FilterConstraint::conj(lift(c->lhs, shared, theta),
                                                   lift(c->rhs, shared, theta));
        case K::Or: return FilterConstraint::disj(lift(c->lhs, shared, theta),
                                                  lift(c->rhs, shared, theta));
    }
    throw Error("unreachable constraint kind");
}

// Difference against a renamed-apart copy of the right side. A result of
// the left survives unless the join witnesses a right mapping that is
// compatible with it (and, depending on mode, overlaps it or satisfies the
// lifted condition). Projecting the witness join back to the left domain
// yields exactly the left mappings to remove, and EXCEPT removes them.
//
// The compatibility test per shared variable is (x = x') or either side
// unbound; the unbound guards also absorb the error the equality would
// raise, so the whole conjunct never errors.
inline PatternPtr lower_difference(const PatternPtr& a, const PatternPtr& b,
                                   const ConstraintPtr& cond, bool minus_mode,
                                   FreshNameSource& fresh) {
    using GP = GraphPattern;
    using FC = FilterConstraint;
    std::set<Variable> da = dom(a), db = dom(b);
    std::set<Variable> shared;
    for (const auto& v : da)
        if (db.count(v)) shared.insert(v);

    // MINUS only discards a mapping when it overlaps a compatible one, and
    // mappings of domain-disjoint patterns never overlap.
    if (minus_mode && shared.empty()) return a;

    Renaming theta;
    for (const auto& v : all_vars(b)) theta[v] = fresh.fresh();
    PatternPtr b_renamed = rename(b, theta);

    std::vector<ConstraintPtr> conds;
    for (const auto& x : shared) {
        Variable xr = theta.at(x);
        conds.push_back(FC::disj(FC::disj(FC::eq(x, xr), FC::negate(FC::bound(x))),
                                 FC::negate(FC::bound(xr))));
    }
    if (minus_mode) {
        std::vector<ConstraintPtr> overlaps;
        for (const auto& x : shared)
            overlaps.push_back(FC::conj(FC::bound(x), FC::bound(theta.at(x))));
        conds.push_back(disj_all(overlaps));
    }
    if (cond) conds.push_back(lift(cond, shared, theta));

    PatternPtr witnesses =
        filter_if(GP::binary(GP::Kind::And, a, b_renamed), conj_all(conds));
    PatternPtr removed = GP::select(da, witnesses);
    return GP::binary(GP::Kind::Except, a, removed);
}

}  // namespace rewrite_detail

// Stage 1: eliminate OPTIONAL. The unextended branch goes through
// lower_difference, so the output uses joins, unions, filters, selects and
// EXCEPT only (plus whatever MINUS/DIFF/EXCEPT* nodes the input already had).
// A right child that is literally a FILTER contributes its condition to the
// left join, mirroring how evaluation dispatches on that same shape.
namespace rewrite_detail {

inline PatternPtr eliminate_optional_rec(const PatternPtr& p, FreshNameSource& fresh,
                                         Memo& memo) {
    auto it = memo.find(p.get());
    if (it != memo.end()) return it->second;
    using K = GraphPattern::Kind;
    using GP = GraphPattern;
    PatternPtr out;
    switch (p->kind) {
        case K::Triple: out = p; break;
        case K::Opt: {
            PatternPtr a = eliminate_optional_rec(p->left, fresh, memo);
            PatternPtr b;
            ConstraintPtr cond;
            if (p->right->kind == K::Filter) {
                b = eliminate_optional_rec(p->right->left, fresh, memo);
                cond = p->right->constraint;
            } else {
                b = eliminate_optional_rec(p->right, fresh, memo);
            }
            PatternPtr extended = filter_if(GP::binary(K::And, a, b), cond);
            PatternPtr unextended = lower_difference(a, b, cond, false, fresh);
            out = GP::binary(K::Union, extended, unextended);
            break;
        }
        case K::Filter:
            out = rebuild_filter(p, eliminate_optional_rec(p->left, fresh, memo));
            break;
        case K::Select:
            out = rebuild_select(p, eliminate_optional_rec(p->left, fresh, memo));
            break;
        default:
            out = rebuild_binary(p, eliminate_optional_rec(p->left, fresh, memo),
                                 eliminate_optional_rec(p->right, fresh, memo));
            break;
    }
    memo.emplace(p.get(), out);
    return out;
}

inline PatternPtr eliminate_minus_diff_rec(const PatternPtr& p, FreshNameSource& fresh,
                                           Memo& memo) {
    auto it = memo.find(p.get());
    if (it != memo.end()) return it->second;
    using K = GraphPattern::Kind;
    PatternPtr out;
    switch (p->kind) {
        case K::Triple: out = p; break;
        case K::Minus:
        case K::Diff: {
            PatternPtr a = eliminate_minus_diff_rec(p->left, fresh, memo);
            PatternPtr b = eliminate_minus_diff_rec(p->right, fresh, memo);
            out = lower_difference(a, b, nullptr, p->kind == K::Minus, fresh);
            break;
        }
        case K::Filter:
            out = rebuild_filter(p, eliminate_minus_diff_rec(p->left, fresh, memo));
            break;
        case K::Select:
            out = rebuild_select(p, eliminate_minus_diff_rec(p->left, fresh, memo));
            break;
        default:
            out = rebuild_binary(p, eliminate_minus_diff_rec(p->left, fresh, memo),
                                 eliminate_minus_diff_rec(p->right, fresh, memo));
            break;
    }
    memo.emplace(p.get(), out);
    return out;
}

}  // namespace rewrite_detail

inline PatternPtr eliminate_optional(const PatternPtr& p, FreshNameSource& fresh) {
    rewrite_detail::Memo memo;
    return rewrite_detail::eliminate_optional_rec(p, fresh, memo);
}

inline PatternPtr eliminate_optional(const PatternPtr& p) {
    FreshNameSource fresh(all_vars(p));
    return eliminate_optional(p, fresh);
}

// Stage 2: eliminate MINUS and DIFF through the same difference lowering.
inline PatternPtr eliminate_minus_diff(const PatternPtr& p, FreshNameSource& fresh) {
    rewrite_detail::Memo memo;
    return rewrite_detail::eliminate_minus_diff_rec(p, fresh, memo);
}

inline PatternPtr eliminate_minus_diff(const PatternPtr& p) {
    FreshNameSource fresh(all_vars(p));
    return eliminate_minus_diff(p, fresh);
}

// Stage 3: reduce EXCEPT* (no domain precondition) to EXCEPT (equal
// domains). Split the left side by whether any left-only variable is bound:
//
//   - some left-only variable bound: no right mapping can equal it, keep it;
//   - none bound: the mapping lives inside the common domain, so compare it
//     there against the right mappings that bind nothing outside it.
//
// Projections to the common domain are injective on those mappings (every
// bound variable already lies inside), so counts carry over unchanged.
namespace rewrite_detail {

inline PatternPtr lower_except_star_rec(const PatternPtr& p, Memo& memo) {
    auto found = memo.find(p.get());
    if (found != memo.end()) return found->second;
    using K = GraphPattern::Kind;
    using GP = GraphPattern;
    using FC = FilterConstraint;
    PatternPtr out;
    switch (p->kind) {
        case K::Triple: out = p; break;
        case K::Filter:
            out = rebuild_filter(p, lower_except_star_rec(p->left, memo));
            break;
        case K::Select:
            out = rebuild_select(p, lower_except_star_rec(p->left, memo));
            break;
        case K::ExceptStar: {
            PatternPtr a = lower_except_star_rec(p->left, memo);
            PatternPtr b = lower_except_star_rec(p->right, memo);
            std::set<Variable> x = dom(a), y = dom(b);
            std::set<Variable> common, left_only, right_only;
            for (const auto& v : x) (y.count(v) ? common : left_only).insert(v);
            for (const auto& v : y)
                if (!x.count(v)) right_only.insert(v);

            std::vector<ConstraintPtr> none_r, none_l, some_l;
            for (const auto& v : right_only) none_r.push_back(FC::negate(FC::bound(v)));
            for (const auto& v : left_only) {
                none_l.push_back(FC::negate(FC::bound(v)));
                some_l.push_back(FC::bound(v));
            }

            PatternPtr rhs = filter_if(b, conj_all(none_r));
            if (!right_only.empty()) rhs = GP::select(common, rhs);
            PatternPtr lhs = filter_if(a, conj_all(none_l));
            if (!left_only.empty()) lhs = GP::select(common, lhs);
            PatternPtr compared = GP::binary(K::Except, lhs, rhs);
            if (left_only.empty()) {
                out = compared;
            } else {
                PatternPtr kept = GP::filter(a, disj_all(some_l));
                out = GP::binary(K::Union, kept, compared);
            }
            break;
        }
        default:
            out = rebuild_binary(p, lower_except_star_rec(p->left, memo),
                                 lower_except_star_rec(p->right, memo));
            break;
    }
    memo.emplace(p.get(), out);
    return out;
}

}  // namespace rewrite_detail

inline PatternPtr lower_except_star(const PatternPtr& p) {
    rewrite_detail::Memo memo;
    return rewrite_detail::lower_except_star_rec(p, memo);
}

// Stage 4: atomization. A composite condition is compiled into branches of
// atomic conditions; each branch is a conjunction, branch lists partition
// the mappings by the three-valued outcome of the condition. when_true
// covers exactly the mappings the condition accepts, so replacing the
// filter by a union of per-branch filter chains is count-exact: no mapping
// satisfies two branches.
struct SignBranches {
    std::vector<std::vector<ConstraintPtr>> when_true, when_false, when_error;
};

namespace rewrite_detail {

// Branches whose atoms cannot all be true at once contribute nothing, so
// dropping them is sound and keeps the cross products from exploding. An
// equality or its negation being true forces its variables bound, bound()
// atoms force the stated polarity, and a literal next to its own negation
// is impossible.
inline bool branch_satisfiable(const std::vector<ConstraintPtr>& branch) {
    using K = FilterConstraint::Kind;
    std::map<Variable, bool> demands;
    auto demand = [&](const Variable& v, bool must_be_bound) {
        auto [it, inserted] = demands.emplace(v, must_be_bound);
        return inserted || it->second == must_be_bound;
    };
    for (const auto& c : branch) {
        const FilterConstraint* atom = c.get();
        bool positive = true;
        if (atom->kind == K::Not) {
            atom = atom->lhs.get();
            positive = false;
        }
        switch (atom->kind) {
            case K::Eq:
                if (!demand(atom->var, true)) return false;
                break;
            case K::EqVar:
                if (!demand(atom->var, true) || !demand(atom->var2, true)) return false;
                break;
            case K::Bound:
                if (!demand(atom->var, positive)) return false;
                break;
            default:
                break;
        }
    }
    for (size_t i = 0; i < branch.size(); ++i)
        for (size_t j = i + 1; j < branch.size(); ++j) {
            const auto& x = branch[i];
            const auto& y = branch[j];
            if (x->kind == K::Not && constraint_equal(x->lhs, y)) return false;
            if (y->kind == K::Not && constraint_equal(y->lhs, x)) return false;
        }
    return true;
}

}  // namespace rewrite_detail

inline SignBranches sign_branches(const ConstraintPtr& c) {
    using K = FilterConstraint::Kind;
    using FC = FilterConstraint;
    using Branches = std::vector<std::vector<ConstraintPtr>>;
    auto cross = [](const Branches& xs, const Branches& ys) {
        Branches out;
        for (const auto& xb : xs)
            for (const auto& yb : ys) {
                auto b = xb;
                b.insert(b.end(), yb.begin(), yb.end());
                if (rewrite_detail::branch_satisfiable(b)) out.push_back(std::move(b));
            }
        return out;
    };
    auto cat = [](Branches a, const Branches& b, const Branches& c) {
        a.insert(a.end(), b.begin(), b.end());
        a.insert(a.end(), c.begin(), c.end());
        return a;
    };
    switch (c->kind) {
        case K::Eq:
            return SignBranches{{{c}},
                                {{FC::negate(c)}},
                                {{FC::negate(FC::bound(c->var))}}};
        case K::EqVar:
            return SignBranches{{{c}},
                                {{FC::negate(c)}},
                                {{FC::negate(FC::bound(c->var))},
                                 {FC::bound(c->var), FC::negate(FC::bound(c->var2))}}};
        case K::Bound:
            return SignBranches{{{c}}, {{FC::negate(c)}}, {}};
        case K::Not: {
            SignBranches s = sign_branches(c->lhs);
            return SignBranches{std::move(s.when_false), std::move(s.when_true),
                                std::move(s.when_error)};
        }
        case K::And: {
            SignBranches l = sign_branches(c->lhs);
            SignBranches r = sign_branches(c->rhs);
            // false wins over error, so any false left branch decides alone
            return SignBranches{
                cross(l.when_true, r.when_true),
                cat(l.when_false, cross(l.when_true, r.when_false),
                    cross(l.when_error, r.when_false)),
                cat(cross(l.when_true, r.when_error), cross(l.when_error, r.when_true),
                    cross(l.when_error, r.when_error))};
        }
        case K::Or: {
            SignBranches l = sign_branches(c->lhs);
            SignBranches r = sign_branches(c->rhs);
            return SignBranches{
                cat(l.when_true, cross(l.when_false, r.when_true),
                    cross(l.when_error, r.when_true)),
                cross(l.when_false, r.when_false),
                cat(cross(l.when_false, r.when_error), cross(l.when_error, r.when_false),
                    cross(l.when_error, r.when_error))};
        }
    }
    throw Error("unreachable constraint kind");
}

inline bool is_atomic_condition(const ConstraintPtr& c) {
    using K = FilterConstraint::Kind;
    switch (c->kind) {
        case K::Eq:
        case K::EqVar:
        case K::Bound:
            return true;
        case K::Not:
            return c->lhs->kind == K::Eq || c->lhs->kind == K::EqVar ||
                   c->lhs->kind == K::Bound;
        default:
            return false;
    }
}

namespace rewrite_detail {

inline PatternPtr atomize_filters_rec(const PatternPtr& p, Memo& memo) {
    auto found = memo.find(p.get());
    if (found != memo.end()) return found->second;
    using K = GraphPattern::Kind;
    using GP = GraphPattern;
    PatternPtr out;
    switch (p->kind) {
        case K::Triple: out = p; break;
        case K::Select:
            out = rebuild_select(p, atomize_filters_rec(p->left, memo));
            break;
        case K::Filter: {
            PatternPtr inner = atomize_filters_rec(p->left, memo);
            if (is_atomic_condition(p->constraint)) {
                out = rebuild_filter(p, inner);
                break;
            }
            SignBranches s = sign_branches(p->constraint);
            if (s.when_true.empty()) {
                // unsatisfiable condition; a pattern minus itself is empty
                out = GP::binary(K::Except, inner, inner);
                break;
            }
            std::vector<PatternPtr> parts;
            for (const auto& branch : s.when_true) {
                PatternPtr q = inner;
                for (const auto& atom : branch) q = GP::filter(q, atom);
                parts.push_back(q);
            }
            // balanced union keeps recursion depth logarithmic in the
            // number of branches
            while (parts.size() > 1) {
                std::vector<PatternPtr> next;
                for (size_t i = 0; i + 1 < parts.size(); i += 2)
                    next.push_back(GP::binary(K::Union, parts[i], parts[i + 1]));
                if (parts.size() % 2) next.push_back(parts.back());
                parts = std::move(next);
            }
            out = parts.front();
            break;
        }
        default:
            out = rebuild_binary(p, atomize_filters_rec(p->left, memo),
                                 atomize_filters_rec(p->right, memo));
            break;
    }
    memo.emplace(p.get(), out);
    return out;
}

}  // namespace rewrite_detail

inline PatternPtr atomize_filters(const PatternPtr& p) {
    rewrite_detail::Memo memo;
    return rewrite_detail::atomize_filters_rec(p, memo);
}

// Core form: triples, AND, UNION, EXCEPT, SELECT, and filters whose
// condition is a possibly negated single atom.
namespace rewrite_detail {

inline void check_core_rec(const PatternPtr& p, std::set<const GraphPattern*>& seen,
                           std::vector<std::string>& out) {
    if (!seen.insert(p.get()).second) return;
    using K = GraphPattern::Kind;
    switch (p->kind) {
        case K::Triple: return;
        case K::Opt:
        case K::Minus:
        case K::Diff:
        case K::ExceptStar: {
            const char* name = p->kind == K::Opt      ? "OPT"
                               : p->kind == K::Minus  ? "MINUS"
                               : p->kind == K::Diff   ? "DIFF"
                                                      : "EXCEPTSTAR";
            out.push_back(std::string("non-core operator: ") + name);
            check_core_rec(p->left, seen, out);
            check_core_rec(p->right, seen, out);
            return;
        }
        case K::Filter:
            if (!is_atomic_condition(p->constraint))
                out.push_back("composite filter condition: " + render(p->constraint));
            check_core_rec(p->left, seen, out);
            return;
        case K::Select:
            check_core_rec(p->left, seen, out);
            return;
        default:
            check_core_rec(p->left, seen, out);
            check_core_rec(p->right, seen, out);
            return;
    }
}

}  // namespace rewrite_detail

inline std::vector<std::string> check_core(const PatternPtr& p) {
    std::vector<std::string> out;
    std::set<const GraphPattern*> seen;
    rewrite_detail::check_core_rec(p, seen, out);
    return out;
}

inline bool is_core(const PatternPtr& p) { return check_core(p).empty(); }

inline PatternPtr to_core(const PatternPtr& p) {
    validate_or_throw(p);
    FreshNameSource fresh(all_vars(p));
    PatternPtr q = eliminate_optional(p, fresh);
    q = eliminate_minus_diff(q, fresh);
    q = lower_except_star(q);
    q = atomize_filters(q);
    validate_or_throw(q);
    auto leftovers = check_core(q);
    if (!leftovers.empty())
        throw Error("rewrite left a non-core node: " + leftovers.front());
    return q;
}

}  // namespace bagsem::sparql

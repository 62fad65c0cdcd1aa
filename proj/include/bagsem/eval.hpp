#pragma once

#include "bagsem/pattern.hpp"

namespace bagsem::sparql {

namespace eval_detail {

inline bool match_component(const TermOrVar& pat, const Term& value, Mapping& m) {
    if (!is_var(pat)) return std::get<Term>(pat) == value;
    const Variable& v = std::get<Variable>(pat);
    auto bound = m.get(v);
    if (bound) return *bound == value;
    m.bind(v, value);
    return true;
}

inline MappingMultiset eval_triple(const TriplePattern& t, const rdf::Graph& g) {
    MappingMultiset out;
    for (const rdf::Triple& tr : g) {
        Mapping m;
        if (match_component(t.subject, tr.subject, m) &&
            match_component(t.predicate, tr.predicate, m) &&
            match_component(t.object, tr.object, m))
            out.add(m, 1);
    }
    return out;
}

}  // namespace eval_detail

// Rewriting produces patterns that share subtrees (the same node reachable
// along several paths), so evaluation memoizes per node: each distinct node
// is computed once per graph.
using EvalCache = std::map<const GraphPattern*, MappingMultiset>;

inline const MappingMultiset& eval_cached(const PatternPtr& p, const rdf::Graph& g,
                                          EvalCache& cache) {
    auto found = cache.find(p.get());
    if (found != cache.end()) return found->second;
    using K = GraphPattern::Kind;
    MappingMultiset out;
    switch (p->kind) {
        case K::Triple:
            out = eval_detail::eval_triple(p->triple, g);
            break;
        case K::And:
            out = join(eval_cached(p->left, g, cache), eval_cached(p->right, g, cache));
            break;
        case K::Union:
            out = multiset_union(eval_cached(p->left, g, cache),
                                 eval_cached(p->right, g, cache));
            break;
        case K::Opt: {
            // Dispatch is syntactic: when the right child is literally a
            // FILTER node, the condition moves into the left join and the
            // filtered pattern's own result feeds it.
            if (p->right->kind == K::Filter) {
                out = left_join(eval_cached(p->left, g, cache),
                                eval_cached(p->right->left, g, cache),
                                f_of(p->right->constraint));
            } else {
                out = left_join(eval_cached(p->left, g, cache),
                                eval_cached(p->right, g, cache),
                                SelectionFormula::make_true());
            }
            break;
        }
        case K::Minus:
            out = minus(eval_cached(p->left, g, cache), eval_cached(p->right, g, cache));
            break;
        case K::Diff:
            out = diff(eval_cached(p->left, g, cache), eval_cached(p->right, g, cache),
                       SelectionFormula::make_true());
            break;
        case K::Except:
        case K::ExceptStar: {
            const MappingMultiset& a = eval_cached(p->left, g, cache);
            const MappingMultiset& b = eval_cached(p->right, g, cache);
            for (const auto& [m, c] : a.entries)
                if (!b.contains(m)) out.add(m, c);
            break;
        }
        case K::Filter:
            out = select_sigma(eval_cached(p->left, g, cache), f_of(p->constraint));
            break;
        case K::Select:
            out = project(eval_cached(p->left, g, cache), p->projection);
            break;
    }
    return cache.emplace(p.get(), std::move(out)).first->second;
}

inline MappingMultiset evaluate_unchecked(const PatternPtr& p, const rdf::Graph& g) {
    EvalCache cache;
    return eval_cached(p, g, cache);
}

inline MappingMultiset evaluate(const PatternPtr& p, const rdf::Graph& g) {
    validate_or_throw(p);
    return evaluate_unchecked(p, g);
}

// Trace of how the root operator assembled its result: one entry per
// derivation event (matched triple, compatible pair, surviving mapping...).
// Contributions for the same mapping sum to its final count.
struct TraceEntry {
    Mapping result;
    Count contribution;
    std::string via;
};

struct EvalTrace {
    std::vector<TraceEntry> entries;
};

inline std::pair<MappingMultiset, EvalTrace> evaluate_with_trace(const PatternPtr& p,
                                                                 const rdf::Graph& g) {
    validate_or_throw(p);
    using K = GraphPattern::Kind;
    EvalTrace trace;
    MappingMultiset result;
    auto record = [&](const Mapping& m, Count c, std::string via) {
        result.add(m, c);
        trace.entries.push_back(TraceEntry{m, c, std::move(via)});
    };
    switch (p->kind) {
        case K::Triple: {
            for (const rdf::Triple& tr : g) {
                Mapping m;
                if (eval_detail::match_component(p->triple.subject, tr.subject, m) &&
                    eval_detail::match_component(p->triple.predicate, tr.predicate, m) &&
                    eval_detail::match_component(p->triple.object, tr.object, m))
                    record(m, 1,
                           rdf::to_string(tr.subject) + " " + rdf::to_string(tr.predicate) +
                               " " + rdf::to_string(tr.object));
            }
            break;
        }
        case K::And: {
            MappingMultiset a = evaluate_unchecked(p->left, g);
            MappingMultiset b = evaluate_unchecked(p->right, g);
            for (const auto& [m1, c1] : a.entries)
                for (const auto& [m2, c2] : b.entries)
                    if (compatible(m1, m2))
                        record(merge(m1, m2), checked_mul(c1, c2), "pair");
            break;
        }
        case K::Union: {
            MappingMultiset a = evaluate_unchecked(p->left, g);
            MappingMultiset b = evaluate_unchecked(p->right, g);
            for (const auto& [m, c] : a.entries) record(m, c, "left");
            for (const auto& [m, c] : b.entries) record(m, c, "right");
            break;
        }
        case K::Opt: {
            bool filtered = p->right->kind == K::Filter;
            MappingMultiset a = evaluate_unchecked(p->left, g);
            MappingMultiset b =
                evaluate_unchecked(filtered ? p->right->left : p->right, g);
            FormulaPtr f = filtered ? f_of(p->right->constraint)
                                    : SelectionFormula::make_true();
            for (const auto& [m1, c1] : a.entries)
                for (const auto& [m2, c2] : b.entries)
                    if (compatible(m1, m2)) {
                        Mapping m = merge(m1, m2);
                        if (eval_formula(m, f) == ThreeValued::True)
                            record(m, checked_mul(c1, c2), "extended");
                    }
            MappingMultiset d = diff(a, b, f);
            for (const auto& [m, c] : d.entries) record(m, c, "unextended");
            break;
        }
        default: {
            // remaining operators keep or drop whole entries
            MappingMultiset r = evaluate_unchecked(p, g);
            if (p->kind == K::Select) {
                MappingMultiset a = evaluate_unchecked(p->left, g);
                for (const auto& [m, c] : a.entries)
                    record(restrict_to(m, p->projection), c, "projected");
            } else {
                for (const auto& [m, c] : r.entries) record(m, c, "kept");
            }
            result = r;
            break;
        }
    }
    return {result, trace};
}

}  // namespace bagsem::sparql

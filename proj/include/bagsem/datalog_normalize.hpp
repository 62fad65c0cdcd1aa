#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "bagsem/common.hpp"
#include "bagsem/datalog.hpp"

namespace bagsem::datalog {

// Normal form: every rule is one of
//   projection   L :- L1.                      var(L) subset of var(L1)
//   selection    L :- L1, cmp, ...             cmp vars inside var(L1), var(L) subset
//   join         L :- L1, L2.                  var(L) = var(L1) union var(L2)
//   negation     L :- L1, not L2.              var(L2) subset of var(L1), var(L) = var(L1)
// Heads may still carry constants or repeated variables; those are a concern
// of individual consumers, not of the shape itself.

enum class RuleShape { Projection, Selection, Join, Negation, None };

inline RuleShape shape_of(const Rule& r) {
    std::vector<const Atom*> pos, neg;
    std::vector<const Literal*> cmp;
    for (const auto& l : r.body) {
        switch (l.kind) {
            case Literal::Kind::Pos: pos.push_back(&l.atom); break;
            case Literal::Kind::Neg: neg.push_back(&l.atom); break;
            default: cmp.push_back(&l); break;
        }
    }
    auto subset = [](const std::set<std::string>& a, const std::set<std::string>& b) {
        return std::includes(b.begin(), b.end(), a.begin(), a.end());
    };
    auto hv = r.head.vars();
    if (pos.size() == 1 && neg.empty() && cmp.empty())
        return subset(hv, pos[0]->vars()) ? RuleShape::Projection : RuleShape::None;
    if (pos.size() == 1 && neg.empty() && !cmp.empty()) {
        auto v1 = pos[0]->vars();
        std::set<std::string> cv;
        for (const auto* l : cmp) {
            // Comparisons must genuinely constrain: at least one variable,
            // two distinct sides.
            if (l->lhs == l->rhs) return RuleShape::None;
            if (!l->lhs.is_var() && !l->rhs.is_var()) return RuleShape::None;
            auto v = l->vars();
            cv.insert(v.begin(), v.end());
        }
        return subset(hv, v1) && subset(cv, v1) ? RuleShape::Selection : RuleShape::None;
    }
    if (pos.size() == 2 && neg.empty() && cmp.empty()) {
        auto u = pos[0]->vars();
        auto v2 = pos[1]->vars();
        u.insert(v2.begin(), v2.end());
        return hv == u ? RuleShape::Join : RuleShape::None;
    }
    if (pos.size() == 1 && neg.size() == 1 && cmp.empty()) {
        auto v1 = pos[0]->vars();
        return hv == v1 && subset(neg[0]->vars(), v1) ? RuleShape::Negation
                                                      : RuleShape::None;
    }
    return RuleShape::None;
}

inline std::vector<std::string> check_normalized(const Program& p) {
    std::vector<std::string> out;
    for (size_t i = 0; i < p.rules.size(); ++i)
        if (shape_of(p.rules[i]) == RuleShape::None)
            out.push_back("rule " + std::to_string(i + 1) + " is not in normal form");
    return out;
}

struct FreshPredicates {
    std::set<std::string> used;
    std::string prefix = "q";
    int counter = 0;

    explicit FreshPredicates(std::set<std::string> taken, std::string pre = "q")
        : used(std::move(taken)), prefix(std::move(pre)) {}

    std::string next() {
        while (true) {
            std::string name = prefix + std::to_string(++counter);
            if (used.insert(name).second) return name;
        }
    }
};

struct NormalizeOptions {
    // Test-only fault injection: silently discard inequality atoms.
    bool drop_inequalities = false;
};

namespace norm_detail {

// Equivalence classes induced by the equality atoms of one rule.
struct EqClasses {
    std::map<std::string, std::string> parent;
    std::map<std::string, std::string> constant;  // representative -> value
    bool satisfiable = true;

    std::string find(std::string v) {
        while (true) {
            auto it = parent.find(v);
            if (it == parent.end() || it->second == v) return v;
            v = it->second;
        }
    }
    void add(const DlTerm& a, const DlTerm& b) {
        if (!satisfiable) return;
        if (!a.is_var() && !b.is_var()) {
            if (a.text != b.text) satisfiable = false;
            return;
        }
        if (a.is_var() && b.is_var()) {
            parent.emplace(a.text, a.text);
            parent.emplace(b.text, b.text);
            std::string ra = find(a.text), rb = find(b.text);
            if (ra == rb) return;
            auto ca = constant.find(ra), cb = constant.find(rb);
            if (ca != constant.end() && cb != constant.end() && ca->second != cb->second) {
                satisfiable = false;
                return;
            }
            parent[ra] = rb;
            if (ca != constant.end() && cb == constant.end()) constant[rb] = ca->second;
            return;
        }
        const DlTerm& var = a.is_var() ? a : b;
        const DlTerm& con = a.is_var() ? b : a;
        parent.emplace(var.text, var.text);
        std::string r = find(var.text);
        auto it = constant.find(r);
        if (it != constant.end() && it->second != con.text) {
            satisfiable = false;
            return;
        }
        constant[r] = con.text;
    }
};

inline std::vector<DlTerm> var_terms(const std::set<std::string>& vars) {
    std::vector<DlTerm> out;
    out.reserve(vars.size());
    for (const auto& v : vars) out.push_back(DlTerm::var(v));
    return out;
}

}  // namespace norm_detail

// Rewrites every rule into the normal shapes. Already-shaped rules pass
// through untouched. Rules whose equality atoms are unsatisfiable are
// dropped entirely; variables not covered by a positive literal are
// substituted away using their equality class.
inline Program normalize(const Program& in, const NormalizeOptions& opts = {}) {
    auto unsafe = check_safe(in);
    if (!unsafe.empty()) throw ValidationError("unsafe program: " + unsafe.front());
    if (auto cycle = find_predicate_cycle(in))
        throw ValidationError("recursive program: " + cycle->front());

    Program out;
    out.facts = in.facts;
    FreshPredicates fresh(in.predicates());
    std::optional<std::string> unit_pred;  // 0-ary predicate with a single fact
    auto unit_atom = [&]() {
        if (!unit_pred) {
            unit_pred = fresh.next();
            out.add_fact(GroundFact{*unit_pred, {}}, 1);
        }
        return Atom{*unit_pred, {}};
    };

    // Distinct input rules may normalize to the same final rule; collapsing
    // them would lose derivation paths, so collisions get a fresh
    // pass-through predicate in between.
    auto emit = [&](Rule r) {
        if (std::find(out.rules.begin(), out.rules.end(), r) == out.rules.end()) {
            out.add_rule(std::move(r));
            return;
        }
        Atom mid{fresh.next(), norm_detail::var_terms(r.head.vars())};
        out.add_rule(Rule{mid, std::move(r.body)});
        out.add_rule(Rule{std::move(r.head), {Literal::pos(mid)}});
    };

    for (const Rule& r : in.rules) {
        bool has_neq = std::any_of(r.body.begin(), r.body.end(), [](const Literal& l) {
            return l.kind == Literal::Kind::Neq;
        });
        if (shape_of(r) != RuleShape::None && !(opts.drop_inequalities && has_neq)) {
            emit(r);
            continue;
        }

        std::vector<Atom> pos, neg;
        std::vector<Literal> eqs, neqs;
        for (const auto& l : r.body) {
            switch (l.kind) {
                case Literal::Kind::Pos: pos.push_back(l.atom); break;
                case Literal::Kind::Neg: neg.push_back(l.atom); break;
                case Literal::Kind::Eq: eqs.push_back(l); break;
                case Literal::Kind::Neq:
                    if (!opts.drop_inequalities) neqs.push_back(l);
                    break;
            }
        }

        norm_detail::EqClasses classes;
        for (const auto& l : eqs) classes.add(l.lhs, l.rhs);
        if (!classes.satisfiable) continue;

        std::set<std::string> posvars;
        for (const auto& a : pos) {
            auto v = a.vars();
            posvars.insert(v.begin(), v.end());
        }

        // Substitute away variables no positive literal binds.
        VarMap sigma;
        {
            std::map<std::string, std::set<std::string>> members;
            for (const auto& [v, pr] : classes.parent) members[classes.find(v)].insert(v);
            for (const auto& v : r.vars()) {
                if (posvars.count(v)) continue;
                auto pit = classes.parent.find(v);
                if (pit == classes.parent.end())
                    throw Error("variable " + v + " escaped the safety check");
                std::string rep = classes.find(v);
                auto cit = classes.constant.find(rep);
                if (cit != classes.constant.end()) {
                    sigma[v] = DlTerm::constant(cit->second);
                    continue;
                }
                const DlTerm* target = nullptr;
                for (const auto& m : members[rep])
                    if (posvars.count(m)) {
                        sigma[v] = DlTerm::var(m);
                        target = &sigma[v];
                        break;
                    }
                if (!target) throw Error("variable " + v + " escaped the safety check");
            }
        }

        bool satisfiable = true;
        std::set<Literal> cmps;
        for (const auto& l : eqs) {
            Literal s = substitute(sigma, l);
            if (s.lhs == s.rhs) continue;
            cmps.insert(s);
        }
        for (const auto& l : neqs) {
            Literal s = substitute(sigma, l);
            if (s.lhs == s.rhs) {
                satisfiable = false;
                break;
            }
            if (!s.lhs.is_var() && !s.rhs.is_var()) continue;  // distinct constants
            cmps.insert(s);
        }
        if (!satisfiable) continue;

        Atom head = substitute(sigma, r.head);
        for (auto& a : neg) a = substitute(sigma, a);

        Atom cur;
        if (pos.empty()) {
            cur = unit_atom();
        } else {
            cur = pos[0];
            for (size_t k = 1; k < pos.size(); ++k) {
                auto joined = cur.vars();
                auto extra = pos[k].vars();
                joined.insert(extra.begin(), extra.end());
                Atom next{fresh.next(), norm_detail::var_terms(joined)};
                out.add_rule(Rule{next, {Literal::pos(cur), Literal::pos(pos[k])}});
                cur = next;
            }
        }

        if (!cmps.empty()) {
            Atom next{fresh.next(), norm_detail::var_terms(cur.vars())};
            Rule sel{next, {Literal::pos(cur)}};
            for (const auto& c : cmps) sel.body.push_back(c);
            out.add_rule(std::move(sel));
            cur = next;
        }

        for (const auto& n : neg) {
            Atom next{fresh.next(), norm_detail::var_terms(cur.vars())};
            out.add_rule(Rule{next, {Literal::pos(cur), Literal::neg(n)}});
            cur = next;
        }

        emit(Rule{head, {Literal::pos(cur)}});
    }
    return out;
}

}  // namespace bagsem::datalog

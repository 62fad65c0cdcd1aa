#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "bagsem/common.hpp"

namespace bagsem::datalog {

// Variables and constants share one term type; constants are opaque strings
// compared by equality. By surface convention variables start uppercase.
struct DlTerm {
    enum class Kind { Var, Const };
    Kind kind = Kind::Const;
    std::string text;

    static DlTerm var(std::string name) { return DlTerm{Kind::Var, std::move(name)}; }
    static DlTerm constant(std::string value) {
        return DlTerm{Kind::Const, std::move(value)};
    }
    bool is_var() const { return kind == Kind::Var; }

    auto operator<=>(const DlTerm&) const = default;
};

struct Atom {
    std::string pred;
    std::vector<DlTerm> args;

    Atom() = default;
    Atom(std::string p, std::vector<DlTerm> a) : pred(std::move(p)), args(std::move(a)) {}

    std::set<std::string> vars() const {
        std::set<std::string> out;
        for (const auto& t : args)
            if (t.is_var()) out.insert(t.text);
        return out;
    }
    bool ground() const {
        return std::none_of(args.begin(), args.end(),
                            [](const DlTerm& t) { return t.is_var(); });
    }

    auto operator<=>(const Atom&) const = default;
};

struct Literal {
    enum class Kind { Pos, Neg, Eq, Neq };
    Kind kind = Kind::Pos;
    Atom atom;          // Pos, Neg
    DlTerm lhs, rhs;    // Eq, Neq

    static Literal pos(Atom a) { return Literal{Kind::Pos, std::move(a), {}, {}}; }
    static Literal neg(Atom a) { return Literal{Kind::Neg, std::move(a), {}, {}}; }
    static Literal eq(DlTerm a, DlTerm b) {
        return Literal{Kind::Eq, {}, std::move(a), std::move(b)};
    }
    static Literal neq(DlTerm a, DlTerm b) {
        return Literal{Kind::Neq, {}, std::move(a), std::move(b)};
    }

    bool is_pred() const { return kind == Kind::Pos || kind == Kind::Neg; }

    std::set<std::string> vars() const {
        if (is_pred()) return atom.vars();
        std::set<std::string> out;
        if (lhs.is_var()) out.insert(lhs.text);
        if (rhs.is_var()) out.insert(rhs.text);
        return out;
    }

    auto operator<=>(const Literal&) const = default;
};

struct Rule {
    Atom head;
    std::vector<Literal> body;

    std::set<std::string> vars() const {
        std::set<std::string> out = head.vars();
        for (const auto& l : body) {
            auto v = l.vars();
            out.insert(v.begin(), v.end());
        }
        return out;
    }

    auto operator<=>(const Rule&) const = default;
};

using Tuple = std::vector<std::string>;

struct GroundFact {
    std::string pred;
    Tuple args;
    auto operator<=>(const GroundFact&) const = default;
};

// Rules form a set (duplicates collapse); base facts carry multiplicities.
struct Program {
    std::vector<Rule> rules;
    std::map<GroundFact, Count> facts;

    void add_rule(Rule r) {
        if (std::find(rules.begin(), rules.end(), r) == rules.end())
            rules.push_back(std::move(r));
    }

    void add_fact(GroundFact f, Count n = 1) {
        if (n < 0) throw ValidationError("negative fact multiplicity");
        if (n == 0) return;
        auto [it, inserted] = facts.emplace(std::move(f), 0);
        it->second = checked_add(it->second, n);
    }

    std::set<std::string> predicates() const {
        std::set<std::string> out;
        for (const auto& [f, n] : facts) out.insert(f.pred);
        for (const auto& r : rules) {
            out.insert(r.head.pred);
            for (const auto& l : r.body)
                if (l.is_pred()) out.insert(l.atom.pred);
        }
        return out;
    }

    std::set<std::string> constants() const {
        std::set<std::string> out;
        for (const auto& [f, n] : facts)
            for (const auto& c : f.args) out.insert(c);
        auto take = [&](const DlTerm& t) {
            if (!t.is_var()) out.insert(t.text);
        };
        for (const auto& r : rules) {
            for (const auto& a : r.head.args) take(a);
            for (const auto& l : r.body) {
                if (l.is_pred())
                    for (const auto& a : l.atom.args) take(a);
                else {
                    take(l.lhs);
                    take(l.rhs);
                }
            }
        }
        return out;
    }

    std::vector<const Rule*> rules_for(const std::string& pred) const {
        std::vector<const Rule*> out;
        for (const auto& r : rules)
            if (r.head.pred == pred) out.push_back(&r);
        return out;
    }

    bool has_facts(const std::string& pred) const {
        auto it = facts.lower_bound(GroundFact{pred, {}});
        return it != facts.end() && it->first.pred == pred;
    }

    // predicate name -> arity; throws on inconsistent use
    std::map<std::string, size_t> arities() const {
        std::map<std::string, size_t> out;
        auto note = [&](const std::string& p, size_t n) {
            auto [it, inserted] = out.emplace(p, n);
            if (!inserted && it->second != n)
                throw ValidationError("predicate " + p + " used with arities " +
                                      std::to_string(it->second) + " and " +
                                      std::to_string(n));
        };
        for (const auto& [f, n] : facts) note(f.pred, f.args.size());
        for (const auto& r : rules) {
            note(r.head.pred, r.head.args.size());
            for (const auto& l : r.body)
                if (l.is_pred()) note(l.atom.pred, l.atom.args.size());
        }
        return out;
    }
};

// --- safety ---------------------------------------------------------------
// A variable is safe if it occurs in a positive predicate literal, equals a
// constant, or equals another safe variable (taken to a fixpoint). Every
// variable of the rule must be safe.

inline std::set<std::string> safe_vars(const Rule& r) {
    std::set<std::string> safe;
    for (const auto& l : r.body)
        if (l.kind == Literal::Kind::Pos) {
            auto v = l.atom.vars();
            safe.insert(v.begin(), v.end());
        }
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& l : r.body) {
            if (l.kind != Literal::Kind::Eq) continue;
            auto propagate = [&](const DlTerm& a, const DlTerm& b) {
                if (!a.is_var() || safe.count(a.text)) return;
                if (!b.is_var() || safe.count(b.text)) {
                    safe.insert(a.text);
                    changed = true;
                }
            };
            propagate(l.lhs, l.rhs);
            propagate(l.rhs, l.lhs);
        }
    }
    return safe;
}

inline std::vector<std::string> check_safe(const Program& p) {
    std::vector<std::string> out;
    for (size_t i = 0; i < p.rules.size(); ++i) {
        const Rule& r = p.rules[i];
        auto safe = safe_vars(r);
        for (const auto& v : r.vars())
            if (!safe.count(v))
                out.push_back("rule " + std::to_string(i + 1) + ": unsafe variable " + v);
    }
    for (const auto& [f, n] : p.facts) (void)f;  // facts are ground by type
    return out;
}

// --- recursion check ------------------------------------------------------

// Returns a predicate cycle if one exists, in dependency order.
inline std::optional<std::vector<std::string>> find_predicate_cycle(const Program& p) {
    std::map<std::string, std::set<std::string>> deps;
    for (const auto& r : p.rules)
        for (const auto& l : r.body)
            if (l.is_pred()) deps[r.head.pred].insert(l.atom.pred);
    std::map<std::string, int> state;  // 0 new, 1 active, 2 done
    std::vector<std::string> stack;
    std::optional<std::vector<std::string>> cycle;

    auto dfs = [&](auto&& self, const std::string& pred) -> bool {
        state[pred] = 1;
        stack.push_back(pred);
        for (const auto& dep : deps[pred]) {
            if (state[dep] == 1) {
                auto start = std::find(stack.begin(), stack.end(), dep);
                cycle = std::vector<std::string>(start, stack.end());
                return true;
            }
            if (state[dep] == 0 && self(self, dep)) return true;
        }
        stack.pop_back();
        state[pred] = 2;
        return false;
    };
    for (const auto& pred : p.predicates())
        if (state[pred] == 0 && dfs(dfs, pred)) return cycle;
    return std::nullopt;
}

inline bool check_nonrecursive(const Program& p) { return !find_predicate_cycle(p); }

// --- substitution helpers ---------------------------------------------------

using VarMap = std::map<std::string, DlTerm>;

inline DlTerm substitute(const VarMap& s, const DlTerm& t) {
    if (!t.is_var()) return t;
    auto it = s.find(t.text);
    return it == s.end() ? t : it->second;
}

inline Atom substitute(const VarMap& s, const Atom& a) {
    Atom out = a;
    for (auto& t : out.args) t = substitute(s, t);
    return out;
}

inline Literal substitute(const VarMap& s, const Literal& l) {
    Literal out = l;
    if (l.is_pred())
        out.atom = substitute(s, l.atom);
    else {
        out.lhs = substitute(s, l.lhs);
        out.rhs = substitute(s, l.rhs);
    }
    return out;
}

// Solves a conjunction of equality atoms into a substitution mapping each
// involved variable to a constant or to its class representative. Returns
// false if two distinct constants are forced equal.
inline bool solve_equalities(const std::vector<Literal>& eqs, VarMap& out) {
    std::map<std::string, std::string> parent;
    std::map<std::string, std::string> constant;  // representative -> value
    auto find = [&](std::string v) {
        while (true) {
            auto it = parent.find(v);
            if (it == parent.end() || it->second == v) return v;
            v = it->second;
        }
    };
    auto ensure = [&](const std::string& v) {
        parent.emplace(v, v);
    };
    for (const auto& l : eqs) {
        if (l.kind != Literal::Kind::Eq) continue;
        const DlTerm& a = l.lhs;
        const DlTerm& b = l.rhs;
        if (!a.is_var() && !b.is_var()) {
            if (a.text != b.text) return false;
            continue;
        }
        if (a.is_var() && b.is_var()) {
            ensure(a.text);
            ensure(b.text);
            std::string ra = find(a.text), rb = find(b.text);
            if (ra == rb) continue;
            auto ca = constant.find(ra), cb = constant.find(rb);
            if (ca != constant.end() && cb != constant.end() && ca->second != cb->second)
                return false;
            parent[ra] = rb;
            if (ca != constant.end() && cb == constant.end())
                constant[rb] = ca->second;
            continue;
        }
        const DlTerm& var = a.is_var() ? a : b;
        const DlTerm& con = a.is_var() ? b : a;
        ensure(var.text);
        std::string r = find(var.text);
        auto it = constant.find(r);
        if (it != constant.end() && it->second != con.text) return false;
        constant[r] = con.text;
    }
    for (const auto& [v, pr] : parent) {
        std::string r = find(v);
        auto it = constant.find(r);
        if (it != constant.end())
            out[v] = DlTerm::constant(it->second);
        else if (r != v)
            out[v] = DlTerm::var(r);
    }
    return true;
}

// --- bottom-up evaluation ---------------------------------------------------

using Substitution = std::map<std::string, std::string>;

struct AnswerMultiset {
    std::map<Substitution, Count> entries;

    void add(const Substitution& s, Count c) {
        if (c == 0) return;
        auto [it, inserted] = entries.emplace(s, 0);
        it->second = checked_add(it->second, c);
    }
    Count count(const Substitution& s) const {
        auto it = entries.find(s);
        return it == entries.end() ? 0 : it->second;
    }
    bool operator==(const AnswerMultiset&) const = default;
};

using Relation = std::map<Tuple, Count>;

struct EvalOptions {
    // Test-only fault injection for the differential harness.
    enum class Fault { None, AddJoinCounts };
    Fault fault = Fault::None;
};

namespace eval_detail {

inline bool match_atom(const Atom& a, const Tuple& t, Substitution& s) {
    for (size_t i = 0; i < a.args.size(); ++i) {
        const DlTerm& arg = a.args[i];
        if (!arg.is_var()) {
            if (arg.text != t[i]) return false;
            continue;
        }
        auto it = s.find(arg.text);
        if (it != s.end()) {
            if (it->second != t[i]) return false;
        } else {
            s.emplace(arg.text, t[i]);
        }
    }
    return true;
}

inline std::string value_of(const DlTerm& t, const Substitution& s) {
    if (!t.is_var()) return t.text;
    auto it = s.find(t.text);
    if (it == s.end()) throw Error("unbound variable " + t.text + " in evaluation");
    return it->second;
}

}  // namespace eval_detail

// Evaluates one rule against fixed relations, adding derivations to `out`.
// Equalities are eliminated by substitution up front; the positive literals
// are then joined left to right, inequalities filter, and negative literals
// require an empty supporting relation.
inline void eval_rule_into(const Rule& rule,
                           const std::map<std::string, Relation>& rels, Relation& out,
                           const EvalOptions& opts = {}) {
    std::vector<Literal> eqs;
    for (const auto& l : rule.body)
        if (l.kind == Literal::Kind::Eq) eqs.push_back(l);
    VarMap sigma;
    if (!solve_equalities(eqs, sigma)) return;

    Atom head = substitute(sigma, rule.head);
    std::vector<Atom> positives;
    std::vector<Atom> negatives;
    std::vector<Literal> neqs;
    for (const auto& l : rule.body) {
        switch (l.kind) {
            case Literal::Kind::Pos: positives.push_back(substitute(sigma, l.atom)); break;
            case Literal::Kind::Neg: negatives.push_back(substitute(sigma, l.atom)); break;
            case Literal::Kind::Neq: neqs.push_back(substitute(sigma, l)); break;
            case Literal::Kind::Eq: break;
        }
    }

    static const Relation empty_rel;
    auto rel_of = [&](const std::string& pred) -> const Relation& {
        auto it = rels.find(pred);
        return it == rels.end() ? empty_rel : it->second;
    };

    std::map<Substitution, Count> partial;
    partial.emplace(Substitution{}, 1);
    for (const Atom& a : positives) {
        std::map<Substitution, Count> next;
        const Relation& rel = rel_of(a.pred);
        for (const auto& [s, c] : partial) {
            for (const auto& [tuple, n] : rel) {
                Substitution ext = s;
                if (!eval_detail::match_atom(a, tuple, ext)) continue;
                Count combined = opts.fault == EvalOptions::Fault::AddJoinCounts
                                     ? checked_add(c, n)
                                     : checked_mul(c, n);
                auto [it, inserted] = next.emplace(std::move(ext), 0);
                it->second = checked_add(it->second, combined);
            }
        }
        partial = std::move(next);
        if (partial.empty()) return;
    }

    for (const auto& [s, c] : partial) {
        bool ok = true;
        for (const auto& l : neqs) {
            if (eval_detail::value_of(l.lhs, s) == eval_detail::value_of(l.rhs, s)) {
                ok = false;
                break;
            }
        }
        if (!ok) continue;
        for (const Atom& a : negatives) {
            Tuple t;
            t.reserve(a.args.size());
            for (const auto& arg : a.args) t.push_back(eval_detail::value_of(arg, s));
            auto it = rel_of(a.pred).find(t);
            if (it != rel_of(a.pred).end() && it->second > 0) {
                ok = false;
                break;
            }
        }
        if (!ok) continue;
        Tuple t;
        t.reserve(head.args.size());
        for (const auto& arg : head.args) t.push_back(eval_detail::value_of(arg, s));
        auto [it, inserted] = out.emplace(std::move(t), 0);
        it->second = checked_add(it->second, c);
    }
}

// Computes the relation of every predicate bottom-up in dependency order.
inline std::map<std::string, Relation> eval_all(const Program& p,
                                                const EvalOptions& opts = {}) {
    auto unsafe = check_safe(p);
    if (!unsafe.empty()) throw ValidationError("unsafe program: " + unsafe.front());
    if (auto cycle = find_predicate_cycle(p)) {
        std::string msg = "recursive program:";
        for (const auto& pred : *cycle) msg += " " + pred;
        throw ValidationError(msg);
    }
    p.arities();

    std::map<std::string, Relation> rels;
    for (const auto& [f, n] : p.facts) {
        auto [it, inserted] = rels[f.pred].emplace(f.args, 0);
        it->second = checked_add(it->second, n);
    }

    // dependency-first order over head predicates
    std::map<std::string, std::set<std::string>> deps;
    for (const auto& r : p.rules)
        for (const auto& l : r.body)
            if (l.is_pred()) deps[r.head.pred].insert(l.atom.pred);
    std::set<std::string> done;
    std::vector<std::string> order;
    auto visit = [&](auto&& self, const std::string& pred) -> void {
        if (done.count(pred)) return;
        done.insert(pred);
        for (const auto& d : deps[pred]) self(self, d);
        order.push_back(pred);
    };
    for (const auto& r : p.rules) visit(visit, r.head.pred);

    for (const auto& pred : order) {
        Relation derived;
        for (const Rule* r : p.rules_for(pred)) eval_rule_into(*r, rels, derived, opts);
        Relation& target = rels[pred];
        for (const auto& [t, c] : derived) {
            auto [it, inserted] = target.emplace(t, 0);
            it->second = checked_add(it->second, c);
        }
    }
    return rels;
}

inline AnswerMultiset match_goal(const Relation& rel, const Atom& goal) {
    AnswerMultiset out;
    for (const auto& [tuple, c] : rel) {
        Substitution s;
        if (eval_detail::match_atom(goal, tuple, s)) out.add(s, c);
    }
    return out;
}

inline AnswerMultiset eval_program(const Program& p, const Atom& goal,
                                   const EvalOptions& opts = {}) {
    auto rels = eval_all(p, opts);
    auto it = rels.find(goal.pred);
    if (it == rels.end()) return {};
    return match_goal(it->second, goal);
}

// --- derivation tree enumeration -------------------------------------------
// Counts derivation trees per ground goal instance by explicit top-down
// enumeration over the active domain. Deliberately naive: this is the
// reference the bottom-up engine is tested against.

struct TreeBudget {
    long long steps = 1'000'000;
    void spend() {
        if (--steps < 0) throw BudgetError("derivation tree budget exceeded");
    }
};

namespace tree_detail {

struct Enumerator {
    const Program& prog;
    std::vector<std::string> domain;
    std::map<GroundFact, Count> memo;
    TreeBudget budget;

    Count count_trees(const GroundFact& g) {
        budget.spend();
        auto it = memo.find(g);
        if (it != memo.end()) return it->second;
        Count total = 0;
        auto fit = prog.facts.find(g);
        if (fit != prog.facts.end()) total = fit->second;
        for (const Rule* r : prog.rules_for(g.pred)) {
            Substitution bound;
            Atom head = r->head;
            if (!eval_detail::match_atom(head, g.args, bound)) continue;
            std::vector<std::string> free;
            for (const auto& v : r->vars())
                if (!bound.count(v)) free.push_back(v);
            total = checked_add(total, sum_assignments(*r, bound, free, 0));
        }
        memo[g] = total;
        return total;
    }

    Count sum_assignments(const Rule& r, Substitution& s,
                          const std::vector<std::string>& free, size_t idx) {
        budget.spend();
        if (idx < free.size()) {
            Count total = 0;
            for (const auto& c : domain) {
                s[free[idx]] = c;
                total = checked_add(total, sum_assignments(r, s, free, idx + 1));
            }
            s.erase(free[idx]);
            return total;
        }
        Count product = 1;
        for (const auto& l : r.body) {
            switch (l.kind) {
                case Literal::Kind::Eq:
                    if (eval_detail::value_of(l.lhs, s) != eval_detail::value_of(l.rhs, s))
                        return 0;
                    break;
                case Literal::Kind::Neq:
                    if (eval_detail::value_of(l.lhs, s) == eval_detail::value_of(l.rhs, s))
                        return 0;
                    break;
                case Literal::Kind::Neg: {
                    GroundFact gf{l.atom.pred, {}};
                    for (const auto& a : l.atom.args)
                        gf.args.push_back(eval_detail::value_of(a, s));
                    if (count_trees(gf) != 0) return 0;
                    break;
                }
                case Literal::Kind::Pos:
                    break;
            }
        }
        for (const auto& l : r.body) {
            if (l.kind != Literal::Kind::Pos) continue;
            GroundFact gf{l.atom.pred, {}};
            for (const auto& a : l.atom.args)
                gf.args.push_back(eval_detail::value_of(a, s));
            product = checked_mul(product, count_trees(gf));
            if (product == 0) return 0;
        }
        return product;
    }
};

}  // namespace tree_detail

inline AnswerMultiset enumerate_derivation_trees(const Program& p, const Atom& goal,
                                                 long long budget_steps = 1'000'000) {
    auto unsafe = check_safe(p);
    if (!unsafe.empty()) throw ValidationError("unsafe program: " + unsafe.front());
    if (find_predicate_cycle(p)) throw ValidationError("recursive program");

    tree_detail::Enumerator e{p, {}, {}, TreeBudget{budget_steps}};
    auto consts = p.constants();
    e.domain.assign(consts.begin(), consts.end());

    AnswerMultiset out;
    auto gv = goal.vars();
    std::vector<std::string> goal_vars(gv.begin(), gv.end());
    Substitution s;
    auto assign = [&](auto&& self, size_t idx) -> void {
        if (idx < goal_vars.size()) {
            for (const auto& c : e.domain) {
                s[goal_vars[idx]] = c;
                self(self, idx + 1);
            }
            s.erase(goal_vars[idx]);
            return;
        }
        GroundFact gf{goal.pred, {}};
        for (const auto& a : goal.args)
            gf.args.push_back(eval_detail::value_of(a, s));
        Count c = e.count_trees(gf);
        if (c > 0) out.add(s, c);
    };
    assign(assign, 0);
    return out;
}

}  // namespace bagsem::datalog

#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "bagsem/common.hpp"

namespace bagsem::mra {

using Tuple = std::vector<std::string>;

// Attribute lists are ordered and duplicate-free; names start uppercase so
// they can double as variable names on the Datalog side.
using Schema = std::vector<std::string>;

inline void validate_schema(const Schema& s) {
    std::set<std::string> seen;
    for (const auto& a : s) {
        if (a.empty() || !std::isupper(static_cast<unsigned char>(a[0])))
            throw ValidationError("attribute names must start uppercase: '" + a + "'");
        if (!seen.insert(a).second)
            throw ValidationError("duplicate attribute " + a);
    }
}

inline bool same_attribute_set(const Schema& a, const Schema& b) {
    return std::set<std::string>(a.begin(), a.end()) ==
           std::set<std::string>(b.begin(), b.end());
}

struct MultisetRelation {
    Schema schema;
    std::map<Tuple, Count> rows;

    MultisetRelation() = default;
    explicit MultisetRelation(Schema s) : schema(std::move(s)) { validate_schema(schema); }

    void add_row(Tuple t, Count n = 1) {
        if (t.size() != schema.size())
            throw ValidationError("row arity " + std::to_string(t.size()) +
                                  " does not match schema arity " +
                                  std::to_string(schema.size()));
        if (n < 0) throw ValidationError("negative row count");
        if (n == 0) return;
        auto [it, inserted] = rows.emplace(std::move(t), 0);
        it->second = checked_add(it->second, n);
    }

    Count count(const Tuple& t) const {
        auto it = rows.find(t);
        return it == rows.end() ? 0 : it->second;
    }

    Count total() const {
        Count n = 0;
        for (const auto& [t, c] : rows) n = checked_add(n, c);
        return n;
    }

    bool operator==(const MultisetRelation&) const = default;
};

using Database = std::map<std::string, MultisetRelation>;

// Reorders columns into `target` (a permutation of the schema).
inline MultisetRelation reorder(const MultisetRelation& rel, const Schema& target) {
    if (!same_attribute_set(rel.schema, target))
        throw ValidationError("cannot reorder: schemas differ as sets");
    if (rel.schema == target) return rel;
    std::vector<size_t> pick;
    pick.reserve(target.size());
    for (const auto& a : target)
        pick.push_back(static_cast<size_t>(
            std::find(rel.schema.begin(), rel.schema.end(), a) - rel.schema.begin()));
    MultisetRelation out(target);
    for (const auto& [t, c] : rel.rows) {
        Tuple nt;
        nt.reserve(pick.size());
        for (size_t i : pick) nt.push_back(t[i]);
        out.add_row(std::move(nt), c);
    }
    return out;
}

// Equal content up to column order.
inline bool same_content(const MultisetRelation& a, const MultisetRelation& b) {
    if (!same_attribute_set(a.schema, b.schema)) return false;
    return reorder(b, a.schema).rows == a.rows;
}

// --- selection conditions (two-valued) --------------------------------------

struct Condition;
using ConditionPtr = std::shared_ptr<const Condition>;

struct Condition {
    enum class Kind { True, EqAttr, EqConst, Not, And, Or };
    Kind kind = Kind::True;
    std::string lhs;        // EqAttr, EqConst
    std::string rhs_attr;   // EqAttr
    std::string rhs_value;  // EqConst
    ConditionPtr a, b;

    static ConditionPtr truth() {
        return std::make_shared<Condition>(Condition{Kind::True, {}, {}, {}, {}, {}});
    }
    static ConditionPtr eq_attr(std::string l, std::string r) {
        return std::make_shared<Condition>(
            Condition{Kind::EqAttr, std::move(l), std::move(r), {}, {}, {}});
    }
    static ConditionPtr eq_const(std::string l, std::string v) {
        return std::make_shared<Condition>(
            Condition{Kind::EqConst, std::move(l), {}, std::move(v), {}, {}});
    }
    static ConditionPtr negate(ConditionPtr c) {
        return std::make_shared<Condition>(
            Condition{Kind::Not, {}, {}, {}, std::move(c), {}});
    }
    static ConditionPtr conj(ConditionPtr x, ConditionPtr y) {
        return std::make_shared<Condition>(
            Condition{Kind::And, {}, {}, {}, std::move(x), std::move(y)});
    }
    static ConditionPtr disj(ConditionPtr x, ConditionPtr y) {
        return std::make_shared<Condition>(
            Condition{Kind::Or, {}, {}, {}, std::move(x), std::move(y)});
    }
};

inline void condition_attrs(const ConditionPtr& c, std::set<std::string>& out) {
    if (!c) return;
    switch (c->kind) {
        case Condition::Kind::True: return;
        case Condition::Kind::EqAttr:
            out.insert(c->lhs);
            out.insert(c->rhs_attr);
            return;
        case Condition::Kind::EqConst: out.insert(c->lhs); return;
        case Condition::Kind::Not: condition_attrs(c->a, out); return;
        case Condition::Kind::And:
        case Condition::Kind::Or:
            condition_attrs(c->a, out);
            condition_attrs(c->b, out);
            return;
    }
}

inline bool eval_condition(const ConditionPtr& c,
                           const std::map<std::string, size_t>& index, const Tuple& t) {
    switch (c->kind) {
        case Condition::Kind::True: return true;
        case Condition::Kind::EqAttr:
            return t[index.at(c->lhs)] == t[index.at(c->rhs_attr)];
        case Condition::Kind::EqConst: return t[index.at(c->lhs)] == c->rhs_value;
        case Condition::Kind::Not: return !eval_condition(c->a, index, t);
        case Condition::Kind::And:
            return eval_condition(c->a, index, t) && eval_condition(c->b, index, t);
        case Condition::Kind::Or:
            return eval_condition(c->a, index, t) || eval_condition(c->b, index, t);
    }
    throw Error("unreachable");
}

// --- expressions -------------------------------------------------------------

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
    enum class Kind { Base, Select, Project, Join, Union, Except };
    Kind kind = Kind::Base;
    std::string base;    // Base
    ConditionPtr cond;   // Select
    Schema attrs;        // Project
    ExprPtr left, right;

    static ExprPtr base_rel(std::string name) {
        Expr e;
        e.kind = Kind::Base;
        e.base = std::move(name);
        return std::make_shared<Expr>(std::move(e));
    }
    static ExprPtr select(ConditionPtr c, ExprPtr in) {
        Expr e;
        e.kind = Kind::Select;
        e.cond = std::move(c);
        e.left = std::move(in);
        return std::make_shared<Expr>(std::move(e));
    }
    static ExprPtr project(Schema attrs, ExprPtr in) {
        Expr e;
        e.kind = Kind::Project;
        e.attrs = std::move(attrs);
        e.left = std::move(in);
        return std::make_shared<Expr>(std::move(e));
    }
    static ExprPtr make(Kind k, ExprPtr l, ExprPtr r) {
        Expr e;
        e.kind = k;
        e.left = std::move(l);
        e.right = std::move(r);
        return std::make_shared<Expr>(std::move(e));
    }
    static ExprPtr join(ExprPtr l, ExprPtr r) { return make(Kind::Join, std::move(l), std::move(r)); }
    static ExprPtr set_union(ExprPtr l, ExprPtr r) { return make(Kind::Union, std::move(l), std::move(r)); }
    static ExprPtr except(ExprPtr l, ExprPtr r) { return make(Kind::Except, std::move(l), std::move(r)); }
};

inline std::string schema_text(const Schema& s) {
    std::string out = "[";
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) out += ", ";
        out += s[i];
    }
    return out + "]";
}

// Static schema of an expression given base relation schemas.
inline Schema infer_schema(const std::map<std::string, Schema>& bases, const ExprPtr& e) {
    switch (e->kind) {
        case Expr::Kind::Base: {
            auto it = bases.find(e->base);
            if (it == bases.end()) throw ValidationError("unknown relation " + e->base);
            return it->second;
        }
        case Expr::Kind::Select: {
            Schema s = infer_schema(bases, e->left);
            std::set<std::string> used;
            condition_attrs(e->cond, used);
            for (const auto& a : used)
                if (std::find(s.begin(), s.end(), a) == s.end())
                    throw ValidationError("condition attribute " + a +
                                          " is not in schema " + schema_text(s));
            return s;
        }
        case Expr::Kind::Project: {
            Schema s = infer_schema(bases, e->left);
            validate_schema(e->attrs);
            for (const auto& a : e->attrs)
                if (std::find(s.begin(), s.end(), a) == s.end())
                    throw ValidationError("projected attribute " + a +
                                          " is not in schema " + schema_text(s));
            return e->attrs;
        }
        case Expr::Kind::Join: {
            Schema l = infer_schema(bases, e->left);
            Schema r = infer_schema(bases, e->right);
            Schema out = l;
            for (const auto& a : r)
                if (std::find(l.begin(), l.end(), a) == l.end()) out.push_back(a);
            return out;
        }
        case Expr::Kind::Union:
        case Expr::Kind::Except: {
            Schema l = infer_schema(bases, e->left);
            Schema r = infer_schema(bases, e->right);
            if (!same_attribute_set(l, r))
                throw ValidationError(
                    std::string(e->kind == Expr::Kind::Union ? "union" : "except") +
                    " needs equal attribute sets, got " + schema_text(l) + " and " +
                    schema_text(r));
            return l;
        }
    }
    throw Error("unreachable");
}

struct EvalOptions {
    // Test-only fault injection: every union result row gains one extra copy.
    bool union_plus_one = false;
};

inline MultisetRelation eval_expr(const Database& db, const ExprPtr& e,
                                  const EvalOptions& opts = {}) {
    switch (e->kind) {
        case Expr::Kind::Base: {
            auto it = db.find(e->base);
            if (it == db.end()) throw ValidationError("unknown relation " + e->base);
            return it->second;
        }
        case Expr::Kind::Select: {
            MultisetRelation in = eval_expr(db, e->left, opts);
            std::map<std::string, size_t> index;
            for (size_t i = 0; i < in.schema.size(); ++i) index[in.schema[i]] = i;
            std::set<std::string> used;
            condition_attrs(e->cond, used);
            for (const auto& a : used)
                if (!index.count(a))
                    throw ValidationError("condition attribute " + a +
                                          " is not in schema " + schema_text(in.schema));
            MultisetRelation out(in.schema);
            for (const auto& [t, c] : in.rows)
                if (eval_condition(e->cond, index, t)) out.add_row(t, c);
            return out;
        }
        case Expr::Kind::Project: {
            MultisetRelation in = eval_expr(db, e->left, opts);
            validate_schema(e->attrs);
            std::vector<size_t> pick;
            for (const auto& a : e->attrs) {
                auto pos = std::find(in.schema.begin(), in.schema.end(), a);
                if (pos == in.schema.end())
                    throw ValidationError("projected attribute " + a +
                                          " is not in schema " + schema_text(in.schema));
                pick.push_back(static_cast<size_t>(pos - in.schema.begin()));
            }
            MultisetRelation out(e->attrs);
            for (const auto& [t, c] : in.rows) {
                Tuple nt;
                nt.reserve(pick.size());
                for (size_t i : pick) nt.push_back(t[i]);
                out.add_row(std::move(nt), c);
            }
            return out;
        }
        case Expr::Kind::Join: {
            MultisetRelation l = eval_expr(db, e->left, opts);
            MultisetRelation r = eval_expr(db, e->right, opts);
            Schema out_schema = l.schema;
            std::vector<size_t> extra;          // right columns not shared
            std::vector<std::pair<size_t, size_t>> shared;  // (left idx, right idx)
            for (size_t j = 0; j < r.schema.size(); ++j) {
                auto pos = std::find(l.schema.begin(), l.schema.end(), r.schema[j]);
                if (pos == l.schema.end()) {
                    out_schema.push_back(r.schema[j]);
                    extra.push_back(j);
                } else {
                    shared.emplace_back(static_cast<size_t>(pos - l.schema.begin()), j);
                }
            }
            MultisetRelation out(out_schema);
            for (const auto& [lt, lc] : l.rows) {
                for (const auto& [rt, rc] : r.rows) {
                    bool match = true;
                    for (const auto& [li, ri] : shared)
                        if (lt[li] != rt[ri]) {
                            match = false;
                            break;
                        }
                    if (!match) continue;
                    Tuple nt = lt;
                    for (size_t j : extra) nt.push_back(rt[j]);
                    out.add_row(std::move(nt), checked_mul(lc, rc));
                }
            }
            return out;
        }
        case Expr::Kind::Union: {
            MultisetRelation l = eval_expr(db, e->left, opts);
            MultisetRelation r = eval_expr(db, e->right, opts);
            if (!same_attribute_set(l.schema, r.schema))
                throw ValidationError("union needs equal attribute sets, got " +
                                      schema_text(l.schema) + " and " +
                                      schema_text(r.schema));
            MultisetRelation rr = reorder(r, l.schema);
            MultisetRelation out = l;
            for (const auto& [t, c] : rr.rows) out.add_row(t, c);
            if (opts.union_plus_one)
                for (auto& [t, c] : out.rows) c = checked_add(c, 1);
            return out;
        }
        case Expr::Kind::Except: {
            MultisetRelation l = eval_expr(db, e->left, opts);
            MultisetRelation r = eval_expr(db, e->right, opts);
            if (!same_attribute_set(l.schema, r.schema))
                throw ValidationError("except needs equal attribute sets, got " +
                                      schema_text(l.schema) + " and " +
                                      schema_text(r.schema));
            MultisetRelation rr = reorder(r, l.schema);
            // Presence semantics: a tuple occurring on the right at all removes
            // every copy on the left. This is the difference notion the
            // Datalog negation rules and the pattern EXCEPT operator use.
            MultisetRelation out(l.schema);
            for (const auto& [t, c] : l.rows)
                if (rr.count(t) == 0) out.add_row(t, c);
            return out;
        }
    }
    throw Error("unreachable");
}

}  // namespace bagsem::mra

#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "bagsem/rdf.hpp"

namespace bagsem::sparql {

using rdf::Term;
using rdf::Variable;

// A partial function from variables to terms. Ordering compares the sorted
// domain first and the bound terms second, which gives the canonical order
// used for multiset storage and JSON output.
struct Mapping {
    std::map<Variable, Term> bindings;

    Mapping() = default;
    explicit Mapping(std::map<Variable, Term> b) : bindings(std::move(b)) {}

    bool empty() const { return bindings.empty(); }
    size_t size() const { return bindings.size(); }

    bool bound(const Variable& v) const { return bindings.count(v) > 0; }

    std::optional<Term> get(const Variable& v) const {
        auto it = bindings.find(v);
        if (it == bindings.end()) return std::nullopt;
        return it->second;
    }

    void bind(const Variable& v, Term t) { bindings.insert_or_assign(v, std::move(t)); }

    std::set<Variable> domain() const {
        std::set<Variable> d;
        for (const auto& [v, t] : bindings) d.insert(v);
        return d;
    }

    bool operator==(const Mapping& o) const { return bindings == o.bindings; }

    bool operator<(const Mapping& o) const {
        auto a = bindings.begin(), b = o.bindings.begin();
        for (; a != bindings.end() && b != o.bindings.end(); ++a, ++b) {
            if (a->first != b->first) return a->first < b->first;
        }
        if (a != bindings.end()) return false;
        if (b != o.bindings.end()) return true;
        // same domain: compare bound terms in domain order
        a = bindings.begin();
        b = o.bindings.begin();
        for (; a != bindings.end(); ++a, ++b) {
            if (a->second != b->second) return a->second < b->second;
        }
        return false;
    }
};

inline bool compatible(const Mapping& a, const Mapping& b) {
    // iterate over the smaller one
    const Mapping& small = a.size() <= b.size() ? a : b;
    const Mapping& big = a.size() <= b.size() ? b : a;
    for (const auto& [v, t] : small.bindings) {
        auto it = big.bindings.find(v);
        if (it != big.bindings.end() && it->second != t) return false;
    }
    return true;
}

inline Mapping merge(const Mapping& a, const Mapping& b) {
    if (!compatible(a, b))
        throw ValidationError("merge of incompatible mappings");
    Mapping out = a;
    out.bindings.insert(b.bindings.begin(), b.bindings.end());
    return out;
}

inline Mapping restrict_to(const Mapping& m, const std::set<Variable>& vars) {
    Mapping out;
    for (const auto& [v, t] : m.bindings)
        if (vars.count(v)) out.bindings.emplace(v, t);
    return out;
}

// Multiset of mappings with explicit multiplicities. Entries are kept
// consolidated: no zero or negative counts, one entry per distinct mapping.
struct MappingMultiset {
    std::map<Mapping, Count> entries;

    MappingMultiset() = default;
    MappingMultiset(std::initializer_list<std::pair<Mapping, Count>> init) {
        for (const auto& [m, c] : init) add(m, c);
    }

    void add(const Mapping& m, Count c) {
        if (c < 0) throw ValidationError("negative multiplicity");
        if (c == 0) return;
        auto [it, inserted] = entries.emplace(m, 0);
        it->second = checked_add(it->second, c);
    }

    Count count(const Mapping& m) const {
        auto it = entries.find(m);
        return it == entries.end() ? 0 : it->second;
    }

    bool contains(const Mapping& m) const { return count(m) > 0; }
    bool empty() const { return entries.empty(); }
    size_t distinct() const { return entries.size(); }

    Count total() const {
        Count t = 0;
        for (const auto& [m, c] : entries) t = checked_add(t, c);
        return t;
    }

    std::set<Variable> domain() const {
        std::set<Variable> d;
        for (const auto& [m, c] : entries)
            for (const auto& [v, t] : m.bindings) d.insert(v);
        return d;
    }

    bool operator==(const MappingMultiset& o) const { return entries == o.entries; }
};

inline bool multiset_equal(const MappingMultiset& a, const MappingMultiset& b) {
    return a.entries == b.entries;
}

inline nlohmann::json term_to_json(const Term& t) {
    if (t.is_iri()) return nlohmann::json{{"iri", t.value}};
    return nlohmann::json{{"literal", t.value}};
}

inline nlohmann::json to_json(const MappingMultiset& ms) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& [m, c] : ms.entries) {
        nlohmann::json bindings = nlohmann::json::object();
        for (const auto& [v, t] : m.bindings)
            bindings[to_string(v)] = term_to_json(t);
        arr.push_back({{"bindings", bindings}, {"count", c}});
    }
    return arr;
}

// Plain-text table: one column per variable plus a trailing count column;
// unbound cells render as '-'.
inline std::string render_table(const MappingMultiset& ms,
                                const std::set<Variable>& columns) {
    std::vector<Variable> cols(columns.begin(), columns.end());
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> header;
    for (const auto& v : cols) header.push_back(to_string(v));
    header.push_back("count");
    rows.push_back(header);
    for (const auto& [m, c] : ms.entries) {
        std::vector<std::string> row;
        for (const auto& v : cols) {
            auto t = m.get(v);
            row.push_back(t ? rdf::to_string(*t) : "-");
        }
        row.push_back(std::to_string(c));
        rows.push_back(row);
    }
    std::vector<size_t> width(header.size(), 0);
    for (const auto& row : rows)
        for (size_t i = 0; i < row.size(); ++i)
            width[i] = std::max(width[i], row[i].size());
    std::string out;
    for (const auto& row : rows) {
        for (size_t i = 0; i < row.size(); ++i) {
            if (i) out += "  ";
            out += row[i];
            out.append(width[i] - row[i].size(), ' ');
        }
        while (!out.empty() && out.back() == ' ') out.pop_back();
        out += '\n';
    }
    return out;
}

}  // namespace bagsem::sparql

#pragma once

#include <compare>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "bagsem/common.hpp"

namespace bagsem::rdf {

// A term is either an IRI or a plain string literal. IRI names are kept
// bare (no angle brackets); they may not contain whitespace, quotes or
// angle brackets so that serialization round-trips without escaping.
// The token "null" is reserved for the unbound marker used by the Datalog
// encoding and is not a legal IRI name or literal value.
struct Term {
    enum class Kind { Iri, Literal };

    Kind kind = Kind::Iri;
    std::string value;

    static Term iri(std::string name) {
        if (name.empty())
            throw ValidationError("empty IRI name");
        if (name == "null")
            throw ValidationError("'null' is reserved and not a legal IRI name");
        for (char c : name) {
            if (c == '<' || c == '>' || c == '"' || c == '\\' ||
                static_cast<unsigned char>(c) <= ' ')
                throw ValidationError("illegal character in IRI name: " + name);
        }
        return Term{Kind::Iri, std::move(name)};
    }

    static Term literal(std::string value) {
        if (value == "null")
            throw ValidationError("'null' is reserved and not a legal literal value");
        return Term{Kind::Literal, std::move(value)};
    }

    bool is_iri() const { return kind == Kind::Iri; }
    bool is_literal() const { return kind == Kind::Literal; }

    auto operator<=>(const Term&) const = default;
};

struct Variable {
    std::string name;  // without the leading '?'

    Variable() = default;
    explicit Variable(std::string n) : name(std::move(n)) {}

    auto operator<=>(const Variable&) const = default;
};

inline std::string to_string(const Variable& v) { return "?" + v.name; }

namespace detail {

inline std::string escape_literal(const std::string& s) {
    std::string out;
    out.reserve(s.size() + 2);
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace detail

inline std::string to_string(const Term& t) {
    if (t.is_iri()) return "<" + t.value + ">";
    return "\"" + detail::escape_literal(t.value) + "\"";
}

struct Triple {
    Term subject;
    Term predicate;
    Term object;

    Triple() = default;
    Triple(Term s, Term p, Term o)
        : subject(std::move(s)), predicate(std::move(p)), object(std::move(o)) {
        if (!subject.is_iri())
            throw ValidationError("triple subject must be an IRI");
        if (!predicate.is_iri())
            throw ValidationError("triple predicate must be an IRI");
    }

    auto operator<=>(const Triple&) const = default;
};

// Graphs are sets of triples; std::set keeps them canonically ordered by
// (subject, predicate, object), which serialization relies on.
using Graph = std::set<Triple>;

inline Graph graph_union(const Graph& a, const Graph& b) {
    Graph out = a;
    out.insert(b.begin(), b.end());
    return out;
}

inline std::string serialize_graph(const Graph& g) {
    std::string out;
    for (const Triple& t : g) {
        out += to_string(t.subject);
        out += ' ';
        out += to_string(t.predicate);
        out += ' ';
        out += to_string(t.object);
        out += " .\n";
    }
    return out;
}

namespace detail {

struct LineLexer {
    const std::string& text;
    size_t pos = 0;
    int line;

    LineLexer(const std::string& t, int line) : text(t), line(line) {}

    void skip_ws() {
        while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
    }

    bool at_end() {
        skip_ws();
        return pos >= text.size();
    }

    [[noreturn]] void fail(const std::string& msg) { throw ParseError(msg, line); }

    // Reads one term token: <iri>, "literal", or rejects anything else.
    Term term(bool literal_ok) {
        skip_ws();
        if (pos >= text.size()) fail("unexpected end of triple");
        char c = text[pos];
        if (c == '_' && pos + 1 < text.size() && text[pos + 1] == ':')
            fail("blank nodes are not supported");
        if (c == '<') {
            size_t close = text.find('>', pos + 1);
            if (close == std::string::npos) fail("unterminated IRI");
            std::string name = text.substr(pos + 1, close - pos - 1);
            pos = close + 1;
            try {
                return Term::iri(name);
            } catch (const ValidationError& e) {
                fail(e.what());
            }
        }
        if (c == '"') {
            if (!literal_ok) fail("literal not allowed in this position");
            std::string value;
            ++pos;
            while (pos < text.size() && text[pos] != '"') {
                if (text[pos] == '\\') {
                    ++pos;
                    if (pos >= text.size()) fail("unterminated escape in literal");
                    switch (text[pos]) {
                        case '"': value += '"'; break;
                        case '\\': value += '\\'; break;
                        case 'n': value += '\n'; break;
                        case 'r': value += '\r'; break;
                        case 't': value += '\t'; break;
                        default: fail("unknown escape in literal");
                    }
                } else {
                    value += text[pos];
                }
                ++pos;
            }
            if (pos >= text.size()) fail("unterminated literal");
            ++pos;
            try {
                return Term::literal(value);
            } catch (const ValidationError& e) {
                fail(e.what());
            }
        }
        fail("expected <iri> or \"literal\"");
    }
};

}  // namespace detail

// Line-oriented triple file: `<s> <p> <o> .` with `#` comment lines.
inline Graph parse_graph(const std::string& text) {
    Graph g;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        detail::LineLexer lex(raw, line_no);
        lex.skip_ws();
        if (lex.pos >= raw.size() || raw[lex.pos] == '#') continue;
        Term s = lex.term(false);
        Term p = lex.term(false);
        Term o = lex.term(true);
        lex.skip_ws();
        if (lex.pos >= raw.size() || raw[lex.pos] != '.')
            lex.fail("expected '.' after triple");
        ++lex.pos;
        if (!lex.at_end()) lex.fail("trailing content after '.'");
        g.insert(Triple(std::move(s), std::move(p), std::move(o)));
    }
    return g;
}

}  // namespace bagsem::rdf

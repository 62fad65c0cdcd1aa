#pragma once

#include <cctype>

#include "bagsem/pattern.hpp"

namespace bagsem::sparql {

namespace parser_detail {

struct Token {
    enum class Kind {
        LParen, RParen, LBrace, RBrace, Dot, Eq, Bang, AndAnd, OrOr,
        Keyword, Var, Iri, Literal, End
    };
    Kind kind;
    std::string text;  // keyword name, variable name, IRI name or literal value
    int line;
};

inline bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

inline std::vector<Token> lex(const std::string& text) {
    std::vector<Token> out;
    size_t i = 0;
    int line = 1;
    auto push = [&](Token::Kind k, std::string s = "") {
        out.push_back(Token{k, std::move(s), line});
    };
    while (i < text.size()) {
        char c = text[i];
        if (c == '\n') { ++line; ++i; continue; }
        if (std::isspace(static_cast<unsigned char>(c))) { ++i; continue; }
        if (c == '#') {
            while (i < text.size() && text[i] != '\n') ++i;
            continue;
        }
        switch (c) {
            case '(': push(Token::Kind::LParen); ++i; continue;
            case ')': push(Token::Kind::RParen); ++i; continue;
            case '{': push(Token::Kind::LBrace); ++i; continue;
            case '}': push(Token::Kind::RBrace); ++i; continue;
            case '.': push(Token::Kind::Dot); ++i; continue;
            case '=': push(Token::Kind::Eq); ++i; continue;
            case '!': push(Token::Kind::Bang); ++i; continue;
        }
        if (c == '&' && i + 1 < text.size() && text[i + 1] == '&') {
            push(Token::Kind::AndAnd);
            i += 2;
            continue;
        }
        if (c == '|' && i + 1 < text.size() && text[i + 1] == '|') {
            push(Token::Kind::OrOr);
            i += 2;
            continue;
        }
        if (c == '?') {
            size_t j = i + 1;
            while (j < text.size() && ident_char(text[j])) ++j;
            if (j == i + 1) throw ParseError("empty variable name", line);
            push(Token::Kind::Var, text.substr(i + 1, j - i - 1));
            i = j;
            continue;
        }
        if (c == '_' && i + 1 < text.size() && text[i + 1] == ':')
            throw ParseError("blank nodes are not supported", line);
        if (c == '<') {
            size_t close = text.find('>', i + 1);
            if (close == std::string::npos) throw ParseError("unterminated IRI", line);
            push(Token::Kind::Iri, text.substr(i + 1, close - i - 1));
            i = close + 1;
            continue;
        }
        if (c == '"') {
            std::string value;
            ++i;
            while (i < text.size() && text[i] != '"') {
                if (text[i] == '\\') {
                    ++i;
                    if (i >= text.size()) throw ParseError("unterminated escape", line);
                    switch (text[i]) {
                        case '"': value += '"'; break;
                        case '\\': value += '\\'; break;
                        case 'n': value += '\n'; break;
                        case 'r': value += '\r'; break;
                        case 't': value += '\t'; break;
                        default: throw ParseError("unknown escape in literal", line);
                    }
                } else {
                    if (text[i] == '\n') ++line;
                    value += text[i];
                }
                ++i;
            }
            if (i >= text.size()) throw ParseError("unterminated literal", line);
            ++i;
            push(Token::Kind::Literal, value);
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            size_t j = i;
            while (j < text.size() && ident_char(text[j])) ++j;
            push(Token::Kind::Keyword, text.substr(i, j - i));
            i = j;
            continue;
        }
        throw ParseError(std::string("unexpected character '") + c + "'", line);
    }
    push(Token::Kind::End);
    return out;
}

struct Parser {
    std::vector<Token> toks;
    size_t pos = 0;

    const Token& peek() const { return toks[pos]; }
    Token next() { return toks[pos++]; }

    [[noreturn]] void fail(const std::string& msg) {
        throw ParseError(msg, peek().line);
    }

    bool at(Token::Kind k) const { return peek().kind == k; }
    bool at_keyword(const std::string& kw) const {
        return peek().kind == Token::Kind::Keyword && peek().text == kw;
    }
    void expect(Token::Kind k, const std::string& what) {
        if (!at(k)) fail("expected " + what);
        next();
    }

    static bool is_pattern_op(const std::string& kw) {
        return kw == "AND" || kw == "UNION" || kw == "OPT" || kw == "MINUS" ||
               kw == "DIFF" || kw == "EXCEPT" || kw == "EXCEPTSTAR";
    }

    TermOrVar term_or_var() {
        if (at(Token::Kind::Var)) return Variable(next().text);
        if (at(Token::Kind::Iri)) return Term::iri(next().text);
        if (at(Token::Kind::Literal)) return Term::literal(next().text);
        fail("expected term or variable");
    }

    PatternPtr triple() {
        TermOrVar s = term_or_var();
        TermOrVar p = term_or_var();
        TermOrVar o = term_or_var();
        return GraphPattern::make_triple(std::move(s), std::move(p), std::move(o));
    }

    ConstraintPtr constraint() { return constraint_or(); }

    ConstraintPtr constraint_or() {
        ConstraintPtr c = constraint_and();
        while (at(Token::Kind::OrOr)) {
            next();
            c = FilterConstraint::disj(c, constraint_and());
        }
        return c;
    }

    ConstraintPtr constraint_and() {
        ConstraintPtr c = constraint_unary();
        while (at(Token::Kind::AndAnd)) {
            next();
            c = FilterConstraint::conj(c, constraint_unary());
        }
        return c;
    }

    ConstraintPtr constraint_unary() {
        if (at(Token::Kind::Bang)) {
            next();
            return FilterConstraint::negate(constraint_unary());
        }
        if (at(Token::Kind::LParen)) {
            next();
            ConstraintPtr c = constraint();
            expect(Token::Kind::RParen, "')'");
            return c;
        }
        if (at_keyword("bound")) {
            next();
            expect(Token::Kind::LParen, "'(' after bound");
            if (!at(Token::Kind::Var)) fail("expected variable in bound()");
            Variable v(next().text);
            expect(Token::Kind::RParen, "')'");
            return FilterConstraint::bound(v);
        }
        if (at(Token::Kind::Var)) {
            Variable v(next().text);
            expect(Token::Kind::Eq, "'='");
            if (at(Token::Kind::Var)) return FilterConstraint::eq(v, Variable(next().text));
            if (at(Token::Kind::Iri)) return FilterConstraint::eq(v, Term::iri(next().text));
            if (at(Token::Kind::Literal))
                return FilterConstraint::eq(v, Term::literal(next().text));
            fail("expected term or variable after '='");
        }
        fail("expected filter atom");
    }

    PatternPtr primary() {
        if (at(Token::Kind::LParen)) {
            next();
            PatternPtr p = pattern();
            expect(Token::Kind::RParen, "')'");
            return p;
        }
        if (at_keyword("SELECT")) {
            next();
            std::set<Variable> w;
            while (at(Token::Kind::Var)) w.insert(Variable(next().text));
            PatternPtr p = primary();
            return GraphPattern::select(std::move(w), std::move(p));
        }
        if (at(Token::Kind::LBrace)) {
            next();
            PatternPtr p;
            if (at(Token::Kind::Var) || at(Token::Kind::Iri) || at(Token::Kind::Literal)) {
                p = triple();
                while (at(Token::Kind::Dot)) {
                    next();
                    if (at(Token::Kind::RBrace)) break;  // tolerate trailing dot
                    p = GraphPattern::binary(GraphPattern::Kind::And, p, triple());
                }
            } else {
                p = pattern();
            }
            expect(Token::Kind::RBrace, "'}'");
            return p;
        }
        fail("expected pattern");
    }

    PatternPtr postfix() {
        PatternPtr p = primary();
        while (at_keyword("FILTER")) {
            next();
            expect(Token::Kind::LParen, "'(' after FILTER");
            ConstraintPtr c = constraint();
            expect(Token::Kind::RParen, "')'");
            p = GraphPattern::filter(p, c);
        }
        return p;
    }

    PatternPtr pattern() {
        PatternPtr p = postfix();
        while (at(Token::Kind::Keyword) && is_pattern_op(peek().text)) {
            std::string op = next().text;
            PatternPtr r = postfix();
            GraphPattern::Kind k;
            if (op == "AND") k = GraphPattern::Kind::And;
            else if (op == "UNION") k = GraphPattern::Kind::Union;
            else if (op == "OPT") k = GraphPattern::Kind::Opt;
            else if (op == "MINUS") k = GraphPattern::Kind::Minus;
            else if (op == "DIFF") k = GraphPattern::Kind::Diff;
            else if (op == "EXCEPT") k = GraphPattern::Kind::Except;
            else k = GraphPattern::Kind::ExceptStar;
            p = GraphPattern::binary(k, p, r);
        }
        return p;
    }
};

}  // namespace parser_detail

// Parses the concrete pattern syntax and validates well-formedness.
inline PatternPtr parse_pattern(const std::string& text) {
    parser_detail::Parser p{parser_detail::lex(text)};
    PatternPtr out = p.pattern();
    if (!p.at(parser_detail::Token::Kind::End)) p.fail("trailing content after pattern");
    validate_or_throw(out);
    return out;
}

inline ConstraintPtr parse_constraint(const std::string& text) {
    parser_detail::Parser p{parser_detail::lex(text)};
    ConstraintPtr out = p.constraint();
    if (!p.at(parser_detail::Token::Kind::End)) p.fail("trailing content after constraint");
    return out;
}

}  // namespace bagsem::sparql

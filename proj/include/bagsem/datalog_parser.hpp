#pragma once

#include <cctype>
#include <string>
#include <vector>

#include "bagsem/common.hpp"
#include "bagsem/datalog.hpp"

namespace bagsem::datalog {

// Surface syntax, one clause per statement:
//
//   parent(alice, bob).            fact
//   parent(alice, bob) * 3.        fact with multiplicity
//   anc(X, Y) :- parent(X, Y).     rule
//   q(X) :- p(X), not r(X), X != bob.
//
// Identifiers starting uppercase are variables, lowercase identifiers are
// constants. "abc" is a string-tagged constant (kept distinct from the plain
// constant abc), 'abc' quotes an arbitrary constant verbatim. `%` starts a
// line comment. `not` is reserved; a constant of that name must be quoted.

namespace dl_lexer {

struct Token {
    enum class Kind {
        Ident, String, Raw, Number,
        LParen, RParen, Comma, Dot, Star,
        Turnstile, Eq, Neq, Not, End
    };
    Kind kind;
    std::string text;
    int line;
};

inline bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
inline bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == ':';
}

inline std::vector<Token> lex(const std::string& src) {
    std::vector<Token> out;
    int line = 1;
    size_t i = 0;
    auto push = [&](Token::Kind k, std::string t) { out.push_back({k, std::move(t), line}); };
    while (i < src.size()) {
        char c = src[i];
        if (c == '\n') {
            ++line;
            ++i;
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        if (c == '%') {
            while (i < src.size() && src[i] != '\n') ++i;
            continue;
        }
        if (c == '(') { push(Token::Kind::LParen, "("); ++i; continue; }
        if (c == ')') { push(Token::Kind::RParen, ")"); ++i; continue; }
        if (c == ',') { push(Token::Kind::Comma, ","); ++i; continue; }
        if (c == '.') { push(Token::Kind::Dot, "."); ++i; continue; }
        if (c == '*') { push(Token::Kind::Star, "*"); ++i; continue; }
        if (c == '=') { push(Token::Kind::Eq, "="); ++i; continue; }
        if (c == '!' && i + 1 < src.size() && src[i + 1] == '=') {
            push(Token::Kind::Neq, "!=");
            i += 2;
            continue;
        }
        if (c == ':' && i + 1 < src.size() && src[i + 1] == '-') {
            push(Token::Kind::Turnstile, ":-");
            i += 2;
            continue;
        }
        if (c == '"' || c == '\'') {
            char quote = c;
            ++i;
            std::string value;
            while (i < src.size() && src[i] != quote) {
                char d = src[i];
                if (d == '\n') throw ParseError("unterminated quoted constant", line);
                if (d == '\\') {
                    ++i;
                    if (i >= src.size()) throw ParseError("dangling escape", line);
                    switch (src[i]) {
                        case 'n': value += '\n'; break;
                        case 'r': value += '\r'; break;
                        case 't': value += '\t'; break;
                        case '\\': value += '\\'; break;
                        case '"': value += '"'; break;
                        case '\'': value += '\''; break;
                        default:
                            throw ParseError(std::string("unknown escape \\") + src[i], line);
                    }
                } else {
                    value += d;
                }
                ++i;
            }
            if (i >= src.size()) throw ParseError("unterminated quoted constant", line);
            ++i;
            push(quote == '"' ? Token::Kind::String : Token::Kind::Raw, value);
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::string num;
            while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i])))
                num += src[i++];
            push(Token::Kind::Number, num);
            continue;
        }
        if (ident_start(c)) {
            std::string id;
            id += src[i++];
            while (i < src.size() && ident_char(src[i])) id += src[i++];
            if (id == "not")
                push(Token::Kind::Not, id);
            else
                push(Token::Kind::Ident, id);
            continue;
        }
        throw ParseError(std::string("unexpected character '") + c + "'", line);
    }
    push(Token::Kind::End, "");
    return out;
}

}  // namespace dl_lexer

namespace dl_parser_detail {

using dl_lexer::Token;

struct Parser {
    std::vector<Token> toks;
    size_t pos = 0;

    const Token& peek() const { return toks[pos]; }
    Token take() { return toks[pos++]; }
    [[noreturn]] void fail(const std::string& what) {
        const Token& t = peek();
        throw ParseError("expected " + what + ", found '" + t.text + "'", t.line);
    }
    Token expect(Token::Kind k, const std::string& what) {
        if (peek().kind != k) fail(what);
        return take();
    }

    bool at_term() const {
        auto k = peek().kind;
        return k == Token::Kind::Ident || k == Token::Kind::String ||
               k == Token::Kind::Raw || k == Token::Kind::Number;
    }

    DlTerm term() {
        Token t = take();
        switch (t.kind) {
            case Token::Kind::Ident:
                if (std::isupper(static_cast<unsigned char>(t.text[0])))
                    return DlTerm::var(t.text);
                return DlTerm::constant(t.text);
            case Token::Kind::String:
                return DlTerm::constant("\"" + t.text + "\"");
            case Token::Kind::Raw:
                return DlTerm::constant(t.text);
            case Token::Kind::Number:
                return DlTerm::constant(t.text);
            default:
                --pos;
                fail("a term");
        }
    }

    Atom atom() {
        Token name = expect(Token::Kind::Ident, "a predicate name");
        if (std::isupper(static_cast<unsigned char>(name.text[0])))
            throw ParseError("predicate names must start lowercase: " + name.text,
                             name.line);
        expect(Token::Kind::LParen, "'('");
        Atom a{name.text, {}};
        if (peek().kind != Token::Kind::RParen) {
            a.args.push_back(term());
            while (peek().kind == Token::Kind::Comma) {
                take();
                a.args.push_back(term());
            }
        }
        expect(Token::Kind::RParen, "')'");
        return a;
    }

    Literal literal() {
        if (peek().kind == Token::Kind::Not) {
            take();
            return Literal::neg(atom());
        }
        // Lookahead: ident '(' is an atom, otherwise a comparison.
        if (peek().kind == Token::Kind::Ident && pos + 1 < toks.size() &&
            toks[pos + 1].kind == Token::Kind::LParen)
            return Literal::pos(atom());
        DlTerm lhs = term();
        if (peek().kind == Token::Kind::Eq) {
            take();
            return Literal::eq(lhs, term());
        }
        if (peek().kind == Token::Kind::Neq) {
            take();
            return Literal::neq(lhs, term());
        }
        fail("'=' or '!='");
    }

    void clause(Program& prog) {
        Atom head = atom();
        if (peek().kind == Token::Kind::Turnstile) {
            take();
            Rule r;
            r.head = std::move(head);
            r.body.push_back(literal());
            while (peek().kind == Token::Kind::Comma) {
                take();
                r.body.push_back(literal());
            }
            expect(Token::Kind::Dot, "'.'");
            prog.add_rule(std::move(r));
            return;
        }
        Count n = 1;
        if (peek().kind == Token::Kind::Star) {
            take();
            Token num = expect(Token::Kind::Number, "a multiplicity");
            n = std::stoll(num.text);
        }
        int line = peek().line;
        expect(Token::Kind::Dot, "'.'");
        if (!head.ground())
            throw ParseError("facts must be ground: " + head.pred, line);
        GroundFact f{head.pred, {}};
        for (const auto& a : head.args) f.args.push_back(a.text);
        prog.add_fact(std::move(f), n);
    }
};

}  // namespace dl_parser_detail

inline Program parse_program(const std::string& src) {
    dl_parser_detail::Parser parser{dl_lexer::lex(src)};
    Program prog;
    while (parser.peek().kind != dl_lexer::Token::Kind::End) parser.clause(prog);
    prog.arities();
    return prog;
}

// --- rendering ---------------------------------------------------------------

namespace dl_render_detail {

inline bool plain_constant(const std::string& s) {
    if (s.empty() || s == "not") return false;
    if (!std::islower(static_cast<unsigned char>(s[0])) &&
        !std::isdigit(static_cast<unsigned char>(s[0])))
        return false;
    for (char c : s)
        if (!dl_lexer::ident_char(c)) return false;
    return true;
}

inline std::string escape_quoted(const std::string& s, char quote) {
    std::string out(1, quote);
    for (char c : s) {
        switch (c) {
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default:
                if (c == quote) {
                    out += '\\';
                    out += quote;
                } else {
                    out += c;
                }
        }
    }
    out += quote;
    return out;
}

inline std::string constant_text(const std::string& value) {
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
        return escape_quoted(value.substr(1, value.size() - 2), '"');
    if (plain_constant(value)) return value;
    return escape_quoted(value, '\'');
}

}  // namespace dl_render_detail

inline std::string to_string(const DlTerm& t) {
    if (t.is_var()) return t.text;
    return dl_render_detail::constant_text(t.text);
}

inline std::string to_string(const Atom& a) {
    std::string out = a.pred + "(";
    for (size_t i = 0; i < a.args.size(); ++i) {
        if (i) out += ", ";
        out += to_string(a.args[i]);
    }
    out += ")";
    return out;
}

inline std::string to_string(const Literal& l) {
    switch (l.kind) {
        case Literal::Kind::Pos: return to_string(l.atom);
        case Literal::Kind::Neg: return "not " + to_string(l.atom);
        case Literal::Kind::Eq: return to_string(l.lhs) + " = " + to_string(l.rhs);
        case Literal::Kind::Neq: return to_string(l.lhs) + " != " + to_string(l.rhs);
    }
    throw Error("unreachable");
}

inline std::string to_string(const Rule& r) {
    std::string out = to_string(r.head) + " :- ";
    for (size_t i = 0; i < r.body.size(); ++i) {
        if (i) out += ", ";
        out += to_string(r.body[i]);
    }
    out += ".";
    return out;
}

inline std::string to_string(const GroundFact& f, Count n) {
    std::string out = f.pred + "(";
    for (size_t i = 0; i < f.args.size(); ++i) {
        if (i) out += ", ";
        out += dl_render_detail::constant_text(f.args[i]);
    }
    out += ")";
    if (n != 1) out += " * " + std::to_string(n);
    out += ".";
    return out;
}

inline std::string to_string(const Program& p) {
    std::string out;
    for (const auto& [f, n] : p.facts) out += to_string(f, n) + "\n";
    for (const auto& r : p.rules) out += to_string(r) + "\n";
    return out;
}

}  // namespace bagsem::datalog

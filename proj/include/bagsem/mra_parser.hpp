#pragma once

#include <cctype>
#include <map>
#include <string>
#include <vector>

#include "bagsem/common.hpp"
#include "bagsem/datalog_parser.hpp"
#include "bagsem/mra.hpp"

namespace bagsem::mra {

// Database files hold one block per relation:
//
//   relation parent[A, B] {
//     (alice, bob) * 2
//     ("x", carol)
//   }
//
// Expressions are written prefix, e.g.
//
//   project[A](join(r, select[A = b && !(B = C)](s)))
//
// Constant literals follow the same quoting rules as the Datalog syntax.

namespace mra_lexer {

struct Token {
    enum class Kind {
        Ident, String, Raw, Number,
        LParen, RParen, LBracket, RBracket, LBrace, RBrace,
        Comma, Star, Eq, Neq, Bang, AndAnd, OrOr, End
    };
    Kind kind;
    std::string text;
    int line;
};

inline std::vector<Token> lex(const std::string& src) {
    std::vector<Token> out;
    int line = 1;
    size_t i = 0;
    auto push = [&](Token::Kind k, std::string t) { out.push_back({k, std::move(t), line}); };
    while (i < src.size()) {
        char c = src[i];
        if (c == '\n') { ++line; ++i; continue; }
        if (std::isspace(static_cast<unsigned char>(c))) { ++i; continue; }
        if (c == '%') {
            while (i < src.size() && src[i] != '\n') ++i;
            continue;
        }
        switch (c) {
            case '(': push(Token::Kind::LParen, "("); ++i; continue;
            case ')': push(Token::Kind::RParen, ")"); ++i; continue;
            case '[': push(Token::Kind::LBracket, "["); ++i; continue;
            case ']': push(Token::Kind::RBracket, "]"); ++i; continue;
            case '{': push(Token::Kind::LBrace, "{"); ++i; continue;
            case '}': push(Token::Kind::RBrace, "}"); ++i; continue;
            case ',': push(Token::Kind::Comma, ","); ++i; continue;
            case '*': push(Token::Kind::Star, "*"); ++i; continue;
            case '=': push(Token::Kind::Eq, "="); ++i; continue;
            default: break;
        }
        if (c == '!' && i + 1 < src.size() && src[i + 1] == '=') {
            push(Token::Kind::Neq, "!=");
            i += 2;
            continue;
        }
        if (c == '!') { push(Token::Kind::Bang, "!"); ++i; continue; }
        if (c == '&' && i + 1 < src.size() && src[i + 1] == '&') {
            push(Token::Kind::AndAnd, "&&");
            i += 2;
            continue;
        }
        if (c == '|' && i + 1 < src.size() && src[i + 1] == '|') {
            push(Token::Kind::OrOr, "||");
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
        if (datalog::dl_lexer::ident_start(c)) {
            std::string id;
            id += src[i++];
            while (i < src.size() && datalog::dl_lexer::ident_char(src[i])) id += src[i++];
            push(Token::Kind::Ident, id);
            continue;
        }
        throw ParseError(std::string("unexpected character '") + c + "'", line);
    }
    push(Token::Kind::End, "");
    return out;
}

}  // namespace mra_lexer

namespace mra_parser_detail {

using mra_lexer::Token;

inline bool reserved(const std::string& id) {
    return id == "relation" || id == "select" || id == "project" || id == "join" ||
           id == "union" || id == "except" || id == "true";
}

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

    bool is_attr(const Token& t) const {
        return t.kind == Token::Kind::Ident &&
               std::isupper(static_cast<unsigned char>(t.text[0]));
    }

    std::string attribute() {
        Token t = expect(Token::Kind::Ident, "an attribute name");
        if (!std::isupper(static_cast<unsigned char>(t.text[0])))
            throw ParseError("attribute names start uppercase: " + t.text, t.line);
        return t.text;
    }

    std::string constant() {
        Token t = take();
        switch (t.kind) {
            case Token::Kind::Ident:
                if (std::isupper(static_cast<unsigned char>(t.text[0])))
                    throw ParseError("expected a constant, found attribute " + t.text,
                                     t.line);
                if (reserved(t.text))
                    throw ParseError("reserved word '" + t.text +
                                     "' must be quoted to act as a constant", t.line);
                return t.text;
            case Token::Kind::String: return "\"" + t.text + "\"";
            case Token::Kind::Raw: return t.text;
            case Token::Kind::Number: return t.text;
            default:
                --pos;
                fail("a constant");
        }
    }

    Schema attr_list() {
        expect(Token::Kind::LBracket, "'['");
        Schema s;
        if (peek().kind != Token::Kind::RBracket) {
            s.push_back(attribute());
            while (peek().kind == Token::Kind::Comma) {
                take();
                s.push_back(attribute());
            }
        }
        expect(Token::Kind::RBracket, "']'");
        return s;
    }

    // conditions: disjunction of conjunctions of unary atoms
    ConditionPtr condition() {
        ConditionPtr c = cond_and();
        while (peek().kind == Token::Kind::OrOr) {
            take();
            c = Condition::disj(c, cond_and());
        }
        return c;
    }
    ConditionPtr cond_and() {
        ConditionPtr c = cond_unary();
        while (peek().kind == Token::Kind::AndAnd) {
            take();
            c = Condition::conj(c, cond_unary());
        }
        return c;
    }
    ConditionPtr cond_unary() {
        if (peek().kind == Token::Kind::Bang) {
            take();
            return Condition::negate(cond_unary());
        }
        if (peek().kind == Token::Kind::LParen) {
            take();
            ConditionPtr c = condition();
            expect(Token::Kind::RParen, "')'");
            return c;
        }
        if (peek().kind == Token::Kind::Ident && peek().text == "true") {
            take();
            return Condition::truth();
        }
        std::string lhs = attribute();
        bool negated = false;
        if (peek().kind == Token::Kind::Neq)
            negated = true;
        else if (peek().kind != Token::Kind::Eq)
            fail("'=' or '!='");
        take();
        ConditionPtr atom;
        if (is_attr(peek()))
            atom = Condition::eq_attr(lhs, attribute());
        else
            atom = Condition::eq_const(lhs, constant());
        return negated ? Condition::negate(atom) : atom;
    }

    ExprPtr expression() {
        Token t = expect(Token::Kind::Ident, "an expression");
        if (t.text == "select") {
            expect(Token::Kind::LBracket, "'['");
            ConditionPtr c = condition();
            expect(Token::Kind::RBracket, "']'");
            expect(Token::Kind::LParen, "'('");
            ExprPtr in = expression();
            expect(Token::Kind::RParen, "')'");
            return Expr::select(std::move(c), std::move(in));
        }
        if (t.text == "project") {
            Schema attrs = attr_list();
            expect(Token::Kind::LParen, "'('");
            ExprPtr in = expression();
            expect(Token::Kind::RParen, "')'");
            return Expr::project(std::move(attrs), std::move(in));
        }
        if (t.text == "join" || t.text == "union" || t.text == "except") {
            expect(Token::Kind::LParen, "'('");
            ExprPtr l = expression();
            expect(Token::Kind::Comma, "','");
            ExprPtr r = expression();
            expect(Token::Kind::RParen, "')'");
            if (t.text == "join") return Expr::join(std::move(l), std::move(r));
            if (t.text == "union") return Expr::set_union(std::move(l), std::move(r));
            return Expr::except(std::move(l), std::move(r));
        }
        if (reserved(t.text) || std::isupper(static_cast<unsigned char>(t.text[0])))
            throw ParseError("'" + t.text + "' cannot name a relation", t.line);
        return Expr::base_rel(t.text);
    }

    void relation_block(Database& db) {
        Token kw = expect(Token::Kind::Ident, "'relation'");
        if (kw.text != "relation") fail("'relation'");
        Token name = expect(Token::Kind::Ident, "a relation name");
        if (reserved(name.text) || std::isupper(static_cast<unsigned char>(name.text[0])))
            throw ParseError("'" + name.text + "' cannot name a relation", name.line);
        Schema schema = attr_list();
        MultisetRelation rel(schema);
        expect(Token::Kind::LBrace, "'{'");
        while (peek().kind != Token::Kind::RBrace) {
            expect(Token::Kind::LParen, "'('");
            Tuple t;
            if (peek().kind != Token::Kind::RParen) {
                t.push_back(constant());
                while (peek().kind == Token::Kind::Comma) {
                    take();
                    t.push_back(constant());
                }
            }
            expect(Token::Kind::RParen, "')'");
            Count n = 1;
            if (peek().kind == Token::Kind::Star) {
                take();
                n = std::stoll(expect(Token::Kind::Number, "a count").text);
            }
            rel.add_row(std::move(t), n);
        }
        expect(Token::Kind::RBrace, "'}'");
        if (!db.emplace(name.text, std::move(rel)).second)
            throw ParseError("relation " + name.text + " defined twice", name.line);
    }
};

}  // namespace mra_parser_detail

inline Database parse_database(const std::string& src) {
    mra_parser_detail::Parser p{mra_lexer::lex(src)};
    Database db;
    while (p.peek().kind != mra_lexer::Token::Kind::End) p.relation_block(db);
    return db;
}

inline ExprPtr parse_expression(const std::string& src) {
    mra_parser_detail::Parser p{mra_lexer::lex(src)};
    ExprPtr e = p.expression();
    p.expect(mra_lexer::Token::Kind::End, "end of input");
    return e;
}

// --- rendering ----------------------------------------------------------------

inline std::string attr_list_text(const Schema& s) {
    std::string out = "[";
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) out += ", ";
        out += s[i];
    }
    return out + "]";
}

inline std::string render(const ConditionPtr& c) {
    using datalog::dl_render_detail::constant_text;
    switch (c->kind) {
        case Condition::Kind::True: return "true";
        case Condition::Kind::EqAttr: return c->lhs + " = " + c->rhs_attr;
        case Condition::Kind::EqConst: return c->lhs + " = " + constant_text(c->rhs_value);
        case Condition::Kind::Not: return "!(" + render(c->a) + ")";
        case Condition::Kind::And: return "(" + render(c->a) + ") && (" + render(c->b) + ")";
        case Condition::Kind::Or: return "(" + render(c->a) + ") || (" + render(c->b) + ")";
    }
    throw Error("unreachable");
}

inline std::string render(const ExprPtr& e) {
    switch (e->kind) {
        case Expr::Kind::Base: return e->base;
        case Expr::Kind::Select:
            return "select[" + render(e->cond) + "](" + render(e->left) + ")";
        case Expr::Kind::Project:
            return "project" + attr_list_text(e->attrs) + "(" + render(e->left) + ")";
        case Expr::Kind::Join:
            return "join(" + render(e->left) + ", " + render(e->right) + ")";
        case Expr::Kind::Union:
            return "union(" + render(e->left) + ", " + render(e->right) + ")";
        case Expr::Kind::Except:
            return "except(" + render(e->left) + ", " + render(e->right) + ")";
    }
    throw Error("unreachable");
}

inline std::string render(const MultisetRelation& rel, const std::string& name) {
    using datalog::dl_render_detail::constant_text;
    std::string out = "relation " + name + attr_list_text(rel.schema) + " {\n";
    for (const auto& [t, c] : rel.rows) {
        out += "  (";
        for (size_t i = 0; i < t.size(); ++i) {
            if (i) out += ", ";
            out += constant_text(t[i]);
        }
        out += ")";
        if (c != 1) out += " * " + std::to_string(c);
        out += "\n";
    }
    out += "}\n";
    return out;
}

inline std::string render(const Database& db) {
    std::string out;
    for (const auto& [name, rel] : db) out += render(rel, name);
    return out;
}

}  // namespace bagsem::mra

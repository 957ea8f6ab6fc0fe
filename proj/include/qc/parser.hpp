#pragma once

// Concrete text syntax for query programs (.dlq) and database instances
// (.db), with a serializer whose output parses back to a structurally equal
// value.
//
//   edb p/2, q/2.            declarations
//   idb U/1.
//   U(Y) :- p(@1,Y).         rules; @k is the k-th special constant
//   hit :- U(@2).
//   fcq arity 2 free 1,2.    flag-&-check directive
//   query(X,Z) :- tc(X,Y), tc(Y,Z).     Datalog goal (or UCQ when repeated)
//   subquery Name/1 { ... }  nested query blocks, used as atoms Name(X)
//
// Variables start uppercase, constants and predicates lowercase or with a
// digit. `%` starts a line comment.

#include <cctype>
#include <sstream>
#include <string>
#include <vector>

#include "qc/ast.hpp"
#include "qc/instance.hpp"

namespace qc {

struct parse_error : std::runtime_error {
    int line, col;
    parse_error(const std::string& msg, int l, int c)
        : std::runtime_error(msg + " at " + std::to_string(l) + ":" + std::to_string(c)),
          line(l),
          col(c) {}
};

namespace detail {

enum class Tok { Ident, Var, Lambda, LParen, RParen, Comma, Dot, Arrow, LBrace, RBrace, Slash, End };

struct Token {
    Tok kind;
    std::string text;
    int number = 0;
    int line = 1, col = 1;
};

class Lexer {
  public:
    explicit Lexer(const std::string& src) : src_(src) { advance(); }

    const Token& peek() const { return tok_; }
    Token next() {
        Token t = tok_;
        advance();
        return t;
    }

  private:
    void advance() {
        skip_ws();
        tok_.line = line_;
        tok_.col = col_;
        if (pos_ >= src_.size()) {
            tok_.kind = Tok::End;
            tok_.text.clear();
            return;
        }
        char c = src_[pos_];
        if (c == '(') return punct(Tok::LParen);
        if (c == ')') return punct(Tok::RParen);
        if (c == ',') return punct(Tok::Comma);
        if (c == '.') return punct(Tok::Dot);
        if (c == '{') return punct(Tok::LBrace);
        if (c == '}') return punct(Tok::RBrace);
        if (c == '/') return punct(Tok::Slash);
        if (c == ':' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '-') {
            bump();
            bump();
            tok_.kind = Tok::Arrow;
            tok_.text = ":-";
            return;
        }
        if (c == '@') {
            bump();
            std::string num;
            while (pos_ < src_.size() && std::isdigit((unsigned char)src_[pos_])) num += src_[bump()];
            if (num.empty()) throw parse_error("expected digits after '@'", line_, col_);
            tok_.kind = Tok::Lambda;
            tok_.number = std::stoi(num);
            tok_.text = "@" + num;
            return;
        }
        if (std::isalnum((unsigned char)c) || c == '_') {
            std::string word;
            while (pos_ < src_.size() &&
                   (std::isalnum((unsigned char)src_[pos_]) || src_[pos_] == '_' || src_[pos_] == '\''))
                word += src_[bump()];
            tok_.kind = std::isupper((unsigned char)word[0]) ? Tok::Var : Tok::Ident;
            tok_.text = word;
            return;
        }
        throw parse_error(std::string("unexpected character '") + c + "'", line_, col_);
    }

    void punct(Tok k) {
        tok_.kind = k;
        tok_.text = std::string(1, src_[pos_]);
        bump();
    }

    void skip_ws() {
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (c == '%') {
                while (pos_ < src_.size() && src_[pos_] != '\n') bump();
            } else if (std::isspace((unsigned char)c)) {
                bump();
            } else {
                break;
            }
        }
    }

    size_t bump() {
        if (src_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        return pos_++;
    }

    const std::string& src_;
    size_t pos_ = 0;
    int line_ = 1, col_ = 1;
    Token tok_;
};

class QueryParser {
  public:
    explicit QueryParser(const std::string& src) : lex_(src) {}

    QueryForm parse() {
        QueryForm q = parse_scope(/*top=*/true);
        auto diags = validate(q);
        for (const auto& d : diags)
            if (d.severity == Severity::Error)
                throw parse_error(d.message + " [" + d.where + "]", 0, 0);
        return q;
    }

  private:
    struct Scope {
        Program prog;
        std::vector<CQ> goals;
        bool has_fcq = false;
        int arity = 0;
        std::vector<int> free_positions;
    };

    QueryForm parse_scope(bool top) {
        Scope sc;
        for (;;) {
            const Token& t = lex_.peek();
            if (t.kind == Tok::End) {
                if (!top) err("unexpected end of input inside subquery block", t);
                break;
            }
            if (!top && t.kind == Tok::RBrace) break;
            if (t.kind == Tok::Ident && t.text == "edb") {
                lex_.next();
                parse_decls(sc.prog.edb);
            } else if (t.kind == Tok::Ident && t.text == "idb") {
                lex_.next();
                parse_decls(sc.prog.idb);
            } else if (t.kind == Tok::Ident && t.text == "fcq") {
                lex_.next();
                parse_fcq_directive(sc);
            } else if (t.kind == Tok::Ident && t.text == "subquery") {
                lex_.next();
                parse_subquery(sc);
            } else {
                parse_rule_or_goal(sc);
            }
        }
        return finish_scope(sc);
    }

    void parse_decls(std::map<std::string, int>& dst) {
        for (;;) {
            Token name = expect(Tok::Ident, "predicate name");
            expect(Tok::Slash, "'/'");
            Token ar = expect(Tok::Ident, "arity");
            if (!all_digits(ar.text)) err("arity must be a number", ar);
            if (dst.count(name.text)) err("duplicate declaration of " + name.text, name);
            dst[name.text] = std::stoi(ar.text);
            if (lex_.peek().kind == Tok::Comma) {
                lex_.next();
                continue;
            }
            expect(Tok::Dot, "'.'");
            break;
        }
    }

    void parse_fcq_directive(Scope& sc) {
        Token kw = expect(Tok::Ident, "'arity'");
        if (kw.text != "arity") err("expected 'arity'", kw);
        Token ar = expect(Tok::Ident, "arity number");
        if (!all_digits(ar.text)) err("arity must be a number", ar);
        Token fr = expect(Tok::Ident, "'free'");
        if (fr.text != "free") err("expected 'free'", fr);
        if (sc.has_fcq) err("duplicate fcq directive", kw);
        sc.has_fcq = true;
        sc.arity = std::stoi(ar.text);
        while (lex_.peek().kind == Tok::Ident && all_digits(lex_.peek().text)) {
            sc.free_positions.push_back(std::stoi(lex_.next().text));
            if (lex_.peek().kind == Tok::Comma)
                lex_.next();
            else
                break;
        }
        expect(Tok::Dot, "'.'");
    }

    void parse_subquery(Scope& sc) {
        Token name = expect(Tok::Ident, "subquery name");
        expect(Tok::Slash, "'/'");
        Token ar = expect(Tok::Ident, "subquery arity");
        if (!all_digits(ar.text)) err("arity must be a number", ar);
        expect(Tok::LBrace, "'{'");
        QueryForm sub = parse_scope(/*top=*/false);
        expect(Tok::RBrace, "'}'");
        if (sub.answer_arity() != std::stoi(ar.text))
            err("subquery " + name.text + " declares arity " + ar.text + " but defines arity " +
                    std::to_string(sub.answer_arity()),
                name);
        if (sc.prog.subqueries.count(name.text)) err("duplicate subquery " + name.text, name);
        sc.prog.subqueries.emplace(name.text, std::move(sub));
    }

    void parse_rule_or_goal(Scope& sc) {
        Atom head = parse_atom();
        expect(Tok::Arrow, "':-'");
        std::vector<Atom> body;
        for (;;) {
            body.push_back(parse_atom());
            if (lex_.peek().kind == Tok::Comma) {
                lex_.next();
                continue;
            }
            expect(Tok::Dot, "'.'");
            break;
        }
        if (head.pred == kQueryPred) {
            CQ g;
            for (const auto& t : head.args) {
                if (!t.is_var()) err("query head arguments must be variables", lex_.peek());
                g.free_vars.push_back(t.name);
            }
            g.atoms = std::move(body);
            sc.goals.push_back(std::move(g));
            return;
        }
        Rule r;
        r.head = std::move(head);
        for (auto& a : body) {
            BodyLiteral bl;
            bl.is_subquery = sc.prog.subqueries.count(a.pred) > 0;
            bl.atom = std::move(a);
            r.body.push_back(std::move(bl));
        }
        sc.prog.rules.push_back(std::move(r));
    }

    Atom parse_atom() {
        Token name = lex_.next();
        if (name.kind != Tok::Ident && name.kind != Tok::Var)
            err("expected an atom", name);
        if (name.kind == Tok::Var) err("predicate names must be lowercase", name);
        Atom a;
        a.pred = name.text;
        if (lex_.peek().kind != Tok::LParen) return a;  // nullary, e.g. hit
        lex_.next();
        if (lex_.peek().kind == Tok::RParen) {
            lex_.next();
            return a;
        }
        for (;;) {
            Token t = lex_.next();
            switch (t.kind) {
                case Tok::Var:
                    a.args.push_back(Term::var(t.text));
                    break;
                case Tok::Ident:
                    a.args.push_back(Term::constant(t.text));
                    break;
                case Tok::Lambda:
                    a.args.push_back(Term::lambda(t.number));
                    break;
                default:
                    err("expected a term", t);
            }
            if (lex_.peek().kind == Tok::Comma) {
                lex_.next();
                continue;
            }
            expect(Tok::RParen, "')'");
            break;
        }
        return a;
    }

    QueryForm finish_scope(Scope& sc) {
        if (sc.has_fcq) {
            if (!sc.goals.empty())
                throw parse_error("fcq directive and query goal in the same scope", 0, 0);
            FCQ f;
            f.program = std::move(sc.prog);
            f.arity = sc.arity;
            f.free_positions = sc.free_positions;
            std::sort(f.free_positions.begin(), f.free_positions.end());
            if (max_lambda_index(f.program) > f.arity)
                throw parse_error("lambda index out of range", 0, 0);
            return QueryForm(std::move(f));
        }
        if (sc.goals.size() == 1) {
            DatalogQuery d;
            d.program = std::move(sc.prog);
            d.goal = std::move(sc.goals[0]);
            return QueryForm(std::move(d));
        }
        if (sc.goals.size() > 1) {
            if (!sc.prog.rules.empty())
                throw parse_error("multiple query goals require a rule-free program (UCQ)", 0, 0);
            UCQ u;
            u.disjuncts = std::move(sc.goals);
            for (const auto& d : u.disjuncts)
                if (d.free_vars.size() != u.disjuncts[0].free_vars.size())
                    throw parse_error("UCQ disjuncts disagree on answer arity", 0, 0);
            return QueryForm(std::move(u));
        }
        throw parse_error("file defines no query: add a 'query' goal or an 'fcq' directive", 0, 0);
    }

    Token expect(Tok k, const std::string& what) {
        Token t = lex_.next();
        if (t.kind != k) err("expected " + what, t);
        return t;
    }

    [[noreturn]] void err(const std::string& msg, const Token& t) {
        throw parse_error(msg, t.line, t.col);
    }

    static bool all_digits(const std::string& s) {
        return !s.empty() && std::all_of(s.begin(), s.end(),
                                         [](char c) { return std::isdigit((unsigned char)c); });
    }

    Lexer lex_;
};

}  // namespace detail

inline QueryForm parse_query(const std::string& text) {
    return detail::QueryParser(text).parse();
}

inline DatabaseInstance parse_instance(const std::string& text) {
    detail::Lexer lex(text);
    DatabaseInstance db;
    std::map<std::string, int> arities;
    while (lex.peek().kind != detail::Tok::End) {
        detail::Token name = lex.next();
        if (name.kind != detail::Tok::Ident)
            throw parse_error("expected a fact", name.line, name.col);
        std::vector<int> tuple;
        if (lex.peek().kind == detail::Tok::LParen) {
            lex.next();
            if (lex.peek().kind == detail::Tok::RParen) {
                lex.next();
            } else {
                for (;;) {
                    detail::Token t = lex.next();
                    if (t.kind == detail::Tok::Var || t.kind == detail::Tok::Lambda)
                        throw parse_error("variables not allowed in facts", t.line, t.col);
                    if (t.kind != detail::Tok::Ident)
                        throw parse_error("expected a constant", t.line, t.col);
                    tuple.push_back(db.element_for(t.text));
                    if (lex.peek().kind == detail::Tok::Comma) {
                        lex.next();
                        continue;
                    }
                    if (lex.next().kind != detail::Tok::RParen)
                        throw parse_error("expected ')'", t.line, t.col);
                    break;
                }
            }
        }
        detail::Token dot = lex.next();
        if (dot.kind != detail::Tok::Dot) throw parse_error("expected '.'", dot.line, dot.col);
        auto [it, fresh] = arities.emplace(name.text, (int)tuple.size());
        if (!fresh && it->second != (int)tuple.size())
            throw parse_error("inconsistent arity for " + name.text, name.line, name.col);
        db.add_fact(name.text, std::move(tuple));
    }
    return db;
}

// ---------------------------------------------------------------------------
// serialization

namespace detail {

inline void write_term(std::ostream& os, const Term& t) {
    if (t.is_lambda())
        os << "@" << t.index;
    else
        os << t.name;
}

inline void write_atom(std::ostream& os, const Atom& a) {
    os << a.pred;
    if (a.args.empty()) return;
    os << "(";
    for (size_t i = 0; i < a.args.size(); ++i) {
        if (i) os << ",";
        write_term(os, a.args[i]);
    }
    os << ")";
}

inline void write_rule(std::ostream& os, const Rule& r) {
    write_atom(os, r.head);
    os << " :- ";
    for (size_t i = 0; i < r.body.size(); ++i) {
        if (i) os << ", ";
        write_atom(os, r.body[i].atom);
    }
    os << ".\n";
}

inline void write_decls(std::ostream& os, const char* kw, const std::map<std::string, int>& ds) {
    if (ds.empty()) return;
    os << kw << " ";
    bool first = true;
    for (const auto& [name, ar] : ds) {
        if (!first) os << ", ";
        os << name << "/" << ar;
        first = false;
    }
    os << ".\n";
}

inline void write_goal(std::ostream& os, const CQ& g) {
    os << kQueryPred << "(";
    for (size_t i = 0; i < g.free_vars.size(); ++i) {
        if (i) os << ",";
        os << g.free_vars[i];
    }
    os << ") :- ";
    for (size_t i = 0; i < g.atoms.size(); ++i) {
        if (i) os << ", ";
        write_atom(os, g.atoms[i]);
    }
    os << ".\n";
}

inline void write_query(std::ostream& os, const QueryForm& q);

inline void write_program(std::ostream& os, const Program& p) {
    write_decls(os, "edb", p.edb);
    write_decls(os, "idb", p.idb);
    for (const auto& [name, sub] : p.subqueries) {
        os << "subquery " << name << "/" << sub.answer_arity() << " {\n";
        write_query(os, sub);
        os << "}\n";
    }
    for (const auto& r : p.rules) write_rule(os, r);
}

inline void write_query(std::ostream& os, const QueryForm& q) {
    switch (q.kind()) {
        case QueryKind::Datalog:
            write_program(os, q.datalog().program);
            write_goal(os, q.datalog().goal);
            break;
        case QueryKind::Ucq: {
            // Collect mentioned predicates as EDB declarations.
            std::map<std::string, int> edb;
            for (const auto& d : q.ucq().disjuncts)
                for (const auto& a : d.atoms) edb[a.pred] = (int)a.args.size();
            write_decls(os, "edb", edb);
            for (const auto& d : q.ucq().disjuncts) write_goal(os, d);
            break;
        }
        case QueryKind::Fcq:
        case QueryKind::NestedFcq: {
            const auto& f = q.fcq();
            write_program(os, f.program);
            os << "fcq arity " << f.arity << " free ";
            for (size_t i = 0; i < f.free_positions.size(); ++i) {
                if (i) os << ",";
                os << f.free_positions[i];
            }
            os << ".\n";
            break;
        }
    }
}

}  // namespace detail

inline std::string serialize(const QueryForm& q) {
    std::ostringstream os;
    detail::write_query(os, q);
    return os.str();
}

inline std::string serialize(const DatabaseInstance& db) {
    std::ostringstream os;
    for (const auto& [pred, rel] : db.relations) {
        for (const auto& tuple : rel) {
            os << pred;
            if (!tuple.empty()) {
                os << "(";
                for (size_t i = 0; i < tuple.size(); ++i) {
                    if (i) os << ",";
                    os << db.elem_names[tuple[i]];
                }
                os << ")";
            }
            os << ".\n";
        }
    }
    return os.str();
}

}  // namespace qc

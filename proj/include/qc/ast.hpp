#pragma once

// Core syntax tree for Datalog programs, flag-&-check queries and their
// nested variants, plus well-formedness diagnostics and fragment
// classification.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace qc {

// Reserved predicate names.
inline constexpr const char* kHitPred = "hit";
inline constexpr const char* kQueryPred = "query";

struct resource_limit_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct internal_error : std::logic_error {
    using std::logic_error::logic_error;
};

enum class TermKind { Variable, Constant, Lambda };

struct Term {
    TermKind kind = TermKind::Variable;
    std::string name;  // variable or constant name
    int index = 0;     // lambda index k >= 1, denoting the k-th special constant

    static Term var(std::string n) { return Term{TermKind::Variable, std::move(n), 0}; }
    static Term constant(std::string n) { return Term{TermKind::Constant, std::move(n), 0}; }
    static Term lambda(int k) { return Term{TermKind::Lambda, {}, k}; }

    bool is_var() const { return kind == TermKind::Variable; }
    bool is_const() const { return kind == TermKind::Constant; }
    bool is_lambda() const { return kind == TermKind::Lambda; }

    friend bool operator==(const Term& a, const Term& b) {
        return a.kind == b.kind && a.name == b.name && a.index == b.index;
    }
    friend auto operator<=>(const Term& a, const Term& b) = default;
};

struct Atom {
    std::string pred;
    std::vector<Term> args;

    friend bool operator==(const Atom&, const Atom&) = default;
    friend auto operator<=>(const Atom&, const Atom&) = default;
};

// A body literal is either a plain atom or a reference to a named subquery
// used as if it were a predicate.
struct BodyLiteral {
    Atom atom;
    bool is_subquery = false;

    friend bool operator==(const BodyLiteral&, const BodyLiteral&) = default;
    friend auto operator<=>(const BodyLiteral&, const BodyLiteral&) = default;
};

struct Rule {
    std::vector<BodyLiteral> body;
    Atom head;

    friend bool operator==(const Rule&, const Rule&) = default;
    friend auto operator<=>(const Rule&, const Rule&) = default;
};

struct CQ {
    // Conjunctive query: free variables (answer tuple order) plus atoms;
    // all other variables are existentially quantified.
    std::vector<std::string> free_vars;
    std::vector<Atom> atoms;

    friend bool operator==(const CQ&, const CQ&) = default;
    friend auto operator<=>(const CQ&, const CQ&) = default;
};

struct QueryForm;

struct Program {
    std::map<std::string, int> edb;  // predicate -> arity
    std::map<std::string, int> idb;
    std::vector<Rule> rules;
    // Named subqueries referenced from rule bodies (nesting).
    std::map<std::string, QueryForm> subqueries;

    bool declared(const std::string& p) const { return edb.count(p) || idb.count(p); }
    std::optional<int> arity_of(const std::string& p) const {
        if (auto it = edb.find(p); it != edb.end()) return it->second;
        if (auto it = idb.find(p); it != idb.end()) return it->second;
        return std::nullopt;
    }

    friend bool operator==(const Program&, const Program&) = default;
};

struct DatalogQuery {
    Program program;
    CQ goal;

    friend bool operator==(const DatalogQuery&, const DatalogQuery&) = default;
};

struct UCQ {
    std::vector<CQ> disjuncts;  // all share the same answer arity

    int arity() const { return disjuncts.empty() ? 0 : (int)disjuncts[0].free_vars.size(); }
    friend bool operator==(const UCQ&, const UCQ&) = default;
};

// Flag-&-check query: a program over special constants @1..@m whose
// extension is the set of m-tuples forcing derivation of `hit`, projected
// to the free positions. Nested if the program uses subqueries.
struct FCQ {
    Program program;
    int arity = 0;
    std::vector<int> free_positions;  // subset of 1..arity, ascending

    friend bool operator==(const FCQ&, const FCQ&) = default;
};

enum class QueryKind { Datalog, Ucq, Fcq, NestedFcq };

struct QueryForm {
    std::variant<DatalogQuery, UCQ, FCQ> value;

    QueryForm() : value(UCQ{}) {}
    QueryForm(DatalogQuery q) : value(std::move(q)) {}
    QueryForm(UCQ q) : value(std::move(q)) {}
    QueryForm(FCQ q) : value(std::move(q)) {}

    bool is_datalog() const { return std::holds_alternative<DatalogQuery>(value); }
    bool is_ucq() const { return std::holds_alternative<UCQ>(value); }
    bool is_fcq() const { return std::holds_alternative<FCQ>(value); }

    const DatalogQuery& datalog() const { return std::get<DatalogQuery>(value); }
    const UCQ& ucq() const { return std::get<UCQ>(value); }
    const FCQ& fcq() const { return std::get<FCQ>(value); }
    DatalogQuery& datalog() { return std::get<DatalogQuery>(value); }
    UCQ& ucq() { return std::get<UCQ>(value); }
    FCQ& fcq() { return std::get<FCQ>(value); }

    QueryKind kind() const;
    // Answer arity: |free vars| for Datalog/UCQ, |free positions| for FCQ.
    int answer_arity() const;

    friend bool operator==(const QueryForm&, const QueryForm&) = default;
};

struct FragmentFlags {
    bool monadic = false;
    bool linear = false;
    bool frontier_guarded = false;
    int nesting_depth = 0;
    bool recursive = false;

    friend bool operator==(const FragmentFlags&, const FragmentFlags&) = default;
};

enum class Severity { Error, Warning, Info };

struct Diagnostic {
    Severity severity = Severity::Error;
    std::string message;
    std::string where;  // rule or context description

    friend bool operator==(const Diagnostic&, const Diagnostic&) = default;
};

// ---------------------------------------------------------------------------
// helpers

inline void collect_vars(const Atom& a, std::set<std::string>& out) {
    for (const auto& t : a.args)
        if (t.is_var()) out.insert(t.name);
}

inline std::set<std::string> head_vars(const Rule& r) {
    std::set<std::string> vs;
    collect_vars(r.head, vs);
    return vs;
}

inline std::set<std::string> rule_vars(const Rule& r) {
    std::set<std::string> vs;
    collect_vars(r.head, vs);
    for (const auto& b : r.body) collect_vars(b.atom, vs);
    return vs;
}

inline int max_lambda_index(const Program& p) {
    int m = 0;
    auto scan = [&](const Atom& a) {
        for (const auto& t : a.args)
            if (t.is_lambda()) m = std::max(m, t.index);
    };
    for (const auto& r : p.rules) {
        scan(r.head);
        for (const auto& b : r.body) scan(b.atom);
    }
    return m;
}

// ---------------------------------------------------------------------------
// validate

namespace detail {

inline std::string atom_str(const Atom& a) {
    std::string s = a.pred + "(";
    for (size_t i = 0; i < a.args.size(); ++i) {
        if (i) s += ",";
        const Term& t = a.args[i];
        if (t.is_lambda())
            s += "@" + std::to_string(t.index);
        else
            s += t.name;
    }
    return s + ")";
}

inline std::string rule_str(const Rule& r) {
    std::string s = atom_str(r.head) + " :- ";
    for (size_t i = 0; i < r.body.size(); ++i) {
        if (i) s += ", ";
        s += atom_str(r.body[i].atom);
    }
    return s;
}

inline void validate_program(const Program& p, int lambda_arity, bool allow_lambda,
                             std::vector<Diagnostic>& out) {
    auto check_atom = [&](const Atom& a, bool in_head, bool is_subq, const Rule& r) {
        std::string where = rule_str(r);
        std::optional<int> ar;
        if (is_subq) {
            auto it = p.subqueries.find(a.pred);
            if (it == p.subqueries.end()) {
                out.push_back({Severity::Error, "unresolved subquery " + a.pred, where});
                return;
            }
            ar = it->second.answer_arity();
        } else if (a.pred == kHitPred) {
            ar = 0;
        } else {
            ar = p.arity_of(a.pred);
            if (!ar) {
                out.push_back({Severity::Error, "undeclared predicate " + a.pred, where});
                return;
            }
        }
        if ((int)a.args.size() != *ar)
            out.push_back({Severity::Error,
                           "arity mismatch for " + a.pred + ": expected " + std::to_string(*ar) +
                               ", got " + std::to_string(a.args.size()),
                           where});
        for (const auto& t : a.args) {
            if (t.is_lambda()) {
                if (!allow_lambda)
                    out.push_back({Severity::Error, "special constant @" + std::to_string(t.index) +
                                                        " outside flag-&-check scope",
                                   where});
                else if (t.index < 1 || t.index > lambda_arity)
                    out.push_back({Severity::Error,
                                   "lambda index out of range: @" + std::to_string(t.index),
                                   where});
            }
        }
        if (in_head && p.edb.count(a.pred))
            out.push_back({Severity::Error, "EDB predicate " + a.pred + " in rule head", where});
    };

    for (const auto& r : p.rules) {
        std::string where = rule_str(r);
        if (r.body.empty())
            out.push_back({Severity::Error, "empty rule body", where});
        if (r.head.pred != kHitPred && !p.idb.count(r.head.pred) && r.head.pred != kQueryPred)
            out.push_back({Severity::Error, "rule head " + r.head.pred + " is not an IDB predicate",
                           where});
        check_atom(r.head, true, false, r);
        for (const auto& b : r.body) {
            if (b.atom.pred == kHitPred)
                out.push_back({Severity::Error, "hit may not occur in a rule body", where});
            check_atom(b.atom, false, b.is_subquery, r);
        }
        // Informational: lambda inside the first covering guard atom.
        auto hv = head_vars(r);
        if (!hv.empty()) {
            for (const auto& b : r.body) {
                if (b.is_subquery || !p.edb.count(b.atom.pred)) continue;
                std::set<std::string> av;
                collect_vars(b.atom, av);
                if (std::includes(av.begin(), av.end(), hv.begin(), hv.end())) {
                    bool has_lambda = std::any_of(b.atom.args.begin(), b.atom.args.end(),
                                                  [](const Term& t) { return t.is_lambda(); });
                    if (has_lambda)
                        out.push_back({Severity::Info,
                                       "guard atom " + atom_str(b.atom) + " contains a special constant",
                                       where});
                    break;
                }
            }
        }
    }

    // Subquery acyclicity: subqueries are separate scopes; a subquery may
    // reference its own nested subqueries but resolution is per-program, so
    // cycles can only arise through name reuse inside one scope chain.
    for (const auto& [name, sub] : p.subqueries) {
        (void)name;
        std::vector<Diagnostic> inner;
        // recurse
        switch (sub.kind()) {
            case QueryKind::Fcq:
            case QueryKind::NestedFcq:
                validate_program(sub.fcq().program, sub.fcq().arity, true, inner);
                break;
            case QueryKind::Datalog:
                validate_program(sub.datalog().program, 0, false, inner);
                break;
            default:
                break;
        }
        for (auto& d : inner) {
            d.where = "subquery " + name + ": " + d.where;
            out.push_back(std::move(d));
        }
    }
}

inline void validate_cq(const CQ& q, const Program& p, std::vector<Diagnostic>& out) {
    for (const auto& a : q.atoms) {
        auto ar = p.arity_of(a.pred);
        if (!ar) {
            out.push_back({Severity::Error, "undeclared predicate " + a.pred, "goal"});
            continue;
        }
        if ((int)a.args.size() != *ar)
            out.push_back({Severity::Error, "arity mismatch for " + a.pred, "goal"});
        for (const auto& t : a.args)
            if (t.is_lambda())
                out.push_back({Severity::Error, "special constant in goal", "goal"});
    }
}

}  // namespace detail

inline std::vector<Diagnostic> validate(const QueryForm& q) {
    std::vector<Diagnostic> out;
    switch (q.kind()) {
        case QueryKind::Datalog: {
            detail::validate_program(q.datalog().program, 0, false, out);
            detail::validate_cq(q.datalog().goal, q.datalog().program, out);
            break;
        }
        case QueryKind::Ucq: {
            const auto& u = q.ucq();
            for (size_t i = 1; i < u.disjuncts.size(); ++i)
                if (u.disjuncts[i].free_vars.size() != u.disjuncts[0].free_vars.size())
                    out.push_back({Severity::Error, "UCQ disjuncts disagree on answer arity", "goal"});
            break;
        }
        case QueryKind::Fcq:
        case QueryKind::NestedFcq: {
            const auto& f = q.fcq();
            detail::validate_program(f.program, f.arity, true, out);
            for (int pos : f.free_positions)
                if (pos < 1 || pos > f.arity)
                    out.push_back({Severity::Error,
                                   "free position " + std::to_string(pos) + " out of range", "fcq"});
            break;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// classify

namespace detail {

inline int nesting_depth_of(const Program& p) {
    int d = 0;
    for (const auto& [name, sub] : p.subqueries) {
        (void)name;
        int inner = 0;
        if (sub.is_fcq())
            inner = 1 + nesting_depth_of(sub.fcq().program);
        else if (sub.is_datalog())
            inner = 1 + nesting_depth_of(sub.datalog().program);
        else
            inner = 1;
        d = std::max(d, inner);
    }
    // Depth counts subquery layers actually used in rule bodies.
    bool used = false;
    for (const auto& r : p.rules)
        for (const auto& b : r.body)
            if (b.is_subquery) used = true;
    return used ? d : 0;
}

inline FragmentFlags classify_program(const Program& p) {
    FragmentFlags f;
    f.monadic = true;
    for (const auto& [name, ar] : p.idb) {
        (void)name;
        if (ar != 1) f.monadic = false;
    }
    f.linear = true;
    f.frontier_guarded = true;
    for (const auto& r : p.rules) {
        int idb_atoms = 0;
        for (const auto& b : r.body)
            if (b.is_subquery || p.idb.count(b.atom.pred)) ++idb_atoms;
        if (idb_atoms > 1) f.linear = false;

        auto hv = head_vars(r);
        if (!hv.empty()) {
            bool guarded = false;
            for (const auto& b : r.body) {
                if (b.is_subquery || !p.edb.count(b.atom.pred)) continue;
                std::set<std::string> av;
                collect_vars(b.atom, av);
                if (std::includes(av.begin(), av.end(), hv.begin(), hv.end())) {
                    guarded = true;
                    break;
                }
            }
            if (!guarded) f.frontier_guarded = false;
        }
        // rules with variable-free heads are vacuously guarded
    }
    // recursion over IDB dependency graph
    std::map<std::string, std::set<std::string>> dep;
    for (const auto& r : p.rules)
        for (const auto& b : r.body)
            if (!b.is_subquery && p.idb.count(b.atom.pred)) dep[r.head.pred].insert(b.atom.pred);
    // DFS cycle detection
    std::map<std::string, int> color;
    std::vector<std::string> stack;
    bool cyc = false;
    auto dfs = [&](auto&& self, const std::string& u) -> void {
        color[u] = 1;
        for (const auto& v : dep[u]) {
            if (color[v] == 1) cyc = true;
            else if (color[v] == 0) self(self, v);
        }
        color[u] = 2;
    };
    for (const auto& [u, _] : dep)
        if (color[u] == 0) dfs(dfs, u);
    f.recursive = cyc;
    f.nesting_depth = nesting_depth_of(p);
    return f;
}

}  // namespace detail

inline FragmentFlags classify(const QueryForm& q) {
    switch (q.kind()) {
        case QueryKind::Datalog:
            return detail::classify_program(q.datalog().program);
        case QueryKind::Ucq: {
            // A UCQ is a trivial flag-&-check query: every disjunct becomes a
            // hit rule with no IDB atoms.
            FragmentFlags f;
            f.monadic = true;
            f.linear = true;
            f.frontier_guarded = true;
            f.nesting_depth = 0;
            f.recursive = false;
            return f;
        }
        case QueryKind::Fcq:
        case QueryKind::NestedFcq:
            return detail::classify_program(q.fcq().program);
    }
    return {};
}

inline QueryKind QueryForm::kind() const {
    if (is_datalog()) return QueryKind::Datalog;
    if (is_ucq()) return QueryKind::Ucq;
    const auto& f = fcq();
    bool nested = false;
    for (const auto& r : f.program.rules)
        for (const auto& b : r.body)
            if (b.is_subquery) nested = true;
    return nested ? QueryKind::NestedFcq : QueryKind::Fcq;
}

inline int QueryForm::answer_arity() const {
    switch (kind()) {
        case QueryKind::Datalog:
            return (int)datalog().goal.free_vars.size();
        case QueryKind::Ucq:
            return ucq().arity();
        default:
            return (int)fcq().free_positions.size();
    }
}

}  // namespace qc

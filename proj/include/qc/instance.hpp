#pragma once

// Finite database instances over an active domain of interned elements.

#include <map>
#include <set>
#include <string>
#include <vector>

#include "qc/ast.hpp"

namespace qc {

struct DatabaseInstance {
    std::vector<std::string> elem_names;          // element id -> display name
    std::map<std::string, int> const_interp;      // constant name -> element id
    std::map<std::string, std::set<std::vector<int>>> relations;

    int domain_size() const { return (int)elem_names.size(); }

    int add_element(const std::string& name) {
        elem_names.push_back(name);
        return (int)elem_names.size() - 1;
    }

    // Element for a constant, creating a fresh one on first sight.
    int element_for(const std::string& c) {
        auto it = const_interp.find(c);
        if (it != const_interp.end()) return it->second;
        int id = add_element(c);
        const_interp.emplace(c, id);
        return id;
    }

    void add_fact(const std::string& pred, std::vector<int> tuple) {
        relations[pred].insert(std::move(tuple));
    }

    bool has_fact(const std::string& pred, const std::vector<int>& tuple) const {
        auto it = relations.find(pred);
        return it != relations.end() && it->second.count(tuple);
    }

    size_t fact_count() const {
        size_t n = 0;
        for (const auto& [p, rel] : relations) {
            (void)p;
            n += rel.size();
        }
        return n;
    }

    friend bool operator==(const DatabaseInstance&, const DatabaseInstance&) = default;
};

struct AnswerSet {
    int arity = 0;
    std::set<std::vector<int>> tuples;

    friend bool operator==(const AnswerSet&, const AnswerSet&) = default;
};

}  // namespace qc

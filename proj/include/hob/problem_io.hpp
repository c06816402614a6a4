#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "hob/bellman.hpp"
#include "hob/io.hpp"

namespace hob {

// Explicit problem file (1-based indices, '#' starts a comment line):
//   problem <m> <n>
//   row <i>
//   policy <label>
//   entry <i2> ... <im> <value>     # zero or more; leading index is the row
//   rhs <b_i>
//   policy <label> ...              # further choices for the same row
//   row <i+1> ...
// Every row needs at least one policy; every policy exactly one rhs.

struct ExplicitChoice {
    std::string label;
    std::vector<std::pair<IndexTuple, double>> entries; // trailing indices, 0-based
    double rhs = 0.0;
};

struct ExplicitProblem {
    int order = 2;
    int dim = 1;
    std::vector<std::vector<ExplicitChoice>> rows; // [row][choice]

    PolicyProblem to_policy_problem() const {
        std::vector<int> counts(dim);
        std::vector<std::vector<std::string>> names(dim);
        for (int i = 0; i < dim; ++i) {
            counts[i] = static_cast<int>(rows[i].size());
            for (const auto& c : rows[i]) names[i].push_back(c.label);
        }
        const auto data = rows; // copy shared into the generator
        const int m = order;
        auto gen = [data, m](int i, int label) -> PolicyRow {
            const ExplicitChoice& c = data[i][label];
            PolicyRow out;
            out.rhs = c.rhs;
            for (const auto& [trailing, v] : c.entries) {
                IndexTuple idx;
                idx.reserve(m);
                idx.push_back(i);
                idx.insert(idx.end(), trailing.begin(), trailing.end());
                out.entries.push_back({std::move(idx), v});
            }
            return out;
        };
        return PolicyProblem(order, dim, std::move(counts), gen, std::move(names));
    }
};

inline ExplicitProblem read_problem(std::istream& in) {
    auto fail = [](const std::string& msg) -> Error {
        return Error(ErrorKind::ParseError, "problem file: " + msg);
    };

    auto header = detail::next_content_line(in);
    if (!header) throw fail("missing header");
    long m = 0, n = 0;
    {
        std::istringstream hs(*header);
        std::string tag;
        if (!(hs >> tag >> m >> n) || tag != "problem" || m < 2 || n < 1)
            throw fail("expected 'problem <m> <n>'");
    }

    ExplicitProblem prob;
    prob.order = static_cast<int>(m);
    prob.dim = static_cast<int>(n);
    prob.rows.resize(n);

    int row = -1;
    ExplicitChoice* choice = nullptr;
    bool have_rhs = true;

    std::optional<std::string> line;
    while ((line = detail::next_content_line(in))) {
        std::istringstream ls(*line);
        std::string key;
        ls >> key;
        if (key == "row") {
            if (choice && !have_rhs) throw fail("policy without rhs");
            long i = 0;
            if (!(ls >> i) || i < 1 || i > n) throw fail("bad row index");
            row = static_cast<int>(i - 1);
            if (!prob.rows[row].empty()) throw fail("duplicate row block");
            choice = nullptr;
        } else if (key == "policy") {
            if (row < 0) throw fail("policy before any row");
            if (choice && !have_rhs) throw fail("policy without rhs");
            std::string label;
            if (!(ls >> label)) throw fail("policy needs a label");
            prob.rows[row].push_back({label, {}, 0.0});
            choice = &prob.rows[row].back();
            have_rhs = false;
        } else if (key == "entry") {
            if (!choice) throw fail("entry before any policy");
            IndexTuple trailing(m - 1);
            for (long s = 0; s < m - 1; ++s) {
                long i = 0;
                if (!(ls >> i)) throw fail("entry needs " + std::to_string(m - 1) +
                                            " indices and a value");
                if (i < 1 || i > n)
                    throw Error(ErrorKind::IndexOutOfRange, "problem file: index out of range");
                trailing[s] = static_cast<int>(i - 1);
            }
            double v = 0.0;
            if (!(ls >> v)) throw fail("entry missing value");
            choice->entries.emplace_back(std::move(trailing), v);
        } else if (key == "rhs") {
            if (!choice) throw fail("rhs before any policy");
            if (have_rhs) throw fail("duplicate rhs line");
            if (!(ls >> choice->rhs)) throw fail("bad rhs value");
            have_rhs = true;
        } else {
            throw fail("unknown key '" + key + "'");
        }
    }
    if (choice && !have_rhs) throw fail("policy without rhs");
    for (int i = 0; i < prob.dim; ++i)
        if (prob.rows[i].empty())
            throw fail("row " + std::to_string(i + 1) + " has no policies");
    return prob;
}

inline ExplicitProblem read_problem(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoError, "cannot open: " + path);
    return read_problem(in);
}

inline void write_problem(const ExplicitProblem& prob, const std::string& path,
                          int precision = 17) {
    std::ostringstream out;
    out << "problem " << prob.order << ' ' << prob.dim << '\n';
    for (int i = 0; i < prob.dim; ++i) {
        out << "row " << (i + 1) << '\n';
        for (const auto& c : prob.rows[i]) {
            out << "policy " << c.label << '\n';
            for (const auto& [trailing, v] : c.entries) {
                out << "entry";
                for (int j : trailing) out << ' ' << (j + 1);
                out << ' ' << detail::format_double(v, precision) << '\n';
            }
            out << "rhs " << detail::format_double(c.rhs, precision) << '\n';
        }
    }
    detail::atomic_write(path, out.str());
}

} // namespace hob

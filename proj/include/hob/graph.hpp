#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <vector>

#include "hob/dominance.hpp"
#include "hob/tensor.hpp"

namespace hob {

/// Directed graph of a tensor: edge i -> j iff some stored nonzero in row i
/// has j among its trailing indices. Self-loops included.
struct TensorGraph {
    int n = 0;
    std::vector<std::vector<int>> adj; // sorted, unique
};

inline TensorGraph build_graph(const SparseTensor& a) {
    TensorGraph g;
    g.n = a.dim();
    g.adj.resize(g.n);
    for (int e = 0; e < a.nnz(); ++e) {
        auto t = a.index(e);
        for (std::size_t s = 1; s < t.size(); ++s) g.adj[t[0]].push_back(t[s]);
    }
    for (auto& nb : g.adj) {
        std::sort(nb.begin(), nb.end());
        nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    }
    return g;
}

/// Representation matrix R(|A|): collapses absolute entries by index
/// membership, R_{ij} = sum over row-i entries of |a| * 1_{{i2..im}}(j).
/// Its graph coincides with the tensor's graph.
inline Matrix representation_matrix(const SparseTensor& a) {
    Matrix r(a.dim(), a.dim());
    std::vector<int> distinct;
    for (int e = 0; e < a.nnz(); ++e) {
        auto t = a.index(e);
        distinct.assign(t.begin() + 1, t.end());
        std::sort(distinct.begin(), distinct.end());
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
        for (int j : distinct) r(t[0], j) += std::abs(a.value(e));
    }
    return r;
}

/// Number of strongly connected components (iterative Tarjan).
inline int scc_count(const TensorGraph& g) {
    const int n = g.n;
    std::vector<int> dfn(n, -1), low(n, 0), on_stack(n, 0), stack;
    int time = 0, comps = 0;
    struct Frame {
        int v;
        std::size_t next;
    };
    std::vector<Frame> frames;
    for (int root = 0; root < n; ++root) {
        if (dfn[root] != -1) continue;
        frames.push_back({root, 0});
        dfn[root] = low[root] = time++;
        stack.push_back(root);
        on_stack[root] = 1;
        while (!frames.empty()) {
            Frame& f = frames.back();
            const int v = f.v;
            if (f.next < g.adj[v].size()) {
                const int w = g.adj[v][f.next++];
                if (dfn[w] == -1) {
                    dfn[w] = low[w] = time++;
                    stack.push_back(w);
                    on_stack[w] = 1;
                    frames.push_back({w, 0});
                } else if (on_stack[w]) {
                    low[v] = std::min(low[v], dfn[w]);
                }
            } else {
                if (low[v] == dfn[v]) {
                    ++comps;
                    int w;
                    do {
                        w = stack.back();
                        stack.pop_back();
                        on_stack[w] = 0;
                    } while (w != v);
                }
                frames.pop_back();
                if (!frames.empty()) {
                    const int parent = frames.back().v;
                    low[parent] = std::min(low[parent], low[v]);
                }
            }
        }
    }
    return comps;
}

/// Weak irreducibility: the graph of R(|A|) (equivalently, of the tensor)
/// is strongly connected.
inline bool is_weakly_irreducible(const SparseTensor& a) {
    return scc_count(build_graph(a)) == 1;
}

/// Weak chained diagonal dominance check and witnesses. One reverse
/// breadth-first search from J(A) decides reachability for every row; the
/// BFS tree provides, for each row outside J(A), a walk ending in J(A).
struct WcddResult {
    bool is_wcdd = false;
    std::vector<bool> reaches_j;
    std::vector<int> next_hop; // forward next hop toward J(A); -1 for rows in J or unreachable

    /// Witness walk i -> ... -> j with j in J(A); empty if none.
    std::vector<int> walk(int i) const {
        std::vector<int> w;
        if (!reaches_j[i]) return w;
        w.push_back(i);
        while (next_hop[w.back()] != -1) w.push_back(next_hop[w.back()]);
        return w;
    }
};

inline WcddResult is_wcdd(const SparseTensor&, const DominanceResult& dom,
                          const TensorGraph& g) {
    WcddResult r;
    const int n = g.n;
    r.reaches_j.assign(n, false);
    r.next_hop.assign(n, -1);
    if (!dom.is_wdd || dom.sdd_rows.empty()) {
        r.is_wcdd = false;
        return r;
    }
    std::vector<std::vector<int>> radj(n);
    for (int i = 0; i < n; ++i)
        for (int j : g.adj[i]) radj[j].push_back(i);
    std::queue<int> q;
    for (int j : dom.sdd_rows) {
        r.reaches_j[j] = true;
        q.push(j);
    }
    while (!q.empty()) {
        const int j = q.front();
        q.pop();
        for (int i : radj[j]) {
            if (r.reaches_j[i]) continue;
            r.reaches_j[i] = true;
            r.next_hop[i] = j;
            q.push(i);
        }
    }
    r.is_wcdd = std::all_of(r.reaches_j.begin(), r.reaches_j.end(), [](bool b) { return b; });
    return r;
}

inline WcddResult is_wcdd(const SparseTensor& a, double slack_eps = 0.0) {
    return is_wcdd(a, dominance(a, slack_eps), build_graph(a));
}

} // namespace hob

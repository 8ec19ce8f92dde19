#include "moluq/chem/scaffold.hpp"

#include <algorithm>
#include <cstdio>
#include <vector>

#include "moluq/common/hash.hpp"

namespace moluq::chem {

namespace {

struct LabeledGraph {
    std::vector<std::uint64_t> labels;
    std::vector<std::vector<std::pair<int, int>>> adj;  // (neighbor, doubled order)
    int bonds = 0;
};

// Iterated WL refinement; the sorted multiset of converged labels is a
// renumbering-invariant graph identity. Not a full isomorphism certificate,
// but WL with element/bond labels separates molecular graphs at this scale.
std::string wl_key(const LabeledGraph& g) {
    const int n = static_cast<int>(g.labels.size());
    std::vector<std::uint64_t> cur = g.labels;
    std::vector<std::uint64_t> next(n);
    for (int round = 0; round < n; ++round) {
        for (int i = 0; i < n; ++i) {
            std::vector<std::pair<int, std::uint64_t>> env;
            env.reserve(g.adj[i].size());
            for (auto [j, order] : g.adj[i]) env.push_back({order, cur[j]});
            std::sort(env.begin(), env.end());
            std::uint64_t h = hash_combine(0x51a2bc6d93e1f0c7ULL, cur[i]);
            for (auto [order, v] : env) {
                h = hash_combine(h, static_cast<std::uint64_t>(order));
                h = hash_combine(h, v);
            }
            next[i] = h;
        }
        cur.swap(next);
    }
    std::sort(cur.begin(), cur.end());
    std::uint64_t h = 0x8f2d1c3b4a596877ULL;
    for (std::uint64_t v : cur) h = hash_combine(h, v);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%d.%d.%016llx", n, g.bonds,
                  static_cast<unsigned long long>(h));
    return buf;
}

std::uint64_t scaffold_atom_label(const Atom& a) {
    // Hydrogen counts are excluded: stripping a substituent must not change
    // the key of the ring atom it hung from.
    std::uint64_t h = fnv1a64(a.element);
    h = hash_combine(h, static_cast<std::uint64_t>(a.formal_charge + 8));
    h = hash_combine(h, static_cast<std::uint64_t>(a.aromatic ? 1 : 0));
    return h;
}

std::uint64_t full_atom_label(const Atom& a) {
    std::uint64_t h = scaffold_atom_label(a);
    h = hash_combine(h, static_cast<std::uint64_t>(a.hydrogens));
    return h;
}

}  // namespace

std::string murcko_scaffold(const Molecule& m) {
    if (m.rings.empty()) return kEmptyScaffoldKey;

    const int n = static_cast<int>(m.atoms.size());
    std::vector<bool> ring_atom(n, false);
    for (const auto& ring : m.rings) {
        for (int i : ring) ring_atom[i] = true;
    }

    std::vector<bool> alive(n, true);
    bool changed = true;
    while (changed) {
        changed = false;
        std::vector<int> deg(n, 0);
        for (const Bond& b : m.bonds) {
            if (alive[b.a] && alive[b.b]) {
                ++deg[b.a];
                ++deg[b.b];
            }
        }
        for (int i = 0; i < n; ++i) {
            if (alive[i] && !ring_atom[i] && deg[i] <= 1) {
                alive[i] = false;
                changed = true;
            }
        }
    }

    std::vector<int> remap(n, -1);
    LabeledGraph g;
    for (int i = 0; i < n; ++i) {
        if (!alive[i]) continue;
        remap[i] = static_cast<int>(g.labels.size());
        g.labels.push_back(scaffold_atom_label(m.atoms[i]));
    }
    g.adj.resize(g.labels.size());
    for (const Bond& b : m.bonds) {
        if (!alive[b.a] || !alive[b.b]) continue;
        g.adj[remap[b.a]].push_back({remap[b.b], doubled_order(b.order)});
        g.adj[remap[b.b]].push_back({remap[b.a], doubled_order(b.order)});
        ++g.bonds;
    }
    return wl_key(g);
}

std::string graph_key(const Molecule& m) {
    const int n = static_cast<int>(m.atoms.size());
    LabeledGraph g;
    g.labels.reserve(n);
    for (const Atom& a : m.atoms) g.labels.push_back(full_atom_label(a));
    g.adj.resize(n);
    for (const Bond& b : m.bonds) {
        g.adj[b.a].push_back({b.b, doubled_order(b.order)});
        g.adj[b.b].push_back({b.a, doubled_order(b.order)});
        ++g.bonds;
    }
    return wl_key(g);
}

}  // namespace moluq::chem

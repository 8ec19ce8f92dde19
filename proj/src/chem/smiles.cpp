#include "moluq/chem/smiles.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace moluq::chem {

namespace {

const char* kind_name(ParseErrorKind k) {
    switch (k) {
        case ParseErrorKind::Syntax: return "syntax error";
        case ParseErrorKind::UnknownElement: return "unknown element";
        case ParseErrorKind::UnbalancedParenthesis: return "unbalanced parenthesis";
        case ParseErrorKind::UnmatchedRingClosure: return "unmatched ring closure";
        case ParseErrorKind::ValenceViolation: return "valence violation";
    }
    return "parse error";
}

[[noreturn]] void fail(ParseErrorKind kind, std::size_t offset, const std::string& msg) {
    throw ParseError(kind, offset, msg);
}

// Organic-subset elements and their normal valence lists (smallest first).
struct OrganicValence {
    const char* symbol;
    std::array<int, 3> valences;
    int count;
};

constexpr OrganicValence kOrganic[] = {
    {"B", {3, 0, 0}, 1}, {"C", {4, 0, 0}, 1},    {"N", {3, 5, 0}, 2},
    {"O", {2, 0, 0}, 1}, {"P", {3, 5, 0}, 2},    {"S", {2, 4, 6}, 3},
    {"F", {1, 0, 0}, 1}, {"Cl", {1, 0, 0}, 1},   {"Br", {1, 0, 0}, 1},
    {"I", {1, 0, 0}, 1},
};

const OrganicValence* organic_entry(std::string_view symbol) {
    for (const auto& e : kOrganic) {
        if (symbol == e.symbol) return &e;
    }
    return nullptr;
}

// Bracket atoms accept any known element symbol.
constexpr const char* kKnownElements[] = {
    "H",  "He", "Li", "Be", "B",  "C",  "N",  "O",  "F",  "Ne", "Na", "Mg",
    "Al", "Si", "P",  "S",  "Cl", "Ar", "K",  "Ca", "Sc", "Ti", "V",  "Cr",
    "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As", "Se", "Br", "Kr",
    "Rb", "Sr", "Y",  "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd",
    "In", "Sn", "Sb", "Te", "I",  "Xe", "Cs", "Ba", "W",  "Pt", "Au", "Hg",
    "Tl", "Pb", "Bi",
};

bool known_element(std::string_view symbol) {
    for (const char* e : kKnownElements) {
        if (symbol == e) return true;
    }
    return false;
}

// Implicit hydrogen count for a bare (non-bracket) atom. Aromatic bonds
// count one each; aromatic C/N/B/P add one more for the Kekule double bond
// they carry, while aromatic O/S contribute a lone pair instead. So a
// benzene carbon (2 aromatic bonds + 1) gets 1 H, a pyridine nitrogen gets
// 0, and furan/thiophene heteroatoms get 0. Returns -1 when every normal
// valence is exceeded.
int implicit_hydrogens(const OrganicValence& entry, bool aromatic, int aromatic_bonds,
                       int doubled_other_sum) {
    int bonded = aromatic_bonds + doubled_other_sum / 2;
    if (aromatic) {
        const std::string_view s = entry.symbol;
        if (s == "C" || s == "N" || s == "B" || s == "P") bonded += 1;
    }
    for (int i = 0; i < entry.count; ++i) {
        if (entry.valences[i] >= bonded) return entry.valences[i] - bonded;
    }
    return -1;
}

struct PendingRing {
    int atom = -1;
    std::size_t offset = 0;             // where the digit appeared
    std::optional<BondOrder> order;     // explicit bond before the digit
};

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    Molecule run() {
        if (text_.empty()) fail(ParseErrorKind::Syntax, 0, "empty SMILES");
        while (pos_ < text_.size()) step();
        finish();
        return std::move(mol_);
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
    Molecule mol_;
    int prev_atom_ = -1;
    std::optional<BondOrder> pending_bond_;
    std::size_t pending_bond_pos_ = 0;
    std::vector<std::size_t> branch_stack_;
    std::map<int, PendingRing> open_rings_;
    std::set<std::pair<int, int>> bond_set_;
    std::vector<std::size_t> atom_offsets_;  // for valence diagnostics
    std::vector<bool> bracket_atom_;

    char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

    void step() {
        const char c = text_[pos_];
        if (static_cast<unsigned char>(c) > 127) {
            fail(ParseErrorKind::Syntax, pos_, "non-ASCII character");
        }
        switch (c) {
            case '(':
                if (prev_atom_ < 0) {
                    fail(ParseErrorKind::UnbalancedParenthesis, pos_,
                         "branch before any atom");
                }
                branch_stack_.push_back(static_cast<std::size_t>(prev_atom_));
                ++pos_;
                return;
            case ')':
                if (branch_stack_.empty()) {
                    fail(ParseErrorKind::UnbalancedParenthesis, pos_,
                         "unopened branch closed");
                }
                if (pending_bond_) {
                    fail(ParseErrorKind::Syntax, pending_bond_pos_,
                         "dangling bond before ')'");
                }
                prev_atom_ = static_cast<int>(branch_stack_.back());
                branch_stack_.pop_back();
                ++pos_;
                return;
            case '-': set_pending(BondOrder::Single); return;
            case '=': set_pending(BondOrder::Double); return;
            case '#': set_pending(BondOrder::Triple); return;
            case ':': set_pending(BondOrder::Aromatic); return;
            case '.':
                fail(ParseErrorKind::Syntax, pos_, "multi-fragment input not supported");
            case '/':
            case '\\':
            case '@':
                fail(ParseErrorKind::Syntax, pos_, "stereo descriptors not supported");
            case '%':
            case '0': case '1': case '2': case '3': case '4':
            case '5': case '6': case '7': case '8': case '9':
                ring_closure();
                return;
            case '[':
                bracket_atom();
                return;
            default:
                plain_atom();
                return;
        }
    }

    void set_pending(BondOrder o) {
        if (pending_bond_) fail(ParseErrorKind::Syntax, pos_, "two bond symbols in a row");
        if (prev_atom_ < 0) fail(ParseErrorKind::Syntax, pos_, "bond before any atom");
        pending_bond_ = o;
        pending_bond_pos_ = pos_;
        ++pos_;
    }

    int add_atom(Atom atom, std::size_t offset, bool bracket) {
        mol_.atoms.push_back(std::move(atom));
        atom_offsets_.push_back(offset);
        bracket_atom_.push_back(bracket);
        const int idx = static_cast<int>(mol_.atoms.size()) - 1;
        if (prev_atom_ >= 0) make_bond(prev_atom_, idx, take_pending(), offset);
        prev_atom_ = idx;
        return idx;
    }

    std::optional<BondOrder> take_pending() {
        auto o = pending_bond_;
        pending_bond_.reset();
        return o;
    }

    void make_bond(int a, int b, std::optional<BondOrder> order, std::size_t offset) {
        if (a == b) fail(ParseErrorKind::UnmatchedRingClosure, offset, "bond from atom to itself");
        BondOrder o;
        if (order) {
            o = *order;
        } else {
            o = (mol_.atoms[a].aromatic && mol_.atoms[b].aromatic) ? BondOrder::Aromatic
                                                                   : BondOrder::Single;
        }
        if (o == BondOrder::Aromatic &&
            !(mol_.atoms[a].aromatic && mol_.atoms[b].aromatic)) {
            fail(ParseErrorKind::Syntax, offset,
                 "aromatic bond between non-aromatic atoms");
        }
        auto key = std::minmax(a, b);
        if (!bond_set_.insert(key).second) {
            fail(ParseErrorKind::UnmatchedRingClosure, offset, "duplicate bond");
        }
        mol_.bonds.push_back({key.first, key.second, o});
    }

    void plain_atom() {
        const std::size_t start = pos_;
        const char c = text_[pos_];
        std::string symbol;
        bool aromatic = false;
        if (std::islower(static_cast<unsigned char>(c))) {
            if (c == 'b' || c == 'c' || c == 'n' || c == 'o' || c == 'p' || c == 's') {
                symbol = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
                aromatic = true;
                ++pos_;
            } else {
                fail(ParseErrorKind::UnknownElement, pos_,
                     std::string("not an aromatic organic-subset atom: '") + c + "'");
            }
        } else if (std::isupper(static_cast<unsigned char>(c))) {
            symbol = c;
            ++pos_;
            // Two-letter organic symbols: Cl, Br.
            if (pos_ < text_.size()) {
                const char d = text_[pos_];
                if ((c == 'C' && d == 'l') || (c == 'B' && d == 'r')) {
                    symbol += d;
                    ++pos_;
                }
            }
            if (organic_entry(symbol) == nullptr) {
                fail(ParseErrorKind::UnknownElement, start,
                     "element requires brackets or is unknown: '" + symbol + "'");
            }
        } else {
            fail(ParseErrorKind::Syntax, pos_, std::string("unexpected character '") + c + "'");
        }
        Atom atom;
        atom.element = symbol;
        atom.aromatic = aromatic;
        add_atom(std::move(atom), start, /*bracket=*/false);
    }

    void bracket_atom() {
        const std::size_t start = pos_;
        ++pos_;  // '['
        if (pos_ >= text_.size()) fail(ParseErrorKind::Syntax, start, "unterminated bracket atom");
        if (std::isdigit(static_cast<unsigned char>(peek()))) {
            fail(ParseErrorKind::Syntax, pos_, "isotope labels not supported");
        }
        std::string symbol;
        bool aromatic = false;
        char c = peek();
        if (std::islower(static_cast<unsigned char>(c))) {
            symbol = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
            aromatic = true;
            ++pos_;
        } else if (std::isupper(static_cast<unsigned char>(c))) {
            symbol = c;
            ++pos_;
            if (pos_ < text_.size() && std::islower(static_cast<unsigned char>(peek())) &&
                peek() != 'h') {
                // Greedy two-letter symbol; single-letter + 'h' would be an H count.
                std::string two = symbol + peek();
                if (known_element(two)) {
                    symbol = two;
                    ++pos_;
                }
            }
        } else {
            fail(ParseErrorKind::Syntax, pos_, "expected element symbol in brackets");
        }
        if (!known_element(symbol)) {
            fail(ParseErrorKind::UnknownElement, start + 1, "unknown element '" + symbol + "'");
        }
        if (symbol == "H") {
            fail(ParseErrorKind::Syntax, start, "explicit hydrogen atoms not supported");
        }
        if (aromatic && organic_entry(symbol) == nullptr) {
            fail(ParseErrorKind::UnknownElement, start + 1,
                 "aromatic form not supported for '" + symbol + "'");
        }

        int hydrogens = 0;
        int charge = 0;
        while (pos_ < text_.size() && peek() != ']') {
            c = peek();
            if (c == 'H') {
                ++pos_;
                hydrogens = 1;
                if (std::isdigit(static_cast<unsigned char>(peek()))) {
                    hydrogens = peek() - '0';
                    ++pos_;
                }
            } else if (c == '+' || c == '-') {
                const int sign = (c == '+') ? 1 : -1;
                ++pos_;
                if (std::isdigit(static_cast<unsigned char>(peek()))) {
                    charge = sign * (peek() - '0');
                    ++pos_;
                } else {
                    charge = sign;
                    while (peek() == c) {
                        charge += sign;
                        ++pos_;
                    }
                }
            } else if (c == '@') {
                fail(ParseErrorKind::Syntax, pos_, "stereo descriptors not supported");
            } else {
                fail(ParseErrorKind::Syntax, pos_,
                     std::string("unexpected character in brackets: '") + c + "'");
            }
        }
        if (peek() != ']') fail(ParseErrorKind::Syntax, start, "unterminated bracket atom");
        ++pos_;  // ']'

        Atom atom;
        atom.element = symbol;
        atom.aromatic = aromatic;
        atom.formal_charge = charge;
        atom.hydrogens = hydrogens;
        add_atom(std::move(atom), start, /*bracket=*/true);
    }

    void ring_closure() {
        const std::size_t start = pos_;
        if (prev_atom_ < 0) {
            fail(ParseErrorKind::UnmatchedRingClosure, pos_, "ring closure before any atom");
        }
        int number;
        if (peek() == '%') {
            ++pos_;
            if (pos_ + 1 >= text_.size() ||
                !std::isdigit(static_cast<unsigned char>(text_[pos_])) ||
                !std::isdigit(static_cast<unsigned char>(text_[pos_ + 1]))) {
                fail(ParseErrorKind::Syntax, start, "'%' needs two digits");
            }
            number = (text_[pos_] - '0') * 10 + (text_[pos_ + 1] - '0');
            pos_ += 2;
        } else {
            number = peek() - '0';
            ++pos_;
        }

        auto it = open_rings_.find(number);
        if (it == open_rings_.end()) {
            open_rings_[number] = PendingRing{prev_atom_, start, take_pending()};
            return;
        }
        PendingRing open = it->second;
        open_rings_.erase(it);
        auto close_order = take_pending();
        std::optional<BondOrder> order;
        if (open.order && close_order && *open.order != *close_order) {
            fail(ParseErrorKind::UnmatchedRingClosure, start,
                 "ring closure bond symbols disagree");
        }
        order = open.order ? open.order : close_order;
        make_bond(open.atom, prev_atom_, order, start);
    }

    void finish() {
        if (pending_bond_) {
            fail(ParseErrorKind::Syntax, pending_bond_pos_, "dangling bond at end of input");
        }
        if (!branch_stack_.empty()) {
            fail(ParseErrorKind::UnbalancedParenthesis, text_.size() - 1, "unclosed branch");
        }
        if (!open_rings_.empty()) {
            const auto& first = open_rings_.begin()->second;
            fail(ParseErrorKind::UnmatchedRingClosure, first.offset,
                 "ring closure " + std::to_string(open_rings_.begin()->first) + " never closed");
        }
        assign_hydrogens();
        perceive_rings();
    }

    void assign_hydrogens() {
        std::vector<int> aromatic_bonds(mol_.atoms.size(), 0);
        std::vector<int> doubled_other(mol_.atoms.size(), 0);
        for (const Bond& b : mol_.bonds) {
            if (b.order == BondOrder::Aromatic) {
                ++aromatic_bonds[b.a];
                ++aromatic_bonds[b.b];
            } else {
                doubled_other[b.a] += doubled_order(b.order);
                doubled_other[b.b] += doubled_order(b.order);
            }
        }
        for (std::size_t i = 0; i < mol_.atoms.size(); ++i) {
            if (bracket_atom_[i]) continue;  // explicit H count, no valence model
            const OrganicValence* entry = organic_entry(mol_.atoms[i].element);
            const int h = implicit_hydrogens(*entry, mol_.atoms[i].aromatic,
                                             aromatic_bonds[i], doubled_other[i]);
            if (h < 0) {
                fail(ParseErrorKind::ValenceViolation, atom_offsets_[i],
                     mol_.atoms[i].element + " exceeds its normal valence");
            }
            mol_.atoms[i].hydrogens = h;
        }
    }

    // Ring bonds are the non-bridge edges; each contributes the smallest
    // cycle through it (BFS on the graph minus that edge). Duplicates are
    // merged, so benzene reports one ring and naphthalene two.
    void perceive_rings() {
        const int n = static_cast<int>(mol_.atoms.size());
        std::vector<std::vector<std::pair<int, int>>> adj(n);  // (neighbor, bond idx)
        for (std::size_t e = 0; e < mol_.bonds.size(); ++e) {
            adj[mol_.bonds[e].a].push_back({mol_.bonds[e].b, static_cast<int>(e)});
            adj[mol_.bonds[e].b].push_back({mol_.bonds[e].a, static_cast<int>(e)});
        }

        std::vector<bool> is_bridge(mol_.bonds.size(), false);
        find_bridges(adj, is_bridge);

        std::set<std::vector<int>> seen;
        for (std::size_t e = 0; e < mol_.bonds.size(); ++e) {
            if (is_bridge[e]) continue;
            auto cycle = shortest_cycle_through(adj, static_cast<int>(e));
            std::sort(cycle.begin(), cycle.end());
            if (seen.insert(cycle).second) mol_.rings.push_back(cycle);
        }
        std::sort(mol_.rings.begin(), mol_.rings.end(),
                  [](const std::vector<int>& x, const std::vector<int>& y) {
                      if (x.size() != y.size()) return x.size() < y.size();
                      return x < y;
                  });
    }

    void find_bridges(const std::vector<std::vector<std::pair<int, int>>>& adj,
                      std::vector<bool>& is_bridge) {
        const int n = static_cast<int>(adj.size());
        std::vector<int> disc(n, -1), low(n, 0);
        int timer = 0;
        // Iterative DFS; frames carry the edge used to enter the node.
        struct Frame {
            int node;
            int parent_edge;
            std::size_t next = 0;
        };
        for (int root = 0; root < n; ++root) {
            if (disc[root] >= 0) continue;
            std::vector<Frame> stack{{root, -1}};
            disc[root] = low[root] = timer++;
            while (!stack.empty()) {
                Frame& f = stack.back();
                if (f.next < adj[f.node].size()) {
                    auto [to, edge] = adj[f.node][f.next++];
                    if (edge == f.parent_edge) continue;
                    if (disc[to] >= 0) {
                        low[f.node] = std::min(low[f.node], disc[to]);
                    } else {
                        disc[to] = low[to] = timer++;
                        stack.push_back({to, edge});
                    }
                } else {
                    const Frame done = f;
                    stack.pop_back();
                    if (!stack.empty()) {
                        Frame& up = stack.back();
                        low[up.node] = std::min(low[up.node], low[done.node]);
                        if (low[done.node] > disc[up.node]) is_bridge[done.parent_edge] = true;
                    }
                }
            }
        }
    }

    std::vector<int> shortest_cycle_through(
        const std::vector<std::vector<std::pair<int, int>>>& adj, int edge) {
        const Bond& b = mol_.bonds[edge];
        const int n = static_cast<int>(adj.size());
        std::vector<int> parent(n, -2);
        std::vector<int> queue{b.a};
        parent[b.a] = -1;
        for (std::size_t head = 0; head < queue.size(); ++head) {
            const int u = queue[head];
            if (u == b.b) break;
            for (auto [v, e] : adj[u]) {
                if (e == edge || parent[v] != -2) continue;
                parent[v] = u;
                queue.push_back(v);
            }
        }
        std::vector<int> cycle;
        for (int v = b.b; v != -1; v = parent[v]) cycle.push_back(v);
        return cycle;
    }
};

}  // namespace

ParseError::ParseError(ParseErrorKind kind, std::size_t offset, const std::string& what)
    : Error(std::string(kind_name(kind)) + " at offset " + std::to_string(offset) + ": " + what),
      kind_(kind),
      offset_(offset) {}

Molecule parse_smiles(std::string_view text) {
    return Parser(text).run();
}

namespace {

// Mirrors the parser's implicit-H rule so bare atoms round-trip.
int reparse_hydrogens(const Molecule& m, int atom) {
    const OrganicValence* entry = organic_entry(m.atoms[atom].element);
    if (entry == nullptr) return -1;
    int aromatic_bonds = 0;
    int doubled_other = 0;
    for (const Bond& b : m.bonds) {
        if (b.a != atom && b.b != atom) continue;
        if (b.order == BondOrder::Aromatic) {
            ++aromatic_bonds;
        } else {
            doubled_other += doubled_order(b.order);
        }
    }
    return implicit_hydrogens(*entry, m.atoms[atom].aromatic, aromatic_bonds, doubled_other);
}

std::string atom_token(const Molecule& m, int atom) {
    const Atom& a = m.atoms[atom];
    std::string symbol = a.element;
    if (a.aromatic) {
        for (char& c : symbol) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    const bool organic = organic_entry(a.element) != nullptr;
    if (organic && a.formal_charge == 0 && reparse_hydrogens(m, atom) == a.hydrogens) {
        return symbol;
    }
    std::string out = "[" + symbol;
    if (a.hydrogens == 1) {
        out += "H";
    } else if (a.hydrogens > 1) {
        out += "H" + std::to_string(a.hydrogens);
    }
    if (a.formal_charge != 0) {
        out += (a.formal_charge > 0) ? '+' : '-';
        const int mag = std::abs(a.formal_charge);
        if (mag > 1) out += std::to_string(mag);
    }
    return out + "]";
}

// Bond symbol when writing u-v, or "" when the parser default already
// produces the right order.
std::string bond_token(const Molecule& m, const Bond& b) {
    const bool both_aromatic = m.atoms[b.a].aromatic && m.atoms[b.b].aromatic;
    switch (b.order) {
        case BondOrder::Single: return both_aromatic ? "-" : "";
        case BondOrder::Aromatic: return both_aromatic ? "" : ":";
        case BondOrder::Double: return "=";
        case BondOrder::Triple: return "#";
    }
    return "";
}

}  // namespace

std::string write_smiles(const Molecule& m) {
    if (m.atoms.empty()) return "";
    const int n = static_cast<int>(m.atoms.size());
    std::vector<std::vector<std::pair<int, int>>> adj(n);
    for (std::size_t e = 0; e < m.bonds.size(); ++e) {
        adj[m.bonds[e].a].push_back({m.bonds[e].b, static_cast<int>(e)});
        adj[m.bonds[e].b].push_back({m.bonds[e].a, static_cast<int>(e)});
    }

    // DFS tree + back edges (each back edge becomes a ring-closure digit).
    // Every edge is classified exactly once, when first examined.
    std::vector<bool> visited(n, false);
    std::vector<int> entry_edge(n, -1);
    std::vector<std::vector<int>> children(n);
    std::vector<int> back_edges;
    {
        struct WFrame {
            int node;
            std::size_t next = 0;
        };
        std::vector<bool> classified(m.bonds.size(), false);
        std::vector<WFrame> stack{{0}};
        visited[0] = true;
        while (!stack.empty()) {
            WFrame& f = stack.back();
            if (f.next >= adj[f.node].size()) {
                stack.pop_back();
                continue;
            }
            auto [v, e] = adj[f.node][f.next++];
            if (classified[e] || e == entry_edge[f.node]) continue;
            classified[e] = true;
            if (visited[v]) {
                back_edges.push_back(e);
            } else {
                visited[v] = true;
                entry_edge[v] = e;
                children[f.node].push_back(v);
                stack.push_back({v});
            }
        }
    }

    // Ring-closure digits per atom, in bond order for determinism.
    std::sort(back_edges.begin(), back_edges.end());
    std::vector<std::vector<std::pair<int, int>>> closures(n);  // (digit, edge)
    for (std::size_t i = 0; i < back_edges.size(); ++i) {
        const int digit = static_cast<int>(i) + 1;
        const Bond& b = m.bonds[back_edges[i]];
        closures[b.a].push_back({digit, back_edges[i]});
        closures[b.b].push_back({digit, back_edges[i]});
    }

    std::string out;
    std::vector<bool> digit_opened(back_edges.size() + 1, false);
    std::function<void(int)> emit = [&](int u) {
        out += atom_token(m, u);
        for (auto [digit, e] : closures[u]) {
            if (!digit_opened[digit]) {
                digit_opened[digit] = true;
                out += bond_token(m, m.bonds[e]);
            }
            if (digit >= 10) out += "%";
            out += std::to_string(digit);
        }
        const auto& kids = children[u];
        for (std::size_t i = 0; i < kids.size(); ++i) {
            const int v = kids[i];
            const std::string tok = bond_token(m, m.bonds[entry_edge[v]]);
            if (i + 1 < kids.size()) {
                out += "(" + tok;
                emit(v);
                out += ")";
            } else {
                out += tok;
                emit(v);
            }
        }
    };
    emit(0);
    return out;
}

}  // namespace moluq::chem

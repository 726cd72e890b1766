#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace synthplan {

enum class Element : std::uint8_t { C, N, O, S, P, F, Cl, Br, I };

inline constexpr std::array<const char*, 9> kElementSymbols{
    "C", "N", "O", "S", "P", "F", "Cl", "Br", "I"};

inline const char* symbol(Element e) {
  return kElementSymbols[static_cast<std::size_t>(e)];
}

inline std::optional<Element> element_from_symbol(std::string_view s) {
  for (std::size_t i = 0; i < kElementSymbols.size(); ++i) {
    if (s == kElementSymbols[i]) return static_cast<Element>(i);
  }
  return std::nullopt;
}

struct Bond {
  int a = 0;
  int b = 0;
  int order = 1;  // 1, 2 or 3
};

// Connected acyclic labeled graph; the only molecule representation in the
// project. |bonds| == |atoms| - 1 always holds for a valid instance.
struct MolGraph {
  std::vector<Element> atoms;
  std::vector<Bond> bonds;

  int atom_count() const { return static_cast<int>(atoms.size()); }

  // (neighbor index, bond order) lists per atom.
  std::vector<std::vector<std::pair<int, int>>> adjacency() const {
    std::vector<std::vector<std::pair<int, int>>> adj(atoms.size());
    for (const Bond& b : bonds) {
      adj[b.a].emplace_back(b.b, b.order);
      adj[b.b].emplace_back(b.a, b.order);
    }
    return adj;
  }

  void validate() const {
    if (atoms.empty()) throw std::invalid_argument("molecule has no atoms");
    if (bonds.size() + 1 != atoms.size())
      throw std::invalid_argument("molecule is not a tree");
    std::vector<std::vector<bool>> seen(atoms.size(),
                                        std::vector<bool>(atoms.size(), false));
    for (const Bond& b : bonds) {
      if (b.a < 0 || b.b < 0 || b.a >= atom_count() || b.b >= atom_count())
        throw std::invalid_argument("bond index out of range");
      if (b.a == b.b) throw std::invalid_argument("self-loop bond");
      if (b.order < 1 || b.order > 3)
        throw std::invalid_argument("bond order out of range");
      if (seen[b.a][b.b]) throw std::invalid_argument("duplicate bond");
      seen[b.a][b.b] = seen[b.b][b.a] = true;
    }
    // |bonds| == |atoms|-1 plus no duplicate edges implies connectivity for
    // an undirected simple graph only when acyclic; check reachability.
    std::vector<bool> reached(atoms.size(), false);
    std::vector<int> stack{0};
    reached[0] = true;
    auto adj = adjacency();
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      for (auto [u, o] : adj[v]) {
        if (!reached[u]) {
          reached[u] = true;
          stack.push_back(u);
        }
      }
    }
    if (std::find(reached.begin(), reached.end(), false) != reached.end())
      throw std::invalid_argument("molecule is disconnected");
  }
};

enum class ParseErrc {
  EmptyInput,
  UnbalancedParenthesis,
  UnknownElement,
  DanglingBond,
  RingClosure,
  UnexpectedToken,
};

class ParseError : public std::runtime_error {
 public:
  ParseError(ParseErrc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ParseErrc code() const { return code_; }

 private:
  ParseErrc code_;
};

// Grammar: molecule := atom chain; chain := (bond? atom | '(' chain ')')*;
// atom := 'Cl'|'Br'|'C'|'N'|'O'|'S'|'P'|'F'|'I'; bond := '='|'#'.
// Two-letter symbols are matched greedily. Ring closures are rejected.
inline MolGraph parse_smiles(std::string_view text) {
  if (text.empty()) throw ParseError(ParseErrc::EmptyInput, "empty SMILES");
  MolGraph mol;
  std::vector<int> stack;
  int prev = -1;
  int pending_order = 0;  // 0 = no explicit bond symbol pending
  std::size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    if (c == '(') {
      if (prev < 0)
        throw ParseError(ParseErrc::UnexpectedToken,
                         "branch before any atom at position " +
                             std::to_string(i));
      if (pending_order != 0)
        throw ParseError(ParseErrc::DanglingBond,
                         "bond symbol before '(' at position " +
                             std::to_string(i));
      stack.push_back(prev);
      ++i;
    } else if (c == ')') {
      if (stack.empty())
        throw ParseError(ParseErrc::UnbalancedParenthesis,
                         "unmatched ')' at position " + std::to_string(i));
      if (pending_order != 0)
        throw ParseError(ParseErrc::DanglingBond,
                         "bond symbol before ')' at position " +
                             std::to_string(i));
      prev = stack.back();
      stack.pop_back();
      ++i;
    } else if (c == '=' || c == '#') {
      if (pending_order != 0)
        throw ParseError(ParseErrc::DanglingBond,
                         "consecutive bond symbols at position " +
                             std::to_string(i));
      if (prev < 0)
        throw ParseError(ParseErrc::DanglingBond,
                         "bond symbol before any atom");
      pending_order = (c == '=') ? 2 : 3;
      ++i;
    } else if (c >= '0' && c <= '9') {
      throw ParseError(ParseErrc::RingClosure,
                       "ring-closure digits are not supported");
    } else if (c == '%') {
      throw ParseError(ParseErrc::RingClosure,
                       "ring-closure digits are not supported");
    } else {
      std::optional<Element> elem;
      std::size_t len = 0;
      if (i + 1 < text.size()) {
        elem = element_from_symbol(text.substr(i, 2));
        if (elem) len = 2;
      }
      if (!elem) {
        elem = element_from_symbol(text.substr(i, 1));
        if (elem) len = 1;
      }
      if (!elem)
        throw ParseError(ParseErrc::UnknownElement,
                         "unknown element symbol at position " +
                             std::to_string(i));
      int idx = mol.atom_count();
      mol.atoms.push_back(*elem);
      if (prev >= 0) {
        mol.bonds.push_back(
            Bond{prev, idx, pending_order == 0 ? 1 : pending_order});
      } else if (pending_order != 0) {
        throw ParseError(ParseErrc::DanglingBond, "bond before first atom");
      }
      pending_order = 0;
      prev = idx;
      i += len;
    }
  }
  if (!stack.empty())
    throw ParseError(ParseErrc::UnbalancedParenthesis, "unmatched '('");
  if (pending_order != 0)
    throw ParseError(ParseErrc::DanglingBond, "trailing bond symbol");
  if (mol.atoms.empty())
    throw ParseError(ParseErrc::EmptyInput, "no atoms in SMILES");
  return mol;
}

namespace detail {

inline char bond_char(int order) {
  return order == 2 ? '=' : order == 3 ? '#' : '\0';
}

// Rooted canonical code: element symbol followed by the sorted child codes,
// each prefixed by its bond symbol and wrapped in parentheses-like braces so
// the decomposition is unambiguous.
inline std::string rooted_code(
    const MolGraph& mol,
    const std::vector<std::vector<std::pair<int, int>>>& adj, int v,
    int parent) {
  std::vector<std::string> children;
  for (auto [u, order] : adj[v]) {
    if (u == parent) continue;
    std::string sub;
    char bc = bond_char(order);
    if (bc != '\0') sub.push_back(bc);
    sub += rooted_code(mol, adj, u, v);
    children.push_back(std::move(sub));
  }
  std::sort(children.begin(), children.end());
  std::string code = symbol(mol.atoms[v]);
  for (const std::string& c : children) {
    code.push_back('{');
    code += c;
    code.push_back('}');
  }
  return code;
}

// Tree centroid(s) by leaf peeling; one or two vertices.
inline std::vector<int> tree_centroids(
    const MolGraph& mol,
    const std::vector<std::vector<std::pair<int, int>>>& adj) {
  int n = mol.atom_count();
  if (n == 1) return {0};
  std::vector<int> degree(n);
  std::vector<int> layer;
  for (int v = 0; v < n; ++v) {
    degree[v] = static_cast<int>(adj[v].size());
    if (degree[v] <= 1) layer.push_back(v);
  }
  int remaining = n;
  std::vector<int> current = layer;
  while (remaining > 2) {
    std::vector<int> next;
    remaining -= static_cast<int>(current.size());
    for (int v : current) {
      for (auto [u, o] : adj[v]) {
        if (--degree[u] == 1) next.push_back(u);
      }
    }
    current = std::move(next);
  }
  return current;
}

inline void write_smiles(const MolGraph& mol,
                         const std::vector<std::vector<std::pair<int, int>>>& adj,
                         int v, int parent, std::string& out) {
  out += symbol(mol.atoms[v]);
  struct Child {
    std::string key;
    int vertex;
    int order;
  };
  std::vector<Child> children;
  for (auto [u, order] : adj[v]) {
    if (u == parent) continue;
    std::string key;
    char bc = bond_char(order);
    if (bc != '\0') key.push_back(bc);
    key += rooted_code(mol, adj, u, v);
    children.push_back(Child{std::move(key), u, order});
  }
  std::sort(children.begin(), children.end(),
            [](const Child& x, const Child& y) { return x.key < y.key; });
  for (std::size_t i = 0; i < children.size(); ++i) {
    bool last = (i + 1 == children.size());
    if (!last) out.push_back('(');
    char bc = bond_char(children[i].order);
    if (bc != '\0') out.push_back(bc);
    write_smiles(mol, adj, children[i].vertex, v, out);
    if (!last) out.push_back(')');
  }
}

}  // namespace detail

// Deterministic canonical form: root at the tree centroid (smaller rooted
// code on ties), children ordered by their rooted codes. Equal for any two
// isomorphic molecules; the output parses back to an isomorphic graph.
inline std::string canonical_smiles(const MolGraph& mol) {
  mol.validate();
  auto adj = mol.adjacency();
  std::vector<int> centroids = detail::tree_centroids(mol, adj);
  int root = centroids[0];
  if (centroids.size() == 2) {
    std::string c0 = detail::rooted_code(mol, adj, centroids[0], -1);
    std::string c1 = detail::rooted_code(mol, adj, centroids[1], -1);
    if (c1 < c0) root = centroids[1];
  }
  std::string out;
  detail::write_smiles(mol, adj, root, -1, out);
  return out;
}

inline std::string canonicalize(std::string_view smiles) {
  return canonical_smiles(parse_smiles(smiles));
}

}  // namespace synthplan

#pragma once

#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "synthplan/molgraph.hpp"

namespace synthplan {

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

struct Fingerprint {
  std::set<int> bits;
  int nbits = 1024;

  bool operator==(const Fingerprint&) const = default;
};

namespace detail {

// Canonical code of the induced subtree of atoms within `radius` of `root`,
// rooted at `root`. Distance limits, not atom counts, bound the recursion.
inline std::string ball_code(
    const MolGraph& mol,
    const std::vector<std::vector<std::pair<int, int>>>& adj, int v,
    int parent, int budget) {
  std::vector<std::string> children;
  if (budget > 0) {
    for (auto [u, order] : adj[v]) {
      if (u == parent) continue;
      std::string sub;
      char bc = bond_char(order);
      if (bc != '\0') sub.push_back(bc);
      sub += ball_code(mol, adj, u, v, budget - 1);
      children.push_back(std::move(sub));
    }
    std::sort(children.begin(), children.end());
  }
  std::string code = symbol(mol.atoms[v]);
  for (const std::string& c : children) {
    code.push_back('{');
    code += c;
    code.push_back('}');
  }
  return code;
}

}  // namespace detail

// Circular fingerprint: for every atom and every r in [0, radius], hash the
// canonical code of the r-ball around the atom (FNV-1a 64-bit) and fold the
// hash mod nbits. Invariant under atom relabeling.
inline Fingerprint morgan_fingerprint(const MolGraph& mol, int radius,
                                      int nbits) {
  if (radius < 0) throw std::invalid_argument("radius must be >= 0");
  if (nbits < 64) throw std::invalid_argument("nbits must be >= 64");
  mol.validate();
  Fingerprint fp;
  fp.nbits = nbits;
  auto adj = mol.adjacency();
  for (int a = 0; a < mol.atom_count(); ++a) {
    for (int r = 0; r <= radius; ++r) {
      std::string code = detail::ball_code(mol, adj, a, -1, r);
      fp.bits.insert(static_cast<int>(fnv1a64(code) %
                                      static_cast<std::uint64_t>(nbits)));
    }
  }
  return fp;
}

// |a ∩ b| / |a ∪ b|; 1.0 when both bit sets are empty.
inline double tanimoto(const Fingerprint& a, const Fingerprint& b) {
  if (a.nbits != b.nbits)
    throw std::invalid_argument("tanimoto: mismatched nbits");
  if (a.bits.empty() && b.bits.empty()) return 1.0;
  std::size_t inter = 0;
  for (int bit : a.bits) inter += b.bits.count(bit);
  std::size_t uni = a.bits.size() + b.bits.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

// Bitwise union of member fingerprints; set-level substrate for similarity
// between molecule sets.
inline Fingerprint fingerprint_union(const std::vector<MolGraph>& mols,
                                     int radius, int nbits) {
  if (mols.empty())
    throw std::invalid_argument("fingerprint_union: empty molecule set");
  Fingerprint out;
  out.nbits = nbits;
  for (const MolGraph& m : mols) {
    Fingerprint fp = morgan_fingerprint(m, radius, nbits);
    out.bits.insert(fp.bits.begin(), fp.bits.end());
  }
  return out;
}

}  // namespace synthplan

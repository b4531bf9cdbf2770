#pragma once

// Discrete groups and semigroups given by exact integer arithmetic, and
// their built-in Følner families. Translations are on the right: F·s.

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "isometrize/errors.hpp"

namespace isometrize {

/// Canonical integer coordinates. Unused trailing slots stay zero.
struct Element {
  std::array<std::int64_t, 4> c{};

  friend bool operator==(const Element&, const Element&) = default;
};

struct ElementHash {
  std::size_t operator()(const Element& e) const noexcept {
    std::uint64_t h = static_cast<std::uint64_t>(e.c[0]) * 0x9e3779b97f4a7c15ULL;
    h ^= static_cast<std::uint64_t>(e.c[1]) * 0xc2b2ae3d27d4eb4fULL;
    h ^= static_cast<std::uint64_t>(e.c[2]) * 0x165667b19e3779f9ULL;
    h ^= static_cast<std::uint64_t>(e.c[3]) * 0x27d4eb2f165667c5ULL;
    h ^= h >> 29;
    h *= 0xbf58476d1ce4e5b9ULL;
    h ^= h >> 32;
    return static_cast<std::size_t>(h);
  }
};

using ElementSet = std::unordered_set<Element, ElementHash>;

enum class GroupFamily { IntLattice, Heisenberg3, FiniteGroupTable, NatLattice };
enum class GroupKind { Group, Semigroup };

struct Generator {
  std::string name;
  Element element;
};

/// Desk-scale guard for enumerated sets.
inline constexpr std::size_t kMaxSetSize = 10'000'000;

class GroupDescriptor {
 public:
  static GroupDescriptor int_lattice(int d) {
    check_lattice_dim(d);
    GroupDescriptor g(GroupFamily::IntLattice, GroupKind::Group, d);
    g.add_unit_generators();
    return g;
  }

  static GroupDescriptor nat_lattice(int d) {
    check_lattice_dim(d);
    GroupDescriptor g(GroupFamily::NatLattice, GroupKind::Semigroup, d);
    g.add_unit_generators();
    return g;
  }

  /// Integer Heisenberg group, (a,b,c)(a',b',c') = (a+a', b+b', c+c'+ab').
  static GroupDescriptor heisenberg3() {
    GroupDescriptor g(GroupFamily::Heisenberg3, GroupKind::Group, 3);
    g.generators_.push_back({"x", Element{{1, 0, 0, 0}}});
    g.generators_.push_back({"y", Element{{0, 1, 0, 0}}});
    g.generators_.push_back({"z", Element{{0, 0, 1, 0}}});
    return g;
  }

  /// Finite group from a multiplication table of 0-based indices. Checks
  /// closure, identity, inverses and associativity (exhaustive for small
  /// tables, otherwise `samples` seeded random triples).
  static GroupDescriptor finite_table(const std::vector<std::vector<std::int64_t>>& table, std::uint64_t seed = 0,
                                      std::size_t samples = 20000) {
    const std::size_t n = table.size();
    if (n == 0) throw Error(ErrorCode::SchemaError, "multiplication table is empty");
    auto flat = std::make_shared<std::vector<std::int64_t>>();
    flat->reserve(n * n);
    for (std::size_t i = 0; i < n; ++i) {
      if (table[i].size() != n)
        throw Error(ErrorCode::SchemaError, "multiplication table row " + std::to_string(i) + " has " +
                                                std::to_string(table[i].size()) + " entries, expected " +
                                                std::to_string(n));
      for (std::int64_t v : table[i]) {
        if (v < 0 || static_cast<std::size_t>(v) >= n)
          throw Error(ErrorCode::SchemaError, "multiplication table entry " + std::to_string(v) + " out of range");
        flat->push_back(v);
      }
    }
    auto at = [&](std::size_t a, std::size_t b) { return static_cast<std::size_t>((*flat)[a * n + b]); };

    std::optional<std::size_t> ident;
    for (std::size_t e = 0; e < n && !ident; ++e) {
      bool ok = true;
      for (std::size_t x = 0; x < n && ok; ++x) ok = at(e, x) == x && at(x, e) == x;
      if (ok) ident = e;
    }
    if (!ident) throw Error(ErrorCode::InvalidArgument, "multiplication table has no identity");

    auto inverse = std::make_shared<std::vector<std::int64_t>>(n, -1);
    for (std::size_t x = 0; x < n; ++x) {
      for (std::size_t y = 0; y < n; ++y)
        if (at(x, y) == *ident && at(y, x) == *ident) {
          (*inverse)[x] = static_cast<std::int64_t>(y);
          break;
        }
      if ((*inverse)[x] < 0) throw Error(ErrorCode::InvalidArgument, "element " + std::to_string(x) + " has no inverse");
    }

    auto assoc = [&](std::size_t a, std::size_t b, std::size_t c) { return at(at(a, b), c) == at(a, at(b, c)); };
    if (n * n * n <= 2'000'000) {
      for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
          for (std::size_t c = 0; c < n; ++c)
            if (!assoc(a, b, c)) throw Error(ErrorCode::InvalidArgument, "multiplication table is not associative");
    } else {
      std::mt19937_64 rng(seed);
      std::uniform_int_distribution<std::size_t> pick(0, n - 1);
      for (std::size_t k = 0; k < samples; ++k)
        if (!assoc(pick(rng), pick(rng), pick(rng)))
          throw Error(ErrorCode::InvalidArgument, "multiplication table is not associative");
    }

    GroupDescriptor g(GroupFamily::FiniteGroupTable, GroupKind::Group, 1);
    g.table_ = std::move(flat);
    g.table_inverse_ = std::move(inverse);
    g.order_ = n;
    g.identity_index_ = static_cast<std::int64_t>(*ident);
    for (std::size_t i = 0; i < n; ++i)
      g.generators_.push_back({"g" + std::to_string(i), Element{{static_cast<std::int64_t>(i), 0, 0, 0}}});
    return g;
  }

  GroupFamily family() const noexcept { return family_; }
  GroupKind kind() const noexcept { return kind_; }
  bool is_group() const noexcept { return kind_ == GroupKind::Group; }
  /// Number of meaningful coordinates.
  int arity() const noexcept { return arity_; }
  std::size_t order() const noexcept { return order_; }

  std::string name() const {
    switch (family_) {
      case GroupFamily::IntLattice: return "Z^" + std::to_string(arity_);
      case GroupFamily::NatLattice: return "N^" + std::to_string(arity_);
      case GroupFamily::Heisenberg3: return "heisenberg3";
      case GroupFamily::FiniteGroupTable: return "finite(" + std::to_string(order_) + ")";
    }
    return "?";
  }

  const std::vector<Generator>& generators() const noexcept { return generators_; }

  Element identity() const {
    Element e;
    if (family_ == GroupFamily::FiniteGroupTable) e.c[0] = identity_index_;
    return e;
  }

  bool in_domain(const Element& g) const {
    for (int i = arity_; i < 4; ++i)
      if (g.c[i] != 0) return false;
    switch (family_) {
      case GroupFamily::NatLattice:
        for (int i = 0; i < arity_; ++i)
          if (g.c[i] < 0) return false;
        return true;
      case GroupFamily::FiniteGroupTable:
        return g.c[0] >= 0 && static_cast<std::size_t>(g.c[0]) < order_;
      default:
        return true;
    }
  }

  void require_domain(const Element& g) const {
    if (!in_domain(g)) throw Error(ErrorCode::OutOfDomain, to_string(g) + " is not an element of " + name());
  }

  Element multiply(const Element& a, const Element& b) const {
    Element r;
    switch (family_) {
      case GroupFamily::IntLattice:
      case GroupFamily::NatLattice:
        for (int i = 0; i < arity_; ++i) r.c[i] = a.c[i] + b.c[i];
        return r;
      case GroupFamily::Heisenberg3:
        r.c[0] = a.c[0] + b.c[0];
        r.c[1] = a.c[1] + b.c[1];
        r.c[2] = a.c[2] + b.c[2] + a.c[0] * b.c[1];
        return r;
      case GroupFamily::FiniteGroupTable:
        r.c[0] = (*table_)[static_cast<std::size_t>(a.c[0]) * order_ + static_cast<std::size_t>(b.c[0])];
        return r;
    }
    return r;
  }

  Element inverse(const Element& a) const {
    if (!is_group()) throw Error(ErrorCode::NotApplicable, name() + " is a semigroup; no inverses");
    Element r;
    switch (family_) {
      case GroupFamily::IntLattice:
        for (int i = 0; i < arity_; ++i) r.c[i] = -a.c[i];
        return r;
      case GroupFamily::Heisenberg3:
        r.c[0] = -a.c[0];
        r.c[1] = -a.c[1];
        r.c[2] = -a.c[2] + a.c[0] * a.c[1];
        return r;
      case GroupFamily::FiniteGroupTable:
        r.c[0] = (*table_inverse_)[static_cast<std::size_t>(a.c[0])];
        return r;
      case GroupFamily::NatLattice:
        break;
    }
    return r;
  }

  /// g s^{-1} when it exists in the domain: the unique h with h s = g.
  std::optional<Element> right_divide(const Element& g, const Element& s) const {
    if (family_ == GroupFamily::NatLattice) {
      Element r;
      for (int i = 0; i < arity_; ++i) {
        r.c[i] = g.c[i] - s.c[i];
        if (r.c[i] < 0) return std::nullopt;
      }
      return r;
    }
    return multiply(g, inverse(s));
  }

  std::string to_string(const Element& g) const {
    std::string s = "(";
    for (int i = 0; i < arity_; ++i) {
      if (i) s += ",";
      s += std::to_string(g.c[i]);
    }
    return s + ")";
  }

  friend bool operator==(const GroupDescriptor& a, const GroupDescriptor& b) {
    if (a.family_ != b.family_ || a.arity_ != b.arity_) return false;
    if (a.family_ != GroupFamily::FiniteGroupTable) return true;
    return *a.table_ == *b.table_;
  }

 private:
  GroupDescriptor(GroupFamily family, GroupKind kind, int arity) : family_(family), kind_(kind), arity_(arity) {}

  static void check_lattice_dim(int d) {
    if (d < 1 || d > 4) throw Error(ErrorCode::InvalidArgument, "lattice dimension must be 1..4");
  }

  void add_unit_generators() {
    for (int i = 0; i < arity_; ++i) {
      Element e;
      e.c[i] = 1;
      generators_.push_back({"e" + std::to_string(i + 1), e});
    }
  }

  GroupFamily family_;
  GroupKind kind_;
  int arity_;
  std::vector<Generator> generators_;
  std::shared_ptr<const std::vector<std::int64_t>> table_;
  std::shared_ptr<const std::vector<std::int64_t>> table_inverse_;
  std::size_t order_ = 0;
  std::int64_t identity_index_ = 0;
};

/// Sampled associativity check on integer-coordinate elements in [-range, range].
inline bool associativity_spot_check(const GroupDescriptor& g, std::size_t samples, std::uint64_t seed,
                                     std::int64_t range = 50) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::int64_t> coord(g.kind() == GroupKind::Semigroup ? 0 : -range, range);
  std::uniform_int_distribution<std::int64_t> index(0, g.order() > 0 ? static_cast<std::int64_t>(g.order()) - 1 : 0);
  auto draw = [&] {
    Element e;
    if (g.family() == GroupFamily::FiniteGroupTable) {
      e.c[0] = index(rng);
    } else {
      for (int i = 0; i < g.arity(); ++i) e.c[i] = coord(rng);
    }
    return e;
  };
  for (std::size_t k = 0; k < samples; ++k) {
    Element a = draw(), b = draw(), c = draw();
    if (!(g.multiply(g.multiply(a, b), c) == g.multiply(a, g.multiply(b, c)))) return false;
  }
  return true;
}

/// A descriptor together with its built-in Følner sets:
///   Z^d:         boxes {-N..N}^d
///   heisenberg3: |a|,|b| <= N, |c| <= N^2, closed under inverses
///   finite:      the whole group for every N
///   N^d:         boxes {0..N-1}^d (right Følner for the semigroup)
class FolnerFamily {
 public:
  explicit FolnerFamily(GroupDescriptor descriptor, bool symmetrize = true)
      : descriptor_(std::move(descriptor)), symmetrize_(symmetrize) {}

  const GroupDescriptor& descriptor() const noexcept { return descriptor_; }
  bool symmetrized() const noexcept { return symmetrize_; }

  /// Upper bound on |F_N| computed without enumerating.
  double size_bound(std::int64_t n) const {
    double side = 2.0 * static_cast<double>(n) + 1.0;
    switch (descriptor_.family()) {
      case GroupFamily::IntLattice: return std::pow(side, descriptor_.arity());
      case GroupFamily::NatLattice: return std::pow(static_cast<double>(n), descriptor_.arity());
      case GroupFamily::Heisenberg3:
        return side * side * (2.0 * static_cast<double>(n) * static_cast<double>(n) + 1.0) * (symmetrize_ ? 2.0 : 1.0);
      case GroupFamily::FiniteGroupTable: return static_cast<double>(descriptor_.order());
    }
    return 0.0;
  }

  std::vector<Element> set_at(std::int64_t n) const {
    if (n < 1) throw Error(ErrorCode::InvalidArgument, "Følner index must be >= 1");
    if (size_bound(n) > static_cast<double>(kMaxSetSize))
      throw Error(ErrorCode::SetTooLarge, "F_" + std::to_string(n) + " of " + descriptor_.name() + " exceeds " +
                                              std::to_string(kMaxSetSize) + " elements");
    std::vector<Element> out;
    switch (descriptor_.family()) {
      case GroupFamily::IntLattice: box(out, -n, n); break;
      case GroupFamily::NatLattice: box(out, 0, n - 1); break;
      case GroupFamily::FiniteGroupTable:
        for (std::size_t i = 0; i < descriptor_.order(); ++i) out.push_back(Element{{static_cast<std::int64_t>(i), 0, 0, 0}});
        break;
      case GroupFamily::Heisenberg3: heisenberg(out, n); break;
    }
    return out;
  }

 private:
  void box(std::vector<Element>& out, std::int64_t lo, std::int64_t hi) const {
    const int d = descriptor_.arity();
    Element e;
    for (int i = 0; i < d; ++i) e.c[i] = lo;
    for (;;) {
      out.push_back(e);
      int i = d - 1;
      while (i >= 0 && e.c[i] == hi) {
        e.c[i] = lo;
        --i;
      }
      if (i < 0) break;
      ++e.c[i];
    }
  }

  void heisenberg(std::vector<Element>& out, std::int64_t n) const {
    const std::int64_t cmax = n * n;
    for (std::int64_t a = -n; a <= n; ++a)
      for (std::int64_t b = -n; b <= n; ++b)
        for (std::int64_t c = -cmax; c <= cmax; ++c) out.push_back(Element{{a, b, c, 0}});
    if (!symmetrize_) return;
    // Inverse of (a,b,c) is (-a,-b,ab-c); add the ones outside the box.
    const std::size_t raw = out.size();
    for (std::size_t k = 0; k < raw; ++k) {
      Element inv = descriptor_.inverse(out[k]);
      if (inv.c[2] < -cmax || inv.c[2] > cmax) out.push_back(inv);
    }
  }

  GroupDescriptor descriptor_;
  bool symmetrize_;
};

inline std::vector<Element> folner_set(const FolnerFamily& family, std::int64_t n) { return family.set_at(n); }

inline ElementSet to_set(const std::vector<Element>& v) { return ElementSet(v.begin(), v.end()); }

/// F·s in the order of F. Right translation is injective for every
/// supported descriptor (groups and the cancellative N^d).
inline std::vector<Element> right_translate(const GroupDescriptor& g, const std::vector<Element>& set, const Element& s) {
  std::vector<Element> out;
  out.reserve(set.size());
  for (const Element& f : set) out.push_back(g.multiply(f, s));
  return out;
}

/// Exact counts behind the Følner and strong Følner ratios of F and F·s.
struct TranslationCounts {
  std::size_t set_size = 0;         // |F|
  std::size_t translated_size = 0;  // |F s|
  std::size_t missing = 0;          // |F \ F s|
  std::size_t extra = 0;            // |F s \ F|

  std::size_t symmetric_difference() const noexcept { return missing + extra; }
};

inline TranslationCounts translation_counts(const GroupDescriptor& g, const std::vector<Element>& set,
                                            const ElementSet& lookup, const Element& s) {
  std::vector<Element> shifted = right_translate(g, set, s);
  ElementSet shifted_lookup(shifted.begin(), shifted.end());
  TranslationCounts c;
  c.set_size = set.size();
  c.translated_size = shifted.size();
  for (const Element& t : shifted)
    if (!lookup.count(t)) ++c.extra;
  for (const Element& f : set)
    if (!shifted_lookup.count(f)) ++c.missing;
  return c;
}

inline TranslationCounts translation_counts(const FolnerFamily& family, std::int64_t n, const Element& s) {
  family.descriptor().require_domain(s);
  std::vector<Element> set = family.set_at(n);
  return translation_counts(family.descriptor(), set, to_set(set), s);
}

/// |F_N s Δ F_N| / |F_N|
inline double folner_ratio(const FolnerFamily& family, std::int64_t n, const Element& s) {
  TranslationCounts c = translation_counts(family, n, s);
  return static_cast<double>(c.symmetric_difference()) / static_cast<double>(c.set_size);
}

struct SfcRatio {
  double strong = 0.0;  // |F \ F s| / |F|
  double weak = 0.0;    // |F s \ F| / |F|
  TranslationCounts counts;
};

inline SfcRatio sfc_ratio(const FolnerFamily& family, std::int64_t n, const Element& s) {
  TranslationCounts c = translation_counts(family, n, s);
  double size = static_cast<double>(c.set_size);
  return {static_cast<double>(c.missing) / size, static_cast<double>(c.extra) / size, c};
}

inline void require_group(const FolnerFamily& family) {
  if (!family.descriptor().is_group())
    throw Error(ErrorCode::NotApplicable, family.descriptor().name() + " is a semigroup");
}

/// F_N^{-1} = F_N
inline bool symmetry_check(const FolnerFamily& family, std::int64_t n) {
  require_group(family);
  std::vector<Element> set = family.set_at(n);
  ElementSet lookup = to_set(set);
  for (const Element& f : set)
    if (!lookup.count(family.descriptor().inverse(f))) return false;
  return true;
}

struct DoublingResult {
  bool subset_ok = false;  // F_N F_N^{-1} ⊆ F_{pN}
  double ratio = 0.0;      // |F_{pN}| / |F_N|
};

inline DoublingResult doubling_check(const FolnerFamily& family, std::int64_t n, std::int64_t p) {
  require_group(family);
  if (p < 1) throw Error(ErrorCode::InvalidArgument, "p must be positive");
  const GroupDescriptor& g = family.descriptor();
  std::vector<Element> set = family.set_at(n);
  std::vector<Element> big = family.set_at(p * n);
  if (static_cast<double>(set.size()) * static_cast<double>(set.size()) > 1e9)
    throw Error(ErrorCode::SetTooLarge, "product set F_N F_N^{-1} too large to enumerate");
  ElementSet big_lookup = to_set(big);
  std::vector<Element> inverses;
  inverses.reserve(set.size());
  for (const Element& f : set) inverses.push_back(g.inverse(f));
  DoublingResult r;
  r.subset_ok = true;
  for (const Element& a : set) {
    for (const Element& b : inverses)
      if (!big_lookup.count(g.multiply(a, b))) {
        r.subset_ok = false;
        break;
      }
    if (!r.subset_ok) break;
  }
  r.ratio = static_cast<double>(big.size()) / static_cast<double>(set.size());
  return r;
}

/// |F_N^{-1} F_N| / |F_N|
inline double tempelman_ratio(const FolnerFamily& family, std::int64_t n) {
  require_group(family);
  const GroupDescriptor& g = family.descriptor();
  std::vector<Element> set = family.set_at(n);
  if (static_cast<double>(set.size()) * static_cast<double>(set.size()) > 1e9)
    throw Error(ErrorCode::SetTooLarge, "product set F_N^{-1} F_N too large to enumerate");
  ElementSet product;
  for (const Element& a : set) {
    Element ai = g.inverse(a);
    for (const Element& b : set) {
      product.insert(g.multiply(ai, b));
      if (product.size() > kMaxSetSize) throw Error(ErrorCode::SetTooLarge, "product set exceeds the size cap");
    }
  }
  return static_cast<double>(product.size()) / static_cast<double>(set.size());
}

/// Parse "Z^d", "N^d", "heisenberg3"; "finite:<file>" is handled by the io layer.
inline std::optional<GroupDescriptor> parse_builtin_group(std::string_view name) {
  auto lattice = [&](std::string_view prefix) -> std::optional<int> {
    if (name.size() != prefix.size() + 1 || name.substr(0, prefix.size()) != prefix) return std::nullopt;
    char d = name.back();
    if (d < '1' || d > '4') return std::nullopt;
    return d - '0';
  };
  if (auto d = lattice("Z^")) return GroupDescriptor::int_lattice(*d);
  if (auto d = lattice("N^")) return GroupDescriptor::nat_lattice(*d);
  if (name == "heisenberg3") return GroupDescriptor::heisenberg3();
  return std::nullopt;
}

}  // namespace isometrize

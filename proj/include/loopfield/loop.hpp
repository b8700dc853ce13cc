#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace lf {

/** Lattice directions in units of epsilon. */
enum Dir : std::uint8_t { R = 0, U = 1, L = 2, D = 3 };

struct Point {
  int x = 0, y = 0;
  auto operator<=>(const Point&) const = default;
};

struct Bond {
  int x = 0, y = 0;
  Dir dir = R;

  Point base() const { return {x, y}; }
  Point end() const;
  Bond inverse() const;
  bool positive() const { return dir == R || dir == U; }
  /** The positively oriented representative of {b, b^-1}. */
  Bond unoriented() const { return positive() ? *this : inverse(); }

  auto operator<=>(const Bond&) const = default;
};

char dir_char(Dir d);
Dir dir_from_char(char c);

using Word = std::vector<Bond>;

struct LoopError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/** Closed backtrack-free cyclic word in canonical rotation; empty word is the trivial loop. */
class Loop {
 public:
  Loop() = default;

  const Word& word() const { return w_; }
  size_t size() const { return w_.size(); }
  bool trivial() const { return w_.empty(); }
  const Bond& operator[](size_t i) const { return w_[i]; }

  /** Bond at location x read cyclically starting from x. */
  Word rotated(size_t x) const;
  Loop inverse() const;
  std::string str() const;

  bool operator==(const Loop& o) const { return w_ == o.w_; }
  bool operator<(const Loop& o) const { return w_ < o.w_; }

  friend Loop make_loop(const Word& raw);
  friend Loop make_loop_or_trivial(const Word& raw);
  friend Loop canonical_from_clean(const Word& w, size_t* shift);

 private:
  Word w_;
};

/** Erase backtracking to fixpoint, then rotate to the lexicographically minimal form. */
Loop make_loop(const Word& raw);
Loop make_loop_or_trivial(const Word& raw);
Loop parse_loop(const std::string& text);
Word moves_word(Point start, const std::string& moves);

bool is_closed_adjacent(const Word& w);
/** Canonical rotation of an already clean word; *shift receives the rotation offset. */
Loop canonical_from_clean(const Word& w, size_t* shift);

struct LoopString {
  std::vector<Loop> loops;

  std::string str() const;
  bool operator==(const LoopString& o) const { return loops == o.loops; }
  bool operator<(const LoopString& o) const { return loops < o.loops; }
};

LoopString parse_string(const std::string& text);

Loop plaquette(int x, int y);
/** Plaquettes whose word contains b: ccw cell on the left of b and cw cell on its right. */
std::array<Loop, 2> plaquettes_through(const Bond& b);

/** Location sanity: throws LoopError unless l[x] == b. */
void check_location(const Loop& l, const Bond& b, size_t x);

LoopString split_positive(const Loop& l, const Bond& e, size_t x, size_t y);
LoopString split_negative(const Loop& l, const Bond& e, size_t x, size_t y);
Loop merge_positive(const Loop& l, const Loop& lp, const Bond& e, size_t x, size_t y);
Loop merge_negative(const Loop& l, const Loop& lp, const Bond& e, size_t x, size_t y);
Loop twist_positive(const Loop& l, const Bond& e, size_t x, size_t y);
Loop twist_negative(const Loop& l, const Bond& e, size_t x, size_t y);

struct DeformationSets {
  std::vector<Loop> minus, plus;
};
DeformationSets deformation_sets(const Loop& l, const Bond& e, size_t x);

struct ExpansionSets {
  std::vector<LoopString> plus, minus;
};
ExpansionSets expansion_sets(const Loop& l, const Bond& e, size_t x);

/** Named edge spans of an annotated crossing loop; each span lists word locations in order. */
struct EdgeAnnotation {
  std::vector<size_t> e, e_bar, e1, e2, e3inv, e4inv;
};

struct Triple {
  int type = 1;  // 1: (e, e1, e3^-1); 2: (e_bar, e2, e4^-1)
  size_t x = 0, x1 = 0, x2 = 0;
  Bond b, b1, b2;
};

std::vector<Triple> compatible_triples(const Loop& l, const EdgeAnnotation& ann);

/** Locations where l carries exactly b. */
std::vector<size_t> occurrences(const Loop& l, const Bond& b);

/** Replace component i of s by the given loops; trivial loops are dropped (W = 1). */
LoopString replace_component(const LoopString& s, size_t i, const std::vector<Loop>& with);

}  // namespace lf

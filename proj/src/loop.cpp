#include "loopfield/loop.hpp"

#include <regex>
#include <sstream>

namespace lf {

Point Bond::end() const {
  switch (dir) {
    case R: return {x + 1, y};
    case U: return {x, y + 1};
    case L: return {x - 1, y};
    case D: return {x, y - 1};
  }
  return {x, y};
}

Bond Bond::inverse() const {
  Point p = end();
  return {p.x, p.y, Dir((dir + 2) % 4)};
}

char dir_char(Dir d) { return "RULD"[d]; }

Dir dir_from_char(char c) {
  switch (c) {
    case 'R': return R;
    case 'U': return U;
    case 'L': return L;
    case 'D': return D;
  }
  throw LoopError(std::string("bad move character: ") + c);
}

bool is_closed_adjacent(const Word& w) {
  for (size_t i = 0; i < w.size(); ++i)
    if (w[i].end() != w[(i + 1) % w.size()].base()) return false;
  return !w.empty();
}

namespace {

Word erase_backtracking(const Word& raw) {
  Word st;
  st.reserve(raw.size());
  for (const Bond& b : raw) {
    if (!st.empty() && st.back() == b.inverse())
      st.pop_back();
    else
      st.push_back(b);
  }
  size_t lo = 0, hi = st.size();
  while (hi - lo >= 2 && st[lo] == st[hi - 1].inverse()) {
    ++lo;
    --hi;
  }
  return Word(st.begin() + lo, st.begin() + hi);
}

size_t least_rotation(const Word& s) {
  const size_t n = s.size();
  size_t i = 0, j = 1, k = 0;
  while (i < n && j < n && k < n) {
    const Bond& a = s[(i + k) % n];
    const Bond& b = s[(j + k) % n];
    if (a == b) {
      ++k;
      continue;
    }
    if (b < a)
      i += k + 1;
    else
      j += k + 1;
    if (i == j) ++j;
    k = 0;
  }
  return std::min(i, j);
}

Word concat(std::initializer_list<Word> parts) {
  Word out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

Word invert(const Word& w) {
  Word out;
  out.reserve(w.size());
  for (auto it = w.rbegin(); it != w.rend(); ++it) out.push_back(it->inverse());
  return out;
}

Word slice(const Word& w, size_t from, size_t to) { return Word(w.begin() + from, w.begin() + to); }

/** Rotation of l to start at x, with the index of y in the rotated word. */
std::pair<Word, size_t> rotate_pair(const Loop& l, size_t x, size_t y) {
  if (x == y) throw LoopError("locations must differ");
  return {l.rotated(x), (y + l.size() - x) % l.size()};
}

}  // namespace

Loop canonical_from_clean(const Word& w, size_t* shift) {
  Loop l;
  size_t r = w.empty() ? 0 : least_rotation(w);
  l.w_.reserve(w.size());
  for (size_t i = 0; i < w.size(); ++i) l.w_.push_back(w[(i + r) % w.size()]);
  if (shift) *shift = r;
  return l;
}

Loop make_loop_or_trivial(const Word& raw) {
  if (raw.empty()) return Loop();
  if (!is_closed_adjacent(raw)) throw LoopError("word is not closed or not adjacent");
  return canonical_from_clean(erase_backtracking(raw), nullptr);
}

Loop make_loop(const Word& raw) {
  if (raw.empty()) throw LoopError("empty word");
  Loop l = make_loop_or_trivial(raw);
  if (l.trivial()) throw LoopError("erases to empty");
  return l;
}

Word Loop::rotated(size_t x) const {
  if (x >= w_.size()) throw LoopError("location out of range");
  Word out;
  out.reserve(w_.size());
  for (size_t i = 0; i < w_.size(); ++i) out.push_back(w_[(x + i) % w_.size()]);
  return out;
}

Loop Loop::inverse() const { return canonical_from_clean(invert(w_), nullptr); }

std::string Loop::str() const {
  if (w_.empty()) return "()";
  std::ostringstream os;
  os << "(" << w_[0].x << "," << w_[0].y << "):";
  for (const Bond& b : w_) os << dir_char(b.dir);
  return os.str();
}

Word moves_word(Point start, const std::string& moves) {
  Word w;
  Point p = start;
  for (char c : moves) {
    Bond b{p.x, p.y, dir_from_char(c)};
    w.push_back(b);
    p = b.end();
  }
  return w;
}

Loop parse_loop(const std::string& text) {
  static const std::regex re(R"(^\s*\(\s*(-?[0-9]+)\s*,\s*(-?[0-9]+)\s*\)\s*:\s*([RULD]*)\s*$)");
  if (text == "()") return Loop();
  std::smatch m;
  if (!std::regex_match(text, m, re)) throw LoopError("bad loop text: " + text);
  return make_loop(moves_word({std::stoi(m[1]), std::stoi(m[2])}, m[3]));
}

std::string LoopString::str() const {
  std::string out;
  for (size_t i = 0; i < loops.size(); ++i) {
    if (i) out += ";";
    out += loops[i].str();
  }
  return out;
}

LoopString parse_string(const std::string& text) {
  LoopString s;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ';'))
    if (!part.empty()) s.loops.push_back(parse_loop(part));
  return s;
}

Loop plaquette(int x, int y) { return make_loop(moves_word({x, y}, "RULD")); }

std::array<Loop, 2> plaquettes_through(const Bond& b) {
  Point left, right;
  switch (b.dir) {
    case R: left = {b.x, b.y}; right = {b.x, b.y - 1}; break;
    case U: left = {b.x - 1, b.y}; right = {b.x, b.y}; break;
    case L: left = {b.x - 1, b.y - 1}; right = {b.x - 1, b.y}; break;
    case D: left = {b.x, b.y - 1}; right = {b.x - 1, b.y - 1}; break;
  }
  return {plaquette(left.x, left.y), plaquette(right.x, right.y).inverse()};
}

void check_location(const Loop& l, const Bond& b, size_t x) {
  if (x >= l.size() || !(l[x] == b)) throw LoopError("bond/location mismatch");
}

std::vector<size_t> occurrences(const Loop& l, const Bond& b) {
  std::vector<size_t> out;
  for (size_t i = 0; i < l.size(); ++i)
    if (l[i] == b) out.push_back(i);
  return out;
}

LoopString split_positive(const Loop& l, const Bond& e, size_t x, size_t y) {
  check_location(l, e, x);
  check_location(l, e, y);
  auto [w, j] = rotate_pair(l, x, y);
  Word b = slice(w, 1, j), c = slice(w, j + 1, w.size());
  return {{make_loop_or_trivial(concat({{e}, c})), make_loop_or_trivial(concat({b, {e}}))}};
}

LoopString split_negative(const Loop& l, const Bond& e, size_t x, size_t y) {
  check_location(l, e, x);
  check_location(l, e.inverse(), y);
  auto [w, j] = rotate_pair(l, x, y);
  Word b = slice(w, 1, j), c = slice(w, j + 1, w.size());
  return {{make_loop_or_trivial(c), make_loop_or_trivial(b)}};
}

Loop merge_positive(const Loop& l, const Loop& lp, const Bond& e, size_t x, size_t y) {
  check_location(l, e, x);
  Word w = l.rotated(x);
  Word b = slice(w, 1, w.size());
  if (y < lp.size() && lp[y] == e) {
    Word v = lp.rotated(y);
    Word d = slice(v, 1, v.size());
    return make_loop_or_trivial(concat({{e}, d, {e}, b}));
  }
  check_location(lp, e.inverse(), y);
  Word v = lp.rotated(y);
  Word d = slice(v, 1, v.size());
  return make_loop_or_trivial(concat({{e}, invert(d), {e}, b}));
}

Loop merge_negative(const Loop& l, const Loop& lp, const Bond& e, size_t x, size_t y) {
  check_location(l, e, x);
  Word w = l.rotated(x);
  Word b = slice(w, 1, w.size());
  if (y < lp.size() && lp[y] == e) {
    Word v = lp.rotated(y);
    Word d = slice(v, 1, v.size());
    return make_loop_or_trivial(concat({invert(d), b}));
  }
  check_location(lp, e.inverse(), y);
  Word v = lp.rotated(y);
  Word d = slice(v, 1, v.size());
  return make_loop_or_trivial(concat({d, b}));
}

Loop twist_negative(const Loop& l, const Bond& e, size_t x, size_t y) {
  check_location(l, e, x);
  check_location(l, e, y);
  auto [w, j] = rotate_pair(l, x, y);
  Word b = slice(w, 1, j), c = slice(w, j + 1, w.size());
  return make_loop_or_trivial(concat({invert(b), c}));
}

Loop twist_positive(const Loop& l, const Bond& e, size_t x, size_t y) {
  check_location(l, e, x);
  check_location(l, e.inverse(), y);
  auto [w, j] = rotate_pair(l, x, y);
  Word b = slice(w, 1, j), c = slice(w, j + 1, w.size());
  return make_loop_or_trivial(concat({{e}, invert(b), {e.inverse()}, c}));
}

DeformationSets deformation_sets(const Loop& l, const Bond& e, size_t x) {
  check_location(l, e, x);
  DeformationSets out;
  for (const Loop& p : plaquettes_through(e)) out.minus.push_back(merge_negative(l, p, e, x, occurrences(p, e).at(0)));
  for (const Loop& p : plaquettes_through(e.inverse()))
    out.plus.push_back(merge_positive(l, p, e, x, occurrences(p, e.inverse()).at(0)));
  return out;
}

ExpansionSets expansion_sets(const Loop& l, const Bond& e, size_t x) {
  check_location(l, e, x);
  ExpansionSets out;
  for (const Loop& p : plaquettes_through(e.inverse())) out.plus.push_back({{l, p}});
  for (const Loop& p : plaquettes_through(e)) out.minus.push_back({{l, p}});
  return out;
}

std::vector<Triple> compatible_triples(const Loop& l, const EdgeAnnotation& a) {
  if (a.e.empty() || a.e1.empty() || a.e3inv.empty() || a.e_bar.empty() || a.e2.empty() || a.e4inv.empty())
    throw LoopError("edge annotation missing");
  std::vector<Triple> out;
  auto add = [&](int type, const std::vector<size_t>& s0, const std::vector<size_t>& s1,
                 const std::vector<size_t>& s2) {
    for (size_t x : s0)
      for (size_t x1 : s1)
        for (size_t x2 : s2) out.push_back({type, x, x1, x2, l[x], l[x1], l[x2]});
  };
  add(1, a.e, a.e1, a.e3inv);
  add(2, a.e_bar, a.e2, a.e4inv);
  return out;
}

LoopString replace_component(const LoopString& s, size_t i, const std::vector<Loop>& with) {
  LoopString out;
  for (size_t k = 0; k < s.loops.size(); ++k) {
    if (k == i) {
      for (const Loop& l : with)
        if (!l.trivial()) out.loops.push_back(l);
    } else if (!s.loops[k].trivial()) {
      out.loops.push_back(s.loops[k]);
    }
  }
  return out;
}

}  // namespace lf

#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace qdc {

/// Bond colors. Bonds of one color are pairwise disjoint.
namespace color {
inline constexpr int vertical_even = 0;    // chain bonds (i, i+1), i even
inline constexpr int vertical_odd = 1;     // chain bonds (i, i+1), i odd
inline constexpr int horizontal_even = 2;  // strip bonds between columns x, x+1 with x even
inline constexpr int horizontal_odd = 3;   // x odd (also the periodic wrap when lx is even)
inline constexpr int wrap = 4;             // periodic wrap when lx is odd
inline constexpr int next_nearest = 5;
inline constexpr int onsite = 6;
inline constexpr int count = 7;
}  // namespace color

struct LatticeBond {
  std::size_t first;   // chain index of the physically lower site
  std::size_t second;  // chain index of the other site
  int color;

  std::size_t lo() const { return first < second ? first : second; }
  std::size_t hi() const { return first < second ? second : first; }
  bool flipped() const { return first > second; }
  std::size_t distance() const { return hi() - lo(); }
};

/// Open chain, or an lx-by-ly strip (optionally periodic in x) flattened by snake
/// ordering: columns are traversed alternately up and down. A chain of n sites is
/// the single column lx = 1, ly = n.
class Lattice {
 public:
  static Lattice chain(std::size_t n);
  static Lattice strip(std::size_t lx, std::size_t ly, bool periodic_x);

  bool is_chain() const { return chain_; }
  std::size_t lx() const { return lx_; }
  std::size_t ly() const { return ly_; }
  bool periodic_x() const { return periodic_; }
  bool has_wrap() const { return periodic_ && lx_ > 2; }
  std::size_t size() const { return lx_ * ly_; }

  std::size_t site(std::size_t x, std::size_t y) const;
  std::pair<std::size_t, std::size_t> coords(std::size_t site) const;

  // Nearest-neighbour bonds in color order, then by lower chain index.
  std::vector<LatticeBond> nearest_bonds() const;
  // Next-nearest pairs: (i, i+2) on a chain, diagonal neighbours on a strip.
  std::vector<LatticeBond> next_nearest_bonds() const;
  // Colors present among nearest bonds, ascending.
  std::vector<int> nearest_colors() const;

  std::string describe() const;
  bool operator==(const Lattice& o) const = default;

 private:
  bool chain_ = true;
  std::size_t lx_ = 1;
  std::size_t ly_ = 0;
  bool periodic_ = false;
};

}  // namespace qdc

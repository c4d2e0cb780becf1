#include "qdc/lattice.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace qdc {

Lattice Lattice::chain(std::size_t n) {
  if (n < 2) throw std::invalid_argument("Lattice::chain: need at least 2 sites");
  Lattice l;
  l.chain_ = true;
  l.lx_ = 1;
  l.ly_ = n;
  return l;
}

Lattice Lattice::strip(std::size_t lx, std::size_t ly, bool periodic_x) {
  if (lx < 1 || ly < 1 || lx * ly < 2) throw std::invalid_argument("Lattice::strip: need at least 2 sites");
  Lattice l;
  l.chain_ = false;
  l.lx_ = lx;
  l.ly_ = ly;
  l.periodic_ = periodic_x;
  return l;
}

std::size_t Lattice::site(std::size_t x, std::size_t y) const {
  if (x >= lx_ || y >= ly_) throw std::out_of_range("Lattice::site: coordinates out of range");
  return x * ly_ + (x % 2 == 0 ? y : ly_ - 1 - y);
}

std::pair<std::size_t, std::size_t> Lattice::coords(std::size_t s) const {
  if (s >= size()) throw std::out_of_range("Lattice::coords: site out of range");
  const std::size_t x = s / ly_;
  const std::size_t r = s % ly_;
  return {x, x % 2 == 0 ? r : ly_ - 1 - r};
}

std::vector<LatticeBond> Lattice::nearest_bonds() const {
  std::vector<LatticeBond> out;
  for (std::size_t x = 0; x < lx_; ++x)
    for (std::size_t y = 0; y + 1 < ly_; ++y)
      out.push_back({site(x, y), site(x, y + 1), y % 2 == 0 ? color::vertical_even : color::vertical_odd});
  for (std::size_t x = 0; x + 1 < lx_; ++x)
    for (std::size_t y = 0; y < ly_; ++y)
      out.push_back({site(x, y), site(x + 1, y), x % 2 == 0 ? color::horizontal_even : color::horizontal_odd});
  if (has_wrap())
    for (std::size_t y = 0; y < ly_; ++y)
      out.push_back({site(lx_ - 1, y), site(0, y), lx_ % 2 == 0 ? color::horizontal_odd : color::wrap});
  std::stable_sort(out.begin(), out.end(), [](const LatticeBond& a, const LatticeBond& b) {
    return a.color != b.color ? a.color < b.color : a.lo() < b.lo();
  });
  return out;
}

std::vector<LatticeBond> Lattice::next_nearest_bonds() const {
  std::vector<LatticeBond> out;
  if (chain_) {
    for (std::size_t i = 0; i + 2 < ly_; ++i) out.push_back({i, i + 2, color::next_nearest});
    return out;
  }
  std::set<std::pair<std::size_t, std::size_t>> seen;
  auto add = [&](std::size_t a, std::size_t b) {
    const auto key = std::minmax(a, b);
    if (a != b && seen.insert(key).second) out.push_back({a, b, color::next_nearest});
  };
  const std::size_t columns = has_wrap() ? lx_ : lx_ - 1;
  for (std::size_t x = 0; x < columns; ++x) {
    const std::size_t xn = (x + 1) % lx_;
    for (std::size_t y = 0; y < ly_; ++y) {
      if (y + 1 < ly_) add(site(x, y), site(xn, y + 1));
      if (y > 0) add(site(x, y), site(xn, y - 1));
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const LatticeBond& a, const LatticeBond& b) {
    return a.lo() != b.lo() ? a.lo() < b.lo() : a.hi() < b.hi();
  });
  return out;
}

std::vector<int> Lattice::nearest_colors() const {
  std::set<int> colors;
  for (const auto& b : nearest_bonds()) colors.insert(b.color);
  return {colors.begin(), colors.end()};
}

std::string Lattice::describe() const {
  if (chain_) return "chain(" + std::to_string(ly_) + ")";
  return "strip(" + std::to_string(lx_) + "x" + std::to_string(ly_) + (periodic_ ? ", periodic-x" : ", open") + ")";
}

}  // namespace qdc

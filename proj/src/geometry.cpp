#include "kcel/geometry.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "kcel/errors.hpp"

namespace kcel {
namespace {

class Fnv1a {
 public:
  void add_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      state_ ^= p[i];
      state_ *= 0x100000001b3ULL;
    }
  }
  void add_u64(std::uint64_t x) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(x >> (8 * i));
    add_bytes(b, 8);
  }
  void add_double(double x) { add_u64(std::bit_cast<std::uint64_t>(x)); }
  std::uint64_t value() const { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::uint64_t geometry_digest(const DomainSpec& d, const std::vector<Cell>& cells) {
  Fnv1a h;
  h.add_bytes("KCELPART", 8);
  h.add_double(d.energy_cap);
  h.add_u64(static_cast<std::uint64_t>(d.n_per_axis));
  h.add_double(d.half_width);
  h.add_u64(cells.size());
  for (const auto& c : cells)
    for (int i = 0; i < 3; ++i) {
      h.add_double(c.lower[i]);
      h.add_double(c.upper[i]);
    }
  return h.value();
}

std::string hex16(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

DomainSpec DomainSpec::uniform(double energy_cap, int n_per_axis) {
  if (!(energy_cap > 0.0) || !std::isfinite(energy_cap))
    throw InvalidArgument("energy_cap must be a finite value > 0");
  if (n_per_axis < 1) throw InvalidArgument("n_per_axis must be >= 1");
  return DomainSpec{energy_cap, n_per_axis, std::sqrt(energy_cap)};
}

double Cell::volume() const {
  const Vec3 e = extent();
  return e[0] * e[1] * e[2];
}

Vec3 Cell::center() const { return 0.5 * (lower + upper); }

bool Cell::contains(const Vec3& xi) const {
  for (int i = 0; i < 3; ++i)
    if (!(xi[i] >= lower[i] && xi[i] < upper[i])) return false;
  return true;
}

Partition::Partition(DomainSpec domain, std::vector<Cell> cells)
    : domain_(domain), cells_(std::move(cells)) {
  lower_ = cells_.front().lower;
  upper_ = cells_.front().upper;
  for (const auto& c : cells_)
    for (int i = 0; i < 3; ++i) {
      lower_[i] = std::min(lower_[i], c.lower[i]);
      upper_[i] = std::max(upper_[i], c.upper[i]);
    }
  hash_ = geometry_digest(domain_, cells_);
}

Partition build_uniform_partition(const DomainSpec& spec) {
  const DomainSpec d = DomainSpec::uniform(spec.energy_cap, spec.n_per_axis);
  const int n = d.n_per_axis;
  const double h = d.half_width;
  const double step = 2.0 * h / n;
  std::vector<double> faces(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) faces[static_cast<std::size_t>(i)] = -h + i * step;
  faces.front() = -h;
  faces.back() = h;

  std::vector<Cell> cells;
  cells.reserve(static_cast<std::size_t>(n) * n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        Cell c;
        c.index = static_cast<int>(cells.size());
        const int ijk[3] = {i, j, k};
        for (int a = 0; a < 3; ++a) {
          c.lower[a] = faces[static_cast<std::size_t>(ijk[a])];
          c.upper[a] = faces[static_cast<std::size_t>(ijk[a]) + 1];
        }
        cells.push_back(c);
      }
  return Partition(d, std::move(cells));
}

Partition Partition::from_boxes(double energy_cap, const std::vector<std::pair<Vec3, Vec3>>& boxes) {
  if (!(energy_cap > 0.0) || !std::isfinite(energy_cap))
    throw InvalidArgument("energy_cap must be a finite value > 0");
  if (boxes.empty()) throw InvalidArgument("partition needs at least one cell");
  std::vector<Cell> cells;
  for (const auto& [lo, hi] : boxes) {
    for (int i = 0; i < 3; ++i)
      if (!(lo[i] < hi[i]))
        throw InvalidArgument("cell " + std::to_string(cells.size()) + " has non-positive extent");
    cells.push_back(Cell{static_cast<int>(cells.size()), lo, hi});
  }
  for (std::size_t a = 0; a < cells.size(); ++a)
    for (std::size_t b = a + 1; b < cells.size(); ++b) {
      bool overlap = true;
      for (int i = 0; i < 3; ++i)
        overlap = overlap && cells[a].lower[i] < cells[b].upper[i] && cells[b].lower[i] < cells[a].upper[i];
      if (overlap)
        throw InvalidArgument("cells " + std::to_string(a) + " and " + std::to_string(b) + " overlap");
    }
  DomainSpec d{energy_cap, 0, 0.0};
  Partition p(d, std::move(cells));
  double total = 0.0;
  for (const auto& c : p.cells_) total += c.volume();
  const Vec3 span = p.upper_ - p.lower_;
  const double box_volume = span[0] * span[1] * span[2];
  if (std::abs(total - box_volume) > 1e-12 * box_volume)
    throw InvalidArgument("cells do not tile their bounding box");
  const double r = std::sqrt(energy_cap);
  for (int i = 0; i < 3; ++i)
    if (p.lower_[i] > -r || p.upper_[i] < r)
      throw InvalidArgument("cells do not cover the ball |xi|^2 <= energy_cap");
  p.domain_.half_width = std::max({-p.lower_[0], -p.lower_[1], -p.lower_[2], p.upper_[0], p.upper_[1], p.upper_[2]});
  p.hash_ = geometry_digest(p.domain_, p.cells_);
  return p;
}

std::string Partition::content_hash() const { return hex16(hash_); }

std::optional<int> Partition::locate(const Vec3& xi) const {
  for (int i = 0; i < 3; ++i)
    if (!(xi[i] >= lower_[i] && xi[i] <= upper_[i])) return std::nullopt;

  auto owns = [&](const Cell& c) {
    for (int i = 0; i < 3; ++i) {
      if (xi[i] < c.lower[i]) return false;
      if (xi[i] >= c.upper[i] && !(c.upper[i] == upper_[i] && xi[i] == upper_[i])) return false;
    }
    return true;
  };

  if (is_uniform()) {
    const int n = domain_.n_per_axis;
    const double step = 2.0 * domain_.half_width / n;
    int idx[3];
    for (int i = 0; i < 3; ++i) {
      int k = static_cast<int>(std::floor((xi[i] - lower_[i]) / step));
      idx[i] = std::clamp(k, 0, n - 1);
    }
    // Floor can land one cell off near a face; probe the neighbours.
    for (int di = -1; di <= 1; ++di)
      for (int dj = -1; dj <= 1; ++dj)
        for (int dk = -1; dk <= 1; ++dk) {
          const int a = idx[0] + di, b = idx[1] + dj, c = idx[2] + dk;
          if (a < 0 || b < 0 || c < 0 || a >= n || b >= n || c >= n) continue;
          const int alpha = (a * n + b) * n + c;
          if (owns(cells_[static_cast<std::size_t>(alpha)])) return alpha;
        }
    return std::nullopt;
  }
  for (const auto& c : cells_)
    if (owns(c)) return c.index;
  return std::nullopt;
}

int Partition::locate_clamped(const Vec3& xi) const {
  Vec3 q = xi;
  for (int i = 0; i < 3; ++i) q[i] = std::clamp(q[i], lower_[i], upper_[i]);
  if (auto a = locate(q)) return *a;
  throw InvalidArgument("point could not be located after clamping into the domain");
}

std::string Partition::to_text() const {
  std::ostringstream os;
  os << "energy_cap = " << fmt_double(domain_.energy_cap) << '\n';
  os << "n_per_axis = " << domain_.n_per_axis << '\n';
  os << "half_width = " << fmt_double(domain_.half_width) << '\n';
  os << "cell_count = " << cells_.size() << '\n';
  for (const auto& c : cells_) {
    os << "cell " << c.index << " =";
    for (int i = 0; i < 3; ++i) os << ' ' << fmt_double(c.lower[i]);
    for (int i = 0; i < 3; ++i) os << ' ' << fmt_double(c.upper[i]);
    os << '\n';
  }
  os << "content_hash = " << content_hash() << '\n';
  return os.str();
}

Partition Partition::from_text(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  DomainSpec d;
  std::size_t count = 0;
  bool have_count = false;
  std::string stored_hash;
  std::vector<Cell> cells;

  auto value_of = [](const std::string& l) {
    const auto eq = l.find('=');
    if (eq == std::string::npos) throw CorruptFile("partition block: missing '=' in line '" + l + "'");
    return l.substr(eq + 1);
  };
  auto key_of = [](const std::string& l) {
    std::istringstream ks(l);
    std::string k;
    ks >> k;
    return k;
  };

  try {
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      const std::string key = key_of(line);
      const std::string val = value_of(line);
      if (key == "energy_cap") {
        d.energy_cap = std::stod(val);
      } else if (key == "n_per_axis") {
        d.n_per_axis = std::stoi(val);
      } else if (key == "half_width") {
        d.half_width = std::stod(val);
      } else if (key == "cell_count") {
        count = std::stoull(val);
        have_count = true;
      } else if (key == "cell") {
        std::istringstream vs(val);
        Cell c;
        c.index = static_cast<int>(cells.size());
        for (int i = 0; i < 3; ++i) vs >> c.lower[i];
        for (int i = 0; i < 3; ++i) vs >> c.upper[i];
        if (!vs) throw CorruptFile("partition block: malformed cell line '" + line + "'");
        cells.push_back(c);
      } else if (key == "content_hash") {
        std::istringstream vs(val);
        vs >> stored_hash;
      } else {
        throw CorruptFile("partition block: unknown key '" + key + "'");
      }
    }
  } catch (const std::logic_error&) {
    throw CorruptFile("partition block: unparsable number in line '" + line + "'");
  }
  if (!have_count || cells.size() != count || cells.empty())
    throw CorruptFile("partition block: cell_count does not match cell lines");
  if (stored_hash.empty()) throw CorruptFile("partition block: missing content_hash");

  Partition p(d, std::move(cells));
  if (p.content_hash() != stored_hash)
    throw HashMismatch("partition content_hash: stored " + stored_hash + ", geometry gives " + p.content_hash());
  return p;
}

double interval_power_integral(double lo, double hi, int p) {
  double a = lo, b = hi;
  for (int i = 0; i < p; ++i) {
    a *= lo;
    b *= hi;
  }
  return (b - a) / (p + 1);
}

double box_monomial_moment(const Cell& c, int p, int q, int r) {
  if (p < 0 || q < 0 || r < 0) throw InvalidArgument("monomial exponents must be nonnegative");
  return interval_power_integral(c.lower[0], c.upper[0], p) * interval_power_integral(c.lower[1], c.upper[1], q) *
         interval_power_integral(c.lower[2], c.upper[2], r);
}

}  // namespace kcel

#include "kcel/cache.hpp"

#include <bit>
#include <charconv>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include "kcel/errors.hpp"

namespace kcel {

namespace {

constexpr char kMagic[5] = {'K', 'C', 'E', 'L', '1'};

std::string fmt(double x) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, r.ptr);
}

std::uint64_t fnv1a(const unsigned char* data, std::size_t n, std::uint64_t h = 1469598103934665603ULL) {
  for (std::size_t i = 0; i < n; ++i) {
    h ^= data[i];
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex16(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << v;
  return os.str();
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffU));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffU));
}

void put_f64(std::string& out, double x) { put_u64(out, std::bit_cast<std::uint64_t>(x)); }

void put_block(std::string& out, const std::string& text) {
  put_u64(out, text.size());
  out += text;
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : b_(bytes) {}

  void need(std::size_t n, const char* what) const {
    if (b_.size() - pos_ < n) throw CorruptFile(std::string("cache truncated while reading ") + what);
  }
  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b_[pos_ + static_cast<std::size_t>(i)])) << (8 * i);
    pos_ += 8;
    return v;
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b_[pos_ + static_cast<std::size_t>(i)])) << (8 * i);
    pos_ += 4;
    return v;
  }
  double f64(const char* what) { return std::bit_cast<double>(u64(what)); }
  std::string bytes(std::size_t n, const char* what) {
    need(n, what);
    std::string s = b_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::string block(const char* what) {
    const std::uint64_t n = u64(what);
    if (n > b_.size()) throw CorruptFile(std::string("cache ") + what + " length is larger than the file");
    return bytes(static_cast<std::size_t>(n), what);
  }
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return b_.size() - pos_; }
  const std::string& data() const { return b_; }

 private:
  const std::string& b_;
  std::size_t pos_ = 0;
};

std::string settings_text(const Precomputed& pc) {
  const CollisionTensor& b = pc.collision;
  std::ostringstream os;
  os << "model = " << to_string(pc.model.kind) << '\n';
  os << "rate_constant = " << fmt(pc.model.rate_constant) << '\n';
  os << "exponent = " << fmt(pc.model.exponent) << '\n';
  os << "energy_cap = " << fmt(pc.energy_cap) << '\n';
  os << "condition_threshold = " << fmt(pc.condition_threshold) << '\n';
  os << "source = " << (b.source == TensorSource::MonteCarlo ? "monte-carlo" : "quadrature") << '\n';
  os << "seed = " << b.seed << '\n';
  os << "samples_per_pair = " << b.samples_per_pair << '\n';
  os << "target_relative_error = " << fmt(b.target_relative_error) << '\n';
  os << "cells = " << pc.partition.size() << '\n';
  os << "collision_blocks = " << b.blocks.size() << '\n';
  return os.str();
}

std::map<std::string, std::string> parse_settings(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) throw CorruptFile("cache settings: malformed line '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return kv;
}

const std::string& setting(const std::map<std::string, std::string>& kv, const std::string& key) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw CorruptFile("cache settings: missing key '" + key + "'");
  return it->second;
}

template <class T>
T parse_number(const std::map<std::string, std::string>& kv, const std::string& key) {
  const std::string& s = setting(kv, key);
  T v{};
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw CorruptFile("cache settings: bad value for '" + key + "'");
  return v;
}

void put_mat(std::string& out, const Mat5& m) {
  for (int r = 0; r < 5; ++r)
    for (int c = 0; c < 5; ++c) put_f64(out, m(r, c));
}

Mat5 get_mat(Reader& rd) {
  Mat5 m;
  for (int r = 0; r < 5; ++r)
    for (int c = 0; c < 5; ++c) m(r, c) = rd.f64("matrix");
  return m;
}

}  // namespace

Precomputed precompute(const Partition& p, const ScatteringModel& model, const McConfig& mc,
                       double condition_threshold) {
  model.validate();
  mc.validate();
  DualSet duals = build_duals(p, condition_threshold);
  DriftTensor drift = drift_tensor(p, duals);
  CollisionTensor coll = collision_tensor_mc(p, duals, model, p.energy_cap(), mc);
  return Precomputed{p, model, p.energy_cap(), condition_threshold, std::move(duals), std::move(drift), std::move(coll)};
}

std::string cache_file_name(const Partition& p, const ScatteringModel& model, const McConfig& mc,
                            double condition_threshold) {
  std::ostringstream os;
  os << to_string(model.kind) << ' ' << fmt(model.rate_constant) << ' ' << fmt(model.exponent) << ' '
     << fmt(p.energy_cap()) << ' ' << mc.seed << ' ' << mc.samples_per_pair << ' ' << fmt(condition_threshold);
  const std::string key = os.str();
  const auto digest = fnv1a(reinterpret_cast<const unsigned char*>(key.data()), key.size());
  return "kcel-" + p.content_hash() + "-" + hex16(digest) + ".kcel";
}

void save_cache(const std::filesystem::path& path, const Precomputed& pc) {
  if (pc.duals.partition_hash != pc.partition.hash() || pc.drift.partition_hash != pc.partition.hash() ||
      pc.collision.partition_hash != pc.partition.hash()) {
    throw HashMismatch("cannot save a cache whose tensors belong to different partitions");
  }
  std::string out(kMagic, sizeof(kMagic));
  put_u32(out, kCacheVersion);
  put_block(out, pc.partition.to_text());
  put_block(out, settings_text(pc));

  std::string payload;
  for (const auto& d : pc.duals.cells) {
    put_mat(payload, d.coeffs);
    put_mat(payload, d.local_coeffs);
    for (int l = 0; l < 3; ++l) put_f64(payload, d.center[l]);
    put_f64(payload, d.scale);
    put_f64(payload, d.condition);
  }
  for (const auto& blk : pc.drift.blocks)
    for (const auto& m : blk.axis) put_mat(payload, m);
  for (const auto& blk : pc.collision.blocks) {
    put_u32(payload, static_cast<std::uint32_t>(blk.alpha));
    put_u32(payload, static_cast<std::uint32_t>(blk.beta));
    put_u32(payload, static_cast<std::uint32_t>(blk.gamma));
    for (double v : blk.value) put_f64(payload, v);
    for (double v : blk.std_error) put_f64(payload, v);
  }
  put_u64(out, payload.size());
  out += payload;
  put_u64(out, fnv1a(reinterpret_cast<const unsigned char*>(payload.data()), payload.size()));

  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open '" + tmp.string() + "' for writing");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move cache into place at '" + path.string() + "': " + ec.message());
}

Precomputed load_cache(const std::filesystem::path& path, std::optional<std::uint64_t> expected_hash) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open cache '" + path.string() + "'");
  const std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  Reader rd(bytes);
  if (rd.bytes(sizeof(kMagic), "magic") != std::string(kMagic, sizeof(kMagic)))
    throw CorruptFile("'" + path.string() + "' is not a kcel cache");
  const std::uint32_t version = rd.u32("version");
  if (version != kCacheVersion)
    throw VersionMismatch("cache format version " + std::to_string(version) + ", expected " + std::to_string(kCacheVersion));

  Partition p = Partition::from_text(rd.block("partition block"));
  if (expected_hash && *expected_hash != p.hash())
    throw HashMismatch("cache partition " + p.content_hash() + " differs from the requested partition");

  const auto kv = parse_settings(rd.block("settings block"));
  ScatteringModel model;
  model.kind = model_kind_from_string(setting(kv, "model"));
  model.rate_constant = parse_number<double>(kv, "rate_constant");
  model.exponent = parse_number<double>(kv, "exponent");
  const double energy_cap = parse_number<double>(kv, "energy_cap");
  const double threshold = parse_number<double>(kv, "condition_threshold");
  const int cells = parse_number<int>(kv, "cells");
  const auto nblocks = parse_number<std::size_t>(kv, "collision_blocks");
  if (cells != p.size()) throw CorruptFile("cache settings: cell count disagrees with the partition block");

  const std::uint64_t payload_size = rd.u64("payload size");
  const std::size_t n = static_cast<std::size_t>(cells);
  const std::size_t expected = n * (50 + 5) * 8 + n * 75 * 8 + nblocks * (12 + 250 * 8);
  if (payload_size != expected) throw CorruptFile("cache payload size does not match its settings");
  if (rd.remaining() != payload_size + 8) throw CorruptFile("cache truncated or has trailing bytes");
  const auto* pstart = reinterpret_cast<const unsigned char*>(bytes.data() + rd.pos());
  const std::uint64_t checksum = fnv1a(pstart, static_cast<std::size_t>(payload_size));

  Precomputed pc{p, model, energy_cap, threshold, {}, {}, {}};
  pc.duals.partition_hash = p.hash();
  for (int a = 0; a < cells; ++a) {
    DualBasis d;
    d.cell = a;
    d.coeffs = get_mat(rd);
    d.local_coeffs = get_mat(rd);
    for (int l = 0; l < 3; ++l) d.center[l] = rd.f64("dual center");
    d.scale = rd.f64("dual scale");
    d.condition = rd.f64("dual condition");
    pc.duals.cells.push_back(d);
  }
  pc.drift.partition_hash = p.hash();
  for (int a = 0; a < cells; ++a) {
    DriftBlock blk;
    for (auto& m : blk.axis) m = get_mat(rd);
    pc.drift.blocks.push_back(blk);
  }
  CollisionTensor& b = pc.collision;
  b.partition_hash = p.hash();
  b.cells = cells;
  const std::string& src = setting(kv, "source");
  if (src == "monte-carlo") b.source = TensorSource::MonteCarlo;
  else if (src == "quadrature") b.source = TensorSource::Quadrature;
  else throw CorruptFile("cache settings: unknown source '" + src + "'");
  b.seed = parse_number<std::uint64_t>(kv, "seed");
  b.samples_per_pair = parse_number<std::int64_t>(kv, "samples_per_pair");
  b.target_relative_error = parse_number<double>(kv, "target_relative_error");
  b.blocks.reserve(nblocks);
  for (std::size_t i = 0; i < nblocks; ++i) {
    CollisionBlock blk;
    blk.alpha = static_cast<int>(rd.u32("block index"));
    blk.beta = static_cast<int>(rd.u32("block index"));
    blk.gamma = static_cast<int>(rd.u32("block index"));
    if (blk.alpha >= cells || blk.beta >= cells || blk.gamma >= cells) throw CorruptFile("cache block index out of range");
    for (double& v : blk.value) v = rd.f64("block value");
    for (double& v : blk.std_error) v = rd.f64("block error");
    b.blocks.push_back(blk);
  }
  if (rd.u64("checksum") != checksum) throw CorruptFile("cache payload checksum mismatch");
  return pc;
}

}  // namespace kcel

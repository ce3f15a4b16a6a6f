#include "asp/checkpoint.hpp"

#include <bit>
#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <regex>
#include <sstream>

#include "asp/errors.hpp"

namespace asp {

static_assert(std::endian::native == std::endian::little,
              "checkpoint encoding assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'A', 'S', 'P', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kFormatVersion = 1;

class Writer {
 public:
  void Bytes(const void* p, std::size_t n) {
    out_.append(static_cast<const char*>(p), n);
  }
  template <class T>
  void Pod(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    Bytes(&v, sizeof v);
  }
  void U64(std::uint64_t v) { Pod(v); }
  void F64(double v) { Pod(v); }
  void I32(std::int32_t v) { Pod(v); }
  void U8(std::uint8_t v) { Pod(v); }
  void Str(std::string_view s) {
    U64(s.size());
    Bytes(s.data(), s.size());
  }
  void Doubles(const std::vector<double>& v) {
    U64(v.size());
    Bytes(v.data(), v.size() * sizeof(double));
  }
  void Ints(const std::vector<int>& v) {
    U64(v.size());
    for (int x : v) I32(x);
  }
  std::string& out() { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}

  void Bytes(void* p, std::size_t n) {
    if (n > in_.size() - pos_) throw FormatError("checkpoint truncated");
    std::memcpy(p, in_.data() + pos_, n);
    pos_ += n;
  }
  template <class T>
  T Pod() {
    T v;
    Bytes(&v, sizeof v);
    return v;
  }
  std::uint64_t U64() { return Pod<std::uint64_t>(); }
  double F64() { return Pod<double>(); }
  std::int32_t I32() { return Pod<std::int32_t>(); }
  std::uint8_t U8() { return Pod<std::uint8_t>(); }
  std::size_t Count(std::size_t element_size) {
    const std::uint64_t n = U64();
    if (element_size > 0 && n > (in_.size() - pos_) / element_size) {
      throw FormatError("checkpoint length field exceeds the data");
    }
    return static_cast<std::size_t>(n);
  }
  std::string Str() {
    std::string s(Count(1), '\0');
    Bytes(s.data(), s.size());
    return s;
  }
  std::vector<double> Doubles() {
    std::vector<double> v(Count(sizeof(double)));
    Bytes(v.data(), v.size() * sizeof(double));
    return v;
  }
  std::vector<int> Ints() {
    std::vector<int> v(Count(sizeof(std::int32_t)));
    for (int& x : v) x = I32();
    return v;
  }
  bool AtEnd() const { return pos_ == in_.size(); }

 private:
  std::string_view in_;
  std::size_t pos_ = 0;
};

void WriteParams(Writer& w, const ParamVector& p) {
  w.Ints(p.spec.object_embed_widths);
  w.Ints(p.spec.trunk_widths);
  for (int s : p.spec.action_factor_sizes) w.I32(s);
  w.U8(p.spec.separate_value_net ? 1 : 0);
  w.Doubles(p.values);
  w.U64(p.version);
}

ParamVector ReadParams(Reader& r) {
  ParamVector p;
  p.spec.object_embed_widths = r.Ints();
  p.spec.trunk_widths = r.Ints();
  for (int& s : p.spec.action_factor_sizes) s = r.I32();
  p.spec.separate_value_net = r.U8() != 0;
  p.values = r.Doubles();
  p.version = r.U64();
  try {
    p.spec.Validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint architecture invalid: ") + e.what());
  }
  if (p.values.size() != p.spec.ParamCount()) {
    throw FormatError("checkpoint parameter count does not match its architecture");
  }
  return p;
}

void WriteAdam(Writer& w, const AdamState& a) {
  w.Doubles(a.m);
  w.Doubles(a.v);
  w.U64(a.step);
}

AdamState ReadAdam(Reader& r) {
  AdamState a;
  a.m = r.Doubles();
  a.v = r.Doubles();
  a.step = r.U64();
  return a;
}

void WritePool(Writer& w, const OpponentPool& pool) {
  w.U64(pool.capacity());
  w.U64(pool.size());
  for (const Snapshot& s : pool.snapshots()) {
    WriteParams(w, s.params);
    w.U64(s.step);
  }
}

OpponentPool ReadPool(Reader& r) {
  const std::uint64_t capacity = r.U64();
  if (capacity < 1) throw FormatError("checkpoint pool capacity is zero");
  OpponentPool pool(capacity);
  const std::uint64_t n = r.U64();
  if (n > capacity) throw FormatError("checkpoint pool exceeds its capacity");
  for (std::uint64_t k = 0; k < n; ++k) {
    ParamVector p = ReadParams(r);
    pool.Add(p, r.U64());
  }
  return pool;
}

void WriteAdr(Writer& w, const AdrParam& p) {
  w.U8(static_cast<std::uint8_t>(p.name));
  w.F64(p.lo);
  w.F64(p.hi);
  w.F64(p.current_max);
  w.Doubles(std::vector<double>(p.scores.begin(), p.scores.end()));
  w.I32(p.queue_length);
  w.F64(p.threshold);
  w.F64(p.increment);
  w.U8(p.frozen ? 1 : 0);
}

AdrParam ReadAdr(Reader& r) {
  AdrParam p;
  const std::uint8_t name = r.U8();
  if (name > static_cast<std::uint8_t>(AdrParamName::kStackProba)) {
    throw FormatError("checkpoint has an unknown ADR parameter");
  }
  p.name = static_cast<AdrParamName>(name);
  p.lo = r.F64();
  p.hi = r.F64();
  p.current_max = r.F64();
  const auto scores = r.Doubles();
  p.scores.assign(scores.begin(), scores.end());
  p.queue_length = r.I32();
  p.threshold = r.F64();
  p.increment = r.F64();
  p.frozen = r.U8() != 0;
  return p;
}

std::string Hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void WriteFileAtomic(const std::filesystem::path& path, std::string_view bytes) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

std::string_view ToString(CheckpointKind kind) {
  switch (kind) {
    case CheckpointKind::kSelfPlay: return "selfplay";
    case CheckpointKind::kBaseline: return "baseline";
  }
  return "unknown";
}

std::uint64_t Checkpoint::round() const {
  if (selfplay) return selfplay->round;
  if (baseline) return baseline->round;
  throw ValidationError("empty checkpoint");
}

const ParamVector& Checkpoint::solver() const {
  if (selfplay) return selfplay->bob;
  if (baseline) return baseline->policy;
  throw ValidationError("empty checkpoint");
}

const ParamVector& Checkpoint::alice() const {
  if (!selfplay) throw ValidationError("baseline checkpoints have no Alice policy");
  return selfplay->alice;
}

std::string EncodeCheckpoint(const Checkpoint& c) {
  const bool selfplay = c.kind == CheckpointKind::kSelfPlay;
  if (selfplay != c.selfplay.has_value() || selfplay == c.baseline.has_value()) {
    throw ValidationError("checkpoint kind does not match its payload");
  }
  Writer w;
  w.Bytes(kMagic, sizeof kMagic);
  w.Pod(kFormatVersion);
  w.U8(static_cast<std::uint8_t>(c.kind));
  w.Str(ConfigToJson(c.config));
  if (selfplay) {
    const TrainingState& s = *c.selfplay;
    WriteParams(w, s.alice);
    WriteParams(w, s.bob);
    WriteAdam(w, s.alice_adam);
    WriteAdam(w, s.bob_adam);
    WritePool(w, s.alice_pool);
    WritePool(w, s.bob_pool);
    w.U64(s.round);
    w.U64(s.alice_last_snapshot);
    w.U64(s.bob_last_snapshot);
  } else {
    const BaselineState& s = *c.baseline;
    WriteParams(w, s.policy);
    WriteAdam(w, s.adam);
    w.U64(s.adr.size());
    for (const AdrParam& p : s.adr) WriteAdr(w, p);
    w.U64(s.round);
  }
  const std::uint64_t sum = Fnv1a(w.out());
  w.U64(sum);
  return std::move(w.out());
}

Checkpoint DecodeCheckpoint(std::string_view bytes) {
  if (bytes.size() < sizeof kMagic + sizeof(std::uint64_t) ||
      std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw FormatError("not a checkpoint file");
  }
  const std::string_view body = bytes.substr(0, bytes.size() - sizeof(std::uint64_t));
  std::uint64_t stored = 0;
  std::memcpy(&stored, bytes.data() + body.size(), sizeof stored);
  if (Fnv1a(body) != stored) throw FormatError("checkpoint checksum mismatch");

  Reader r(body);
  char magic[sizeof kMagic];
  r.Bytes(magic, sizeof magic);
  const auto version = r.Pod<std::uint32_t>();
  if (version != kFormatVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint c;
  const std::uint8_t kind = r.U8();
  if (kind != 1 && kind != 2) throw FormatError("unknown checkpoint kind");
  c.kind = static_cast<CheckpointKind>(kind);
  try {
    c.config = ParseConfig(r.Str(), "checkpoint config");
  } catch (const ConfigError& e) {
    throw FormatError(e.what());
  }
  if (c.kind == CheckpointKind::kSelfPlay) {
    TrainingState s;
    s.alice = ReadParams(r);
    s.bob = ReadParams(r);
    s.alice_adam = ReadAdam(r);
    s.bob_adam = ReadAdam(r);
    s.alice_pool = ReadPool(r);
    s.bob_pool = ReadPool(r);
    s.round = r.U64();
    s.alice_last_snapshot = r.U64();
    s.bob_last_snapshot = r.U64();
    c.selfplay = std::move(s);
  } else {
    BaselineState s;
    s.policy = ReadParams(r);
    s.adam = ReadAdam(r);
    const std::size_t n = r.Count(1);
    for (std::size_t k = 0; k < n; ++k) s.adr.push_back(ReadAdr(r));
    s.round = r.U64();
    c.baseline = std::move(s);
  }
  if (!r.AtEnd()) throw FormatError("trailing bytes in checkpoint");
  return c;
}

CheckpointFiles WriteCheckpoint(const std::filesystem::path& dir,
                                const Checkpoint& c) {
  std::filesystem::create_directories(dir);
  char name[32];
  std::snprintf(name, sizeof name, "ckpt-%08" PRIu64, c.round());
  CheckpointFiles files{dir / (std::string(name) + ".bin"),
                        dir / (std::string(name) + ".manifest")};
  const std::string bytes = EncodeCheckpoint(c);
  std::uint64_t checksum = 0;
  std::memcpy(&checksum, bytes.data() + bytes.size() - sizeof checksum,
              sizeof checksum);
  std::ostringstream m;
  m << "kind " << ToString(c.kind) << "\n"
    << "step " << c.round() << "\n"
    << "seed " << c.config.seed << "\n"
    << "config_hash " << Hex(ConfigHash(c.config)) << "\n"
    << "bytes " << bytes.size() << "\n"
    << "checksum " << Hex(checksum) << "\n";
  if (c.selfplay) {
    m << "alice_optimizer_steps " << c.selfplay->alice_adam.step << "\n"
      << "bob_optimizer_steps " << c.selfplay->bob_adam.step << "\n";
  } else {
    m << "optimizer_steps " << c.baseline->adam.step << "\n";
  }
  WriteFileAtomic(files.data, bytes);
  WriteFileAtomic(files.manifest, m.str());
  return files;
}

Checkpoint ReadCheckpoint(const std::filesystem::path& path) {
  return DecodeCheckpoint(ReadFile(path));
}

std::optional<std::filesystem::path> LatestCheckpoint(
    const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) return std::nullopt;
  static const std::regex kName(R"(ckpt-(\d+)\.bin)");
  std::optional<std::filesystem::path> best;
  std::uint64_t best_round = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (!std::regex_match(name, m, kName)) continue;
    const std::uint64_t round = std::stoull(m[1].str());
    if (!best || round > best_round) {
      best = entry.path();
      best_round = round;
    }
  }
  return best;
}

}  // namespace asp

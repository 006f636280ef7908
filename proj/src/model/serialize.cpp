#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "scope_refine/model/model.hpp"

namespace scope_refine::model {

namespace {

constexpr char kMagic[4] = {'S', 'R', 'M', '1'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void block(const std::vector<double>& values) {
    u64(values.size());
    for (double v : values) f64(v);
  }
  void raw(const char* data, std::size_t n) { out_.append(data, n); }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  void raw(char* out, std::size_t n) {
    need(n);
    std::memcpy(out, bytes_.data() + at_, n);
    at_ += n;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(byte()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(byte()) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::vector<double> block(std::size_t expected_a, std::size_t expected_b) {
    const std::uint64_t n = u64();
    if (n != expected_a && n != expected_b) fail("unexpected block length " + std::to_string(n));
    std::vector<double> out(n);
    for (auto& v : out) v = f64();
    return out;
  }
  bool done() const { return at_ == bytes_.size(); }

  [[noreturn]] static void fail(const std::string& what) {
    throw ModelError(ModelErrorKind::BadModelFile, what);
  }

 private:
  const std::string& bytes_;
  std::size_t at_ = 0;

  unsigned char byte() { return static_cast<unsigned char>(bytes_[at_++]); }
  void need(std::size_t n) const {
    if (bytes_.size() - at_ < n) fail("truncated model file");
  }
};

}  // namespace

std::string serialize(const ModelHandle& m) {
  Writer w;
  w.raw(kMagic, 4);
  w.u32(kVersion);
  w.u64(m.spec.num_layers);
  w.u64(m.spec.hidden_dim);
  w.u64(m.spec.num_classes);
  w.u64(m.spec.vocab_hash_dim);
  w.f64(m.spec.dropout_rate);
  w.u64(m.train_seed);
  w.f64(m.train_accuracy);
  w.block(m.params);
  w.block(m.probes);
  return w.take();
}

ModelHandle deserialize(const std::string& bytes) {
  Reader r(bytes);
  char magic[4];
  r.raw(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) Reader::fail("missing SRM1 magic");
  const std::uint32_t version = r.u32();
  if (version != kVersion) Reader::fail("unsupported version " + std::to_string(version));
  ModelHandle m;
  m.spec.num_layers = r.u64();
  m.spec.hidden_dim = r.u64();
  m.spec.num_classes = r.u64();
  m.spec.vocab_hash_dim = r.u64();
  m.spec.dropout_rate = r.f64();
  try {
    m.spec.validate();
  } catch (const ModelError& e) {
    Reader::fail(e.what());
  }
  m.train_seed = r.u64();
  m.train_accuracy = r.f64();
  const ParamLayout layout(m.spec);
  m.params = r.block(layout.total, layout.total);
  m.probes = r.block(layout.probe_total, 0);
  if (!r.done()) Reader::fail("trailing bytes after model");
  return m;
}

void save_model(const ModelHandle& handle, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  const std::string bytes = serialize(handle);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ModelError(ModelErrorKind::BadModelFile, "cannot write " + path);
}

ModelHandle load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelError(ModelErrorKind::BadModelFile, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize(ss.str());
}

}  // namespace scope_refine::model

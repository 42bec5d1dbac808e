#include "mlsimp/ad/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <stdexcept>

#include "mlsimp/core.hpp"
#include "mlsimp/fileio.hpp"

namespace mlsimp::ad {

namespace {

constexpr char kMagic[8] = {'M', 'L', 'S', 'I', 'M', 'P', 'C', 'K'};

static_assert(std::endian::native == std::endian::little, "checkpoint code assumes a little-endian host");

class Writer {
 public:
  template <class T>
  void pod(T v) {
    const auto* p = reinterpret_cast<const char*>(&v);
    out_.append(p, sizeof(T));
  }
  void str(const std::string& s) {
    pod<std::uint64_t>(s.size());
    out_ += s;
  }
  void raw(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& in) : in_(in) {}
  template <class T>
  T pod() {
    T v;
    need(sizeof(T));
    std::memcpy(&v, in_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string str() {
    const auto n = pod<std::uint64_t>();
    need(n);
    std::string s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void raw(void* p, std::size_t n) {
    need(n);
    std::memcpy(p, in_.data() + pos_, n);
    pos_ += n;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::uint64_t n) const {
    if (n > in_.size() - pos_) throw IoError("checkpoint is truncated");
  }
  const std::string& in_;
  std::size_t pos_ = 0;
};

}  // namespace

void Checkpoint::store(const ParameterList& params) {
  for (const Parameter* p : params) {
    if (!arrays.emplace(p->name, p->value).second) throw std::invalid_argument("duplicate parameter name " + p->name);
  }
}

void Checkpoint::restore(const ParameterList& params) const {
  for (const Parameter* p : params) {
    auto it = arrays.find(p->name);
    if (it == arrays.end()) throw std::invalid_argument("checkpoint lacks parameter " + p->name);
    if (!it->second.same_shape(p->value)) {
      throw std::invalid_argument("shape mismatch for " + p->name + ": stored " + shape_string(it->second.shape()) +
                                  ", expected " + shape_string(p->value.shape()));
    }
  }
  for (Parameter* p : params) p->value = arrays.at(p->name);
}

std::string serialize(const Checkpoint& ck) {
  Writer w;
  w.raw(kMagic, sizeof kMagic);
  w.pod<std::uint32_t>(kCheckpointVersion);
  w.pod<std::uint64_t>(ck.metadata.size());
  for (const auto& [k, v] : ck.metadata) {
    w.str(k);
    w.str(v);
  }
  w.pod<std::uint64_t>(ck.arrays.size());
  for (const auto& [name, t] : ck.arrays) {
    w.str(name);
    w.pod<std::uint32_t>(static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) w.pod<std::uint64_t>(d);
    w.raw(t.data().data(), t.size() * sizeof(double));
  }
  return w.take();
}

Checkpoint deserialize(const std::string& bytes) {
  Reader r(bytes);
  char magic[8];
  r.raw(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof magic) != 0) throw IoError("not a checkpoint file");
  const auto version = r.pod<std::uint32_t>();
  if (version != kCheckpointVersion) throw IoError("unsupported checkpoint version " + std::to_string(version));
  Checkpoint ck;
  const auto nmeta = r.pod<std::uint64_t>();
  for (std::uint64_t i = 0; i < nmeta; ++i) {
    std::string k = r.str();
    ck.metadata[k] = r.str();
  }
  const auto narrays = r.pod<std::uint64_t>();
  for (std::uint64_t i = 0; i < narrays; ++i) {
    std::string name = r.str();
    const auto rank = r.pod<std::uint32_t>();
    if (rank > 3) throw IoError("checkpoint array " + name + " has rank above 3");
    std::vector<std::size_t> shape(rank);
    std::uint64_t count = 1;
    for (auto& d : shape) {
      d = r.pod<std::uint64_t>();
      count *= d;
    }
    if (count > bytes.size() / sizeof(double)) throw IoError("checkpoint is truncated");
    std::vector<double> values(count);
    r.raw(values.data(), count * sizeof(double));
    ck.arrays.emplace(std::move(name), Tensor(std::move(shape), std::move(values)));
  }
  if (!r.done()) throw IoError("trailing bytes after checkpoint payload");
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  write_file_atomic(path, serialize(ck));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  try {
    return deserialize(read_file(path));
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace mlsimp::ad

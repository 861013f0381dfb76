#include "lnmt/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <vector>

namespace lnmt {

namespace {

constexpr char kMagic[8] = {'L', 'N', 'M', 'T', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

class Writer {
 public:
  template <typename T>
  void pod(T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    const char* p = reinterpret_cast<const char*>(&value);
    buf_.append(p, sizeof(T));
  }
  void str(const std::string& s) {
    pod<std::uint64_t>(s.size());
    buf_.append(s);
  }
  void vec(const Vec& v) {
    pod<std::uint64_t>(static_cast<std::uint64_t>(v.size()));
    buf_.append(reinterpret_cast<const char*>(v.data()),
                static_cast<std::size_t>(v.size()) * sizeof(double));
  }
  std::string& bytes() { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  Reader(const std::string& bytes, std::size_t limit) : bytes_(bytes), limit_(limit) {}

  template <typename T>
  T pod() {
    static_assert(std::is_trivially_copyable_v<T>);
    need(sizeof(T));
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }
  std::string str() {
    const auto n = pod<std::uint64_t>();
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  Vec vec() {
    const auto n = pod<std::uint64_t>();
    need(n * sizeof(double));
    Vec v(static_cast<Eigen::Index>(n));
    std::memcpy(v.data(), bytes_.data() + pos_, n * sizeof(double));
    pos_ += n * sizeof(double);
    return v;
  }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::uint64_t n) {
    if (pos_ + n > limit_) throw Error("checkpoint: truncated or corrupted file");
  }
  const std::string& bytes_;
  std::size_t limit_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  Writer w;
  w.bytes().append(kMagic, sizeof(kMagic));
  w.pod<std::uint32_t>(kVersion);
  w.pod<std::int32_t>(ckpt.stage);
  w.str(ckpt.meta_json);
  w.vec(ckpt.params);
  w.vec(ckpt.best_params);
  w.vec(ckpt.teacher_params);
  w.vec(ckpt.adam_m);
  w.vec(ckpt.adam_v);
  w.pod<std::int64_t>(ckpt.adam_step);
  w.pod<std::int32_t>(ckpt.epochs_done);
  w.pod<double>(ckpt.best_val);
  w.str(ckpt.rng_state);
  w.pod<std::uint64_t>(fnv1a(w.bytes()));

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("checkpoint: cannot open for writing: " + path);
  out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
  if (!out) throw Error("checkpoint: write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("checkpoint: cannot open: " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (bytes.size() < sizeof(kMagic) + sizeof(std::uint32_t) + sizeof(std::uint64_t)) {
    throw Error("checkpoint: truncated or corrupted file");
  }
  if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw Error("checkpoint: not a checkpoint file: " + path);
  }
  const std::size_t body_end = bytes.size() - sizeof(std::uint64_t);
  std::uint64_t stored_sum = 0;
  std::memcpy(&stored_sum, bytes.data() + body_end, sizeof(stored_sum));
  if (fnv1a(bytes.substr(0, body_end)) != stored_sum) {
    throw Error("checkpoint: checksum mismatch (corrupted file): " + path);
  }

  Reader r(bytes, body_end);
  char magic[sizeof(kMagic)];
  for (char& c : magic) c = r.pod<char>();
  const auto version = r.pod<std::uint32_t>();
  if (version != kVersion) {
    throw Error("checkpoint: version mismatch: file has " + std::to_string(version) +
                ", supported is " + std::to_string(kVersion));
  }

  Checkpoint ckpt;
  ckpt.stage = r.pod<std::int32_t>();
  ckpt.meta_json = r.str();
  ckpt.params = r.vec();
  ckpt.best_params = r.vec();
  ckpt.teacher_params = r.vec();
  ckpt.adam_m = r.vec();
  ckpt.adam_v = r.vec();
  ckpt.adam_step = r.pod<std::int64_t>();
  ckpt.epochs_done = r.pod<std::int32_t>();
  ckpt.best_val = r.pod<double>();
  ckpt.rng_state = r.str();
  if (r.pos() != body_end) throw Error("checkpoint: trailing bytes (corrupted file)");
  return ckpt;
}

}  // namespace lnmt

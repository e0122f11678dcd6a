#include "semirl/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace semirl {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double d) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(d);
  put_u64(out, bits);
}

class Reader {
 public:
  Reader(const std::string& data) : data_(data) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_++])) << (8 * i);
    return v;
  }

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_++])) << (8 * i);
    return v;
  }

  double f64() { return std::bit_cast<double>(u64()); }

  std::string bytes(std::size_t n) {
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) {
    if (pos_ + n > data_.size()) throw std::runtime_error("checkpoint: truncated file");
  }
  const std::string& data_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const std::string& path, const Policy& policy) {
  std::string out;
  out.append(kCheckpointMagic, 16);
  put_u32(out, static_cast<std::uint32_t>(policy.backend));
  put_u32(out, static_cast<std::uint32_t>(policy.vocab));
  put_u32(out, static_cast<std::uint32_t>(policy.horizon));
  put_u32(out, static_cast<std::uint32_t>(policy.contexts));
  put_u32(out, static_cast<std::uint32_t>(policy.features.variant));
  put_u64(out, static_cast<std::uint64_t>(policy.params.size()));
  for (double p : policy.params) put_f64(out, p);

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("checkpoint: cannot open for writing: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("checkpoint: write failed: " + path);
}

Policy load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("checkpoint: cannot open: " + path);
  std::string data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

  Reader r(data);
  if (r.bytes(16) != std::string(kCheckpointMagic, 16))
    throw std::runtime_error("checkpoint: bad magic");
  const auto backend = static_cast<Backend>(r.u32());
  const int vocab = static_cast<int>(r.u32());
  const int horizon = static_cast<int>(r.u32());
  const int contexts = static_cast<int>(r.u32());
  const auto variant = static_cast<FeatureVariant>(r.u32());
  const std::uint64_t count = r.u64();

  Policy policy;
  if (backend == Backend::TabularContext) {
    policy = Policy::tabular(contexts, horizon, vocab);
  } else if (backend == Backend::LinearFeature) {
    policy = Policy::linear(FeatureSpec{horizon, contexts, vocab, variant});
  } else {
    throw std::runtime_error("checkpoint: unknown backend tag");
  }
  if (count != policy.params.size())
    throw std::runtime_error("checkpoint: parameter count does not match shape");
  for (auto& p : policy.params) p = r.f64();
  if (!r.done()) throw std::runtime_error("checkpoint: trailing bytes");
  return policy;
}

}  // namespace semirl

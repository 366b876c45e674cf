#include "catdesc/params.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace catdesc {

Param& ParameterSet::add(const std::string& name, Tensor value) {
  auto [it, inserted] = params_.emplace(name, Param(std::move(value)));
  if (!inserted) throw std::runtime_error("duplicate parameter name: " + name);
  return it->second;
}

Param& ParameterSet::get(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::runtime_error("unknown parameter: " + name);
  return it->second;
}

const Param& ParameterSet::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::runtime_error("unknown parameter: " + name);
  return it->second;
}

void ParameterSet::zero_grad() {
  for (auto& [name, p] : params_)
    std::fill(p.grad.data.begin(), p.grad.data.end(), 0.0f);
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [name, p] : params_) n += p.value.size();
  return n;
}

Param& ParameterSet::add_weight(const std::string& name, std::size_t fan_in,
                                std::vector<std::size_t> shape, Rng& rng) {
  Tensor t = Tensor::zeros(std::move(shape));
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (float& v : t.data) v = static_cast<float>(rng.uniform(-bound, bound));
  return add(name, std::move(t));
}

Param& ParameterSet::add_embedding(const std::string& name,
                                   std::vector<std::size_t> shape, Rng& rng) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (float& v : t.data) v = static_cast<float>(rng.normal(0.0, 0.02));
  return add(name, std::move(t));
}

Param& ParameterSet::add_bias(const std::string& name, std::size_t dim) {
  return add(name, Tensor::zeros({dim}));
}

AdamState::AdamState(const ParameterSet& params, AdamConfig cfg) : cfg_(cfg) {
  for (const auto& [name, p] : params.entries()) {
    m_.emplace(name, Tensor::zeros(p.value.shape));
    v_.emplace(name, Tensor::zeros(p.value.shape));
  }
}

void AdamState::step(ParameterSet& params) {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (auto& [name, p] : params.entries()) {
    Tensor& m = m_.at(name);
    Tensor& v = v_.at(name);
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad.data[i];
      const double mi = cfg_.beta1 * m.data[i] + (1.0 - cfg_.beta1) * g;
      const double vi = cfg_.beta2 * v.data[i] + (1.0 - cfg_.beta2) * g * g;
      m.data[i] = static_cast<float>(mi);
      v.data[i] = static_cast<float>(vi);
      const double mhat = mi / bc1;
      const double vhat = vi / bc2;
      double x = p.value.data[i];
      x -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
      x -= cfg_.lr * cfg_.weight_decay * p.value.data[i];
      p.value.data[i] = static_cast<float>(x);
    }
  }
  params.zero_grad();
}

namespace {

constexpr char kMagic[4] = {'C', 'D', 'S', 'C'};
constexpr std::uint16_t kVersion = 1;

template <typename T>
void write_le(std::ofstream& out, T v) {
  // Host is little-endian on every supported target; memcpy keeps the
  // aliasing rules happy.
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.write(buf, sizeof(T));
}

template <typename T>
T read_le(std::ifstream& in) {
  char buf[sizeof(T)];
  in.read(buf, sizeof(T));
  if (!in) throw std::runtime_error("checkpoint: truncated file");
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

}  // namespace

void save_checkpoint(const ParameterSet& params, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot open " + path);
  out.write(kMagic, 4);
  write_le<std::uint16_t>(out, kVersion);
  for (const auto& [name, p] : params.entries()) {
    if (name.size() > 0xffff) throw std::runtime_error("checkpoint: name too long");
    write_le<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_le<std::uint8_t>(out, static_cast<std::uint8_t>(p.value.rank()));
    for (const std::size_t d : p.value.shape)
      write_le<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    out.write(reinterpret_cast<const char*>(p.value.data.data()),
              static_cast<std::streamsize>(p.value.size() * sizeof(float)));
  }
  if (!out) throw std::runtime_error("checkpoint: write failed: " + path);
}

ParameterSet load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("checkpoint: bad magic");
  const auto version = read_le<std::uint16_t>(in);
  if (version != kVersion)
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));

  ParameterSet params;
  while (true) {
    char peekedc;
    in.read(&peekedc, 1);
    if (in.eof()) break;
    if (!in) throw std::runtime_error("checkpoint: read failed");
    in.putback(peekedc);

    const auto name_len = read_le<std::uint16_t>(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const auto rank = read_le<std::uint8_t>(in);
    if (rank < 1 || rank > 3) throw std::runtime_error("checkpoint: bad rank");
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = read_le<std::uint32_t>(in);
    Tensor t = Tensor::zeros(shape);
    in.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(t.size() * sizeof(float)));
    if (!in) throw std::runtime_error("checkpoint: truncated payload for " + name);
    params.add(name, std::move(t));
  }
  return params;
}

}  // namespace catdesc

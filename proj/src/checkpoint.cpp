#include "scmp/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace scmp {
namespace {

constexpr char kMagic[4] = {'S', 'C', 'M', 'P'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void write_u64(std::ostream& os, std::uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void write_f64s(std::ostream& os, const std::vector<double>& v) {
  os.write(reinterpret_cast<const char*>(v.data()),
           static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::uint32_t read_u32(std::istream& is) {
  std::uint32_t v;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  return v;
}
std::uint64_t read_u64(std::istream& is) {
  std::uint64_t v;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  return v;
}
void read_f64s(std::istream& is, std::vector<double>& v, std::size_t n) {
  v.resize(n);
  is.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(n * sizeof(double)));
  if (!is) throw std::runtime_error("checkpoint: truncated file");
}

}  // namespace

void save_checkpoint(const CompatibilityModel& model, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
  os.write(kMagic, 4);
  write_u32(os, kVersion);
  const ModelConfig& c = model.config();
  write_u32(os, c.variant == Variant::kModelI ? 1u : 2u);
  write_u32(os, static_cast<std::uint32_t>(c.embed_dim));
  write_u32(os, static_cast<std::uint32_t>(c.msg_dim));
  write_u32(os, static_cast<std::uint32_t>(c.edge_dim));
  write_u32(os, static_cast<std::uint32_t>(c.steps));
  write_u32(os, static_cast<std::uint32_t>(c.mlp_depth));
  write_f64s(os, {c.margin});
  write_u32(os, c.normalize ? 1u : 0u);
  write_u64(os, static_cast<std::uint64_t>(model.registry().step()));

  const auto& params = model.registry().params();
  write_u32(os, static_cast<std::uint32_t>(params.size()));
  for (const Param& p : params) {
    write_u32(os, static_cast<std::uint32_t>(p.name.size()));
    os.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    write_u32(os, static_cast<std::uint32_t>(p.value.shape.size()));
    for (int d : p.value.shape) write_u64(os, static_cast<std::uint64_t>(d));
    write_f64s(os, p.value.data);
    write_f64s(os, p.adam_m);
    write_f64s(os, p.adam_v);
  }

  const NormState& n = model.norm_state();
  write_u32(os, n.initialized ? 1u : 0u);
  write_u64(os, static_cast<std::uint64_t>(n.dim));
  write_f64s(os, n.running_mean);
  write_f64s(os, n.running_var);
  if (!os) throw std::runtime_error("checkpoint: write failed for " + path);
}

CompatibilityModel load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);
  std::uint32_t version = read_u32(is);
  if (version != kVersion)
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));

  ModelConfig c;
  c.variant = read_u32(is) == 1u ? Variant::kModelI : Variant::kModelII;
  c.embed_dim = static_cast<int>(read_u32(is));
  c.msg_dim = static_cast<int>(read_u32(is));
  c.edge_dim = static_cast<int>(read_u32(is));
  c.steps = static_cast<int>(read_u32(is));
  c.mlp_depth = static_cast<int>(read_u32(is));
  std::vector<double> m;
  read_f64s(is, m, 1);
  c.margin = m[0];
  c.normalize = read_u32(is) != 0;
  std::int64_t step = static_cast<std::int64_t>(read_u64(is));

  CompatibilityModel model(c, /*seed=*/0);
  model.registry().set_step(step);

  std::uint32_t count = read_u32(is);
  if (count != model.registry().params().size())
    throw std::runtime_error("checkpoint: parameter count mismatch");
  for (std::uint32_t i = 0; i < count; ++i) {
    std::uint32_t name_len = read_u32(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    Param& p = model.registry().params()[i];
    if (name != p.name)
      throw std::runtime_error("checkpoint: unexpected parameter " + name);
    std::uint32_t rank = read_u32(is);
    std::vector<int> shape(rank);
    for (std::uint32_t d = 0; d < rank; ++d) shape[d] = static_cast<int>(read_u64(is));
    if (shape != p.value.shape)
      throw std::runtime_error("checkpoint: shape mismatch for " + name);
    read_f64s(is, p.value.data, p.value.size());
    read_f64s(is, p.adam_m, p.value.size());
    read_f64s(is, p.adam_v, p.value.size());
  }

  NormState& n = model.norm_state();
  n.initialized = read_u32(is) != 0;
  n.dim = static_cast<int>(read_u64(is));
  read_f64s(is, n.running_mean, static_cast<std::size_t>(n.dim));
  read_f64s(is, n.running_var, static_cast<std::size_t>(n.dim));
  return model;
}

}  // namespace scmp

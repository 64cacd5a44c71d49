#include "cscn/model_io.hpp"

#include "cscn/io_util.hpp"

namespace cscn {

namespace {

constexpr std::uint32_t kModelFormatVersion = 1;
constexpr std::uint8_t kLayerFc = 1;
constexpr std::uint8_t kLayerConv = 2;

void put_fc(std::string& out, const Tensor& weights, const Tensor& bias) {
  detail::put_u8(out, kLayerFc);
  detail::put_u32(out, static_cast<std::uint32_t>(weights.extent(0)));
  detail::put_u32(out, static_cast<std::uint32_t>(weights.extent(1)));
  detail::put_u32(out, bias.empty() ? 0u : 1u);
  detail::put_u32(out, 0u);
  for (float v : weights) detail::put_f32(out, v);
  for (float v : bias) detail::put_f32(out, v);
}

void put_conv_stack(std::string& out, const ConvStackParamsT<float>& stack) {
  for (std::size_t l = 0; l < 3; ++l) {
    const Tensor& k = stack.kernels[l];
    detail::put_u8(out, kLayerConv);
    detail::put_u32(out, static_cast<std::uint32_t>(k.extent(0)));
    detail::put_u32(out, static_cast<std::uint32_t>(k.extent(1)));
    detail::put_u32(out, static_cast<std::uint32_t>(k.extent(2)));
    detail::put_u32(out, static_cast<std::uint32_t>(k.extent(3)));
    for (float v : k) detail::put_f32(out, v);
    for (float v : stack.biases[l]) detail::put_f32(out, v);
  }
}

std::string header(Architecture arch, const SensingConfig& config, std::uint64_t matrix_seed) {
  std::string out;
  out += "CSCN";
  detail::put_u32(out, kModelFormatVersion);
  detail::put_u8(out, static_cast<std::uint8_t>(arch));
  detail::put_u32(out, static_cast<std::uint32_t>(config.block_size));
  detail::put_u32(out, static_cast<std::uint32_t>(config.m()));
  detail::put_u64(out, matrix_seed);
  return out;
}

struct FcRecord {
  std::size_t out_dim, in_dim;
  bool has_bias;
  Tensor weights, bias;
};

FcRecord read_fc(detail::ByteReader& r, const std::string& what) {
  if (r.u8() != kLayerFc) throw IoError(what + ": expected an FC layer record");
  FcRecord rec;
  rec.out_dim = r.u32();
  rec.in_dim = r.u32();
  rec.has_bias = r.u32() != 0;
  r.u32();  // reserved
  if (rec.out_dim == 0 || rec.in_dim == 0)
    throw IoError(what + ": corrupt FC dimensions");
  rec.weights = Tensor(Shape{rec.out_dim, rec.in_dim});
  r.f32_array(rec.weights.data(), rec.weights.size());
  if (rec.has_bias) {
    rec.bias = Tensor(Shape{rec.out_dim});
    r.f32_array(rec.bias.data(), rec.bias.size());
  }
  return rec;
}

ConvStackParamsT<float> read_conv_stack(detail::ByteReader& r, const std::string& what) {
  ConvStackParamsT<float> stack;
  std::size_t prev_out = 1;
  for (std::size_t l = 0; l < 3; ++l) {
    if (r.u8() != kLayerConv) throw IoError(what + ": expected a conv layer record");
    const std::size_t o = r.u32(), c = r.u32(), kh = r.u32(), kw = r.u32();
    if (o == 0 || c != prev_out || kh != kw || kh % 2 == 0)
      throw IoError(what + ": corrupt conv layer record (layer " + std::to_string(l + 1) + ")");
    stack.kernels[l] = Tensor(Shape{o, c, kh, kw});
    r.f32_array(stack.kernels[l].data(), stack.kernels[l].size());
    stack.biases[l] = Tensor(Shape{o});
    r.f32_array(stack.biases[l].data(), stack.biases[l].size());
    prev_out = o;
  }
  if (stack.kernels[2].extent(0) != 1)
    throw IoError(what + ": corrupt conv stack (last layer must emit one map)");
  return stack;
}

SensingConfig config_from_header(std::size_t block, std::size_t m, const std::string& what) {
  if (block == 0 || m == 0 || m > block * block)
    throw IoError(what + ": corrupt header dimensions");
  // the stored m is authoritative; reconstruct the rate it floors from
  return SensingConfig(block, static_cast<double>(m) / static_cast<double>(block * block));
}

}  // namespace

void save_model(const CsrNetParams& params, const std::filesystem::path& path) {
  std::string out = header(Architecture::csrnet, params.config, params.matrix_seed);
  put_fc(out, params.initial_weights, params.initial_bias);
  put_conv_stack(out, params.deep_stack);
  put_conv_stack(out, params.residual_stack);
  detail::atomic_write_file(path, out);
}

void save_model(const AsrNetParams& params, const std::filesystem::path& path) {
  std::string out = header(Architecture::asrnet, params.config, 0);
  put_fc(out, params.sampling_weights, params.sampling_bias);
  put_fc(out, params.initial_weights, params.initial_bias);
  put_conv_stack(out, params.residual_stack);
  detail::atomic_write_file(path, out);
}

void save_model(const AnyModel& params, const std::filesystem::path& path) {
  std::visit([&](const auto& p) { save_model(p, path); }, params);
}

AnyModel load_model(const std::filesystem::path& path) {
  const std::string what = "model " + path.string();
  const std::string bytes = detail::read_file_bytes(path);
  detail::ByteReader r(bytes, what);

  if (r.magic4() != "CSCN") throw IoError(what + ": bad magic (want CSCN)");
  const std::uint32_t version = r.u32();
  if (version != kModelFormatVersion)
    throw IoError(what + ": unsupported version " + std::to_string(version));
  const std::uint8_t arch_tag = r.u8();
  const std::size_t block = r.u32();
  const std::size_t m = r.u32();
  const std::uint64_t matrix_seed = r.u64();
  const SensingConfig config = config_from_header(block, m, what);
  const std::size_t n = config.n();

  if (arch_tag == static_cast<std::uint8_t>(Architecture::csrnet)) {
    CsrNetParams p;
    p.config = config;
    p.matrix_seed = matrix_seed;
    FcRecord fc = read_fc(r, what);
    if (fc.out_dim != n || fc.in_dim != m || !fc.has_bias)
      throw IoError(what + ": initial FC record does not match header dimensions");
    p.initial_weights = std::move(fc.weights);
    p.initial_bias = std::move(fc.bias);
    p.deep_stack = read_conv_stack(r, what);
    p.residual_stack = read_conv_stack(r, what);
    if (!r.exhausted()) throw IoError(what + ": trailing bytes after last record");
    return p;
  }
  if (arch_tag == static_cast<std::uint8_t>(Architecture::asrnet)) {
    AsrNetParams p;
    p.config = config;
    FcRecord samp = read_fc(r, what);
    if (samp.out_dim != m || samp.in_dim != n)
      throw IoError(what + ": sampling FC record does not match header dimensions");
    p.sampling_weights = std::move(samp.weights);
    p.sampling_bias = std::move(samp.bias);
    FcRecord init = read_fc(r, what);
    if (init.out_dim != n || init.in_dim != m || !init.has_bias)
      throw IoError(what + ": initial FC record does not match header dimensions");
    p.initial_weights = std::move(init.weights);
    p.initial_bias = std::move(init.bias);
    p.residual_stack = read_conv_stack(r, what);
    if (!r.exhausted()) throw IoError(what + ": trailing bytes after last record");
    return p;
  }
  throw IoError(what + ": unknown architecture tag " + std::to_string(arch_tag));
}

CsrNetParams load_csrnet(const std::filesystem::path& path) {
  AnyModel m = load_model(path);
  if (auto* p = std::get_if<CsrNetParams>(&m)) return std::move(*p);
  throw IoError("model " + path.string() + ": architecture tag is asrnet, expected csrnet");
}

AsrNetParams load_asrnet(const std::filesystem::path& path) {
  AnyModel m = load_model(path);
  if (auto* p = std::get_if<AsrNetParams>(&m)) return std::move(*p);
  throw IoError("model " + path.string() + ": architecture tag is csrnet, expected asrnet");
}

}  // namespace cscn

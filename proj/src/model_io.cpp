#include "vbll/model_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "vbll/error.hpp"

namespace vbll {
namespace {

constexpr char kMagic[4] = {'V', 'B', 'L', 'M'};
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kHeaderSize = 16;

void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::string& buf, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

std::uint64_t get_le(const unsigned char* p, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

}  // namespace

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
  const auto& p = model.params;
  std::string buf(kMagic, 4);
  put_u32(buf, kVersion);
  put_u32(buf, static_cast<std::uint32_t>(p.n_classes));
  put_u32(buf, static_cast<std::uint32_t>(p.in_dim));
  p.for_each_tensor([&buf](const std::vector<double>& t) {
    for (double v : t) put_f64(buf, v);
  });
  buf += to_text(model.config);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw FormatError("write failed: " + path.string());
}

TrainedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open model file: " + path.string());
  const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  if (bytes.size() < kHeaderSize || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("bad magic in model file " + path.string());
  }
  const auto* raw = reinterpret_cast<const unsigned char*>(bytes.data());
  if (get_le(raw + 4, 4) != kVersion) throw FormatError("unsupported model file version");
  const auto C = static_cast<std::size_t>(get_le(raw + 8, 4));
  const auto H = static_cast<std::size_t>(get_le(raw + 12, 4));
  if (C == 0 || H == 0) throw FormatError("empty model in " + path.string());

  TrainedModel model;
  model.params = VBLLParams::zeros(H, C);
  const std::size_t need = kHeaderSize + 8 * (2 * C * H + 2 * C);
  if (bytes.size() < need) throw FormatError("truncated model file " + path.string());
  std::size_t offset = kHeaderSize;
  model.params.for_each_tensor([&](std::vector<double>& t) {
    for (auto& v : t) {
      v = std::bit_cast<double>(get_le(raw + offset, 8));
      if (!std::isfinite(v)) throw FormatError("non-finite parameter in " + path.string());
      offset += 8;
    }
  });
  model.config = config_from_text(std::string_view(bytes).substr(need));
  return model;
}

}  // namespace vbll

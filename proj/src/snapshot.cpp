#include "lfpp/snapshot.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "lfpp/error.hpp"

namespace lfpp {
namespace {

template <class T>
void put_le(std::ostream& os, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<unsigned char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  os.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <class T>
T get_le(std::istream& is) {
  std::array<unsigned char, sizeof(T)> bytes;
  if (!is.read(reinterpret_cast<char*>(bytes.data()), sizeof(T))) fail(ErrorKind::io, "truncated snapshot");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

std::filesystem::path with_suffix(std::filesystem::path base, const char* ext) {
  base += ext;
  return base;
}

}  // namespace

void save_snapshot(const FieldSample& sample, const std::filesystem::path& base) {
  const FieldSpec& s = sample.spec();
  {
    std::ofstream os(with_suffix(base, ".bin"), std::ios::binary | std::ios::trunc);
    if (!os) fail(ErrorKind::io, "cannot open " + with_suffix(base, ".bin").string());
    put_le<std::int32_t>(os, s.dim);
    put_le<std::int32_t>(os, s.scale_index);
    put_le<std::uint64_t>(os, s.master_seed);
    put_le<std::uint64_t>(os, s.job_key);
    put_le<std::int32_t>(os, sample.centered() ? 1 : 0);
    for (double v : sample.values()) put_le<double>(os, v);
    if (!os) fail(ErrorKind::io, "write failed for " + with_suffix(base, ".bin").string());
  }
  nlohmann::ordered_json meta;
  meta["format"] = "lfpp-field-v1";
  meta["dim"] = s.dim;
  meta["scale_index"] = s.scale_index;
  meta["spacing"] = s.spacing();
  meta["sites_per_axis"] = sample.lattice().side();
  meta["padding_factor"] = s.padding_factor;
  meta["torus_points"] = s.torus_points();
  meta["layer_base_scale"] = s.layer_base_scale;
  meta["master_seed"] = s.master_seed;
  meta["job_key"] = s.job_key;
  meta["centered"] = sample.centered();
  std::ofstream js(with_suffix(base, ".json"), std::ios::trunc);
  if (!js) fail(ErrorKind::io, "cannot open " + with_suffix(base, ".json").string());
  js << meta.dump(2) << '\n';
}

FieldSample load_snapshot(const std::filesystem::path& base) {
  std::ifstream is(with_suffix(base, ".bin"), std::ios::binary);
  if (!is) fail(ErrorKind::io, "cannot open " + with_suffix(base, ".bin").string());
  FieldSpec spec;
  spec.dim = get_le<std::int32_t>(is);
  spec.scale_index = get_le<std::int32_t>(is);
  spec.master_seed = get_le<std::uint64_t>(is);
  spec.job_key = get_le<std::uint64_t>(is);
  const bool centered = get_le<std::int32_t>(is) != 0;

  if (std::ifstream js(with_suffix(base, ".json")); js) {
    const auto meta = nlohmann::json::parse(js, nullptr, false);
    if (meta.is_discarded()) fail(ErrorKind::io, "unreadable snapshot metadata");
    spec.padding_factor = meta.value("padding_factor", spec.padding_factor);
    spec.layer_base_scale = meta.value("layer_base_scale", spec.layer_base_scale);
  }
  spec.validate();
  std::vector<double> values(spec.lattice().size());
  for (double& v : values) v = get_le<double>(is);
  if (is.peek() != std::char_traits<char>::eof()) fail(ErrorKind::io, "snapshot has trailing bytes");
  return FieldSample(spec, std::move(values), centered);
}

}  // namespace lfpp

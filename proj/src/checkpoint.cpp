#include <bit>
#include <cstring>
#include <fstream>

#include "viewsyn/io.hpp"
#include "viewsyn/model.hpp"

namespace viewsyn {

namespace {

constexpr char kMagic[8] = {'V', 'S', 'C', 'K', 'P', 'T', '0', '1'};

void put_u64(std::ostream& os, std::uint64_t v) {
  char b[8];
  for (int k = 0; k < 8; ++k) b[k] = static_cast<char>((v >> (8 * k)) & 0xff);
  os.write(b, 8);
}

void put_f64(std::ostream& os, double v) { put_u64(os, std::bit_cast<std::uint64_t>(v)); }

std::uint64_t get_u64(std::istream& is, const std::string& path) {
  const std::streamoff offset = is.tellg();
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8))
    throw FormatError(FormatError::Kind::Truncated, path, offset, "checkpoint ends early");
  std::uint64_t v = 0;
  for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(b[k]) << (8 * k);
  return v;
}

double get_f64(std::istream& is, const std::string& path) { return std::bit_cast<double>(get_u64(is, path)); }

}  // namespace

void save_checkpoint(const SnippetState& state, const std::filesystem::path& path) {
  state.validate();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os.write(kMagic, sizeof kMagic);
  const ParameterLayout& l = state.layout;
  for (std::uint64_t v : {std::uint64_t(l.height()), std::uint64_t(l.width()), std::uint64_t(l.num_sources()),
                          std::uint64_t(l.num_levels()), std::uint64_t(l.with_masks() ? 1 : 0),
                          std::uint64_t(state.target_index), std::uint64_t(state.params.size())})
    put_u64(os, v);
  const Intrinsics& K = state.intrinsics;
  for (double v : {K.fx, K.fy, K.cx, K.cy}) put_f64(os, v);
  for (double v : state.params) put_f64(os, v);
  if (!os) throw IoError("write failed for " + path.string());
}

void load_checkpoint(SnippetState& state, const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  const std::string name = path.string();
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
    throw FormatError(FormatError::Kind::BadMagic, name, 0, "not a viewsyn checkpoint");
  std::uint64_t header[7];
  for (auto& h : header) h = get_u64(is, name);
  const ParameterLayout stored(static_cast<int>(header[0]), static_cast<int>(header[1]),
                               static_cast<int>(header[2]), static_cast<int>(header[3]), header[4] != 0);
  if (!(stored == state.layout) || header[6] != state.params.size() ||
      static_cast<int>(header[5]) != state.target_index)
    throw FormatError(FormatError::Kind::DimensionMismatch, name, 8, "checkpoint layout does not match the snippet");
  for (int k = 0; k < 4; ++k) get_f64(is, name);
  std::vector<double> params(header[6]);
  for (double& v : params) v = get_f64(is, name);
  if (is.peek() != std::char_traits<char>::eof())
    throw FormatError(FormatError::Kind::DimensionMismatch, name, is.tellg(), "trailing bytes after parameters");
  state.params = std::move(params);
}

}  // namespace viewsyn

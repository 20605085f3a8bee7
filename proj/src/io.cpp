#include "viewsyn/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <Eigen/Dense>

namespace viewsyn {

namespace fs = std::filesystem;

namespace {

std::string kind_name(FormatError::Kind kind) {
  switch (kind) {
    case FormatError::Kind::BadMagic: return "bad magic";
    case FormatError::Kind::MalformedHeader: return "malformed header";
    case FormatError::Kind::DimensionMismatch: return "dimension mismatch";
    case FormatError::Kind::Truncated: return "truncated file";
    case FormatError::Kind::MissingKey: return "missing key";
    case FormatError::Kind::BadValue: return "bad value";
  }
  return "format error";
}

std::string describe(FormatError::Kind kind, const std::string& path, long long offset, const std::string& detail) {
  std::string msg = path + ": " + kind_name(kind);
  if (offset >= 0) msg += " at offset " + std::to_string(offset);
  return msg + ": " + detail;
}

std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream is(path, mode);
  if (!is) throw IoError("cannot open " + path.string());
  return is;
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream os(path, mode);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  return os;
}

// Strips comments and surrounding whitespace.
std::string clean_line(std::string line) {
  if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
  const auto first = line.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = line.find_last_not_of(" \t\r");
  return line.substr(first, last - first + 1);
}

bool parse_double(const std::string& token, double& out) {
  std::istringstream ss(token);
  ss >> out;
  return ss && ss.peek() == std::char_traits<char>::eof() && std::isfinite(out);
}

bool parse_int(const std::string& token, long long& out) {
  std::istringstream ss(token);
  ss >> out;
  return ss && ss.peek() == std::char_traits<char>::eof();
}

fs::path resolve(const fs::path& base_dir, const std::string& name) {
  const fs::path p(name);
  return p.is_absolute() ? p : base_dir / p;
}

}  // namespace

FormatError::FormatError(Kind kind, const std::string& path, long long offset, const std::string& detail)
    : IoError(describe(kind, path, offset, detail)), kind_(kind), offset_(offset) {}

void write_wf(const Image& img, const fs::path& path) {
  auto os = open_out(path, std::ios::binary);
  os << "WF01\n" << img.height() << ' ' << img.width() << ' ' << img.channels() << '\n';
  std::vector<char> bytes(img.size() * 4);
  std::size_t k = 0;
  for (double v : img.data()) {
    const std::uint32_t bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
    for (int b = 0; b < 4; ++b) bytes[k++] = static_cast<char>((bits >> (8 * b)) & 0xff);
  }
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw IoError("write failed for " + path.string());
}

Image read_wf(const fs::path& path) {
  auto is = open_in(path, std::ios::binary);
  const std::string name = path.string();
  char magic[5] = {};
  if (!is.read(magic, 5) || std::string(magic, 5) != "WF01\n")
    throw FormatError(FormatError::Kind::BadMagic, name, 0, "expected \"WF01\"");

  std::string header;
  char ch;
  while (is.get(ch) && ch != '\n' && header.size() < 64) header.push_back(ch);
  if (ch != '\n') throw FormatError(FormatError::Kind::MalformedHeader, name, 5, "unterminated header line");
  std::istringstream hs(header);
  long long h = 0, w = 0, c = 0;
  std::string extra;
  if (!(hs >> h >> w >> c) || (hs >> extra) || h <= 0 || w <= 0 || c <= 0 || h > (1 << 20) ||
      w > (1 << 20) || c > 64)
    throw FormatError(FormatError::Kind::MalformedHeader, name, 5, "expected \"H W C\", got \"" + header + "\"");

  const long long data_offset = 5 + static_cast<long long>(header.size()) + 1;
  Image img(static_cast<int>(h), static_cast<int>(w), static_cast<int>(c));
  std::vector<unsigned char> bytes(img.size() * 4);
  is.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (static_cast<std::size_t>(is.gcount()) != bytes.size())
    throw FormatError(FormatError::Kind::Truncated, name, data_offset + is.gcount(),
                      "expected " + std::to_string(bytes.size()) + " data bytes");
  if (is.peek() != std::char_traits<char>::eof())
    throw FormatError(FormatError::Kind::DimensionMismatch, name,
                      data_offset + static_cast<long long>(bytes.size()), "data longer than H*W*C");
  auto data = img.data();
  for (std::size_t k = 0; k < data.size(); ++k) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(bytes[4 * k + b]) << (8 * b);
    data[k] = std::bit_cast<float>(bits);
  }
  return img;
}

void write_pnm(const Image& img, const fs::path& path) {
  if (img.channels() != 1 && img.channels() != 3)
    throw std::invalid_argument("write_pnm: need 1 or 3 channels");
  auto os = open_out(path, std::ios::binary);
  os << (img.channels() == 1 ? "P5" : "P6") << '\n' << img.width() << ' ' << img.height() << "\n255\n";
  std::vector<char> bytes(img.size());
  auto data = img.data();
  for (std::size_t k = 0; k < data.size(); ++k)
    bytes[k] = static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(data[k], 0.0, 1.0) * 255.0)));
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Image read_pnm(const fs::path& path) {
  auto is = open_in(path, std::ios::binary);
  const std::string name = path.string();
  std::string magic;
  is >> magic;
  if (magic != "P5" && magic != "P6") throw FormatError(FormatError::Kind::BadMagic, name, 0, "expected P5 or P6");
  long long w = 0, h = 0, maxval = 0;
  auto next_int = [&](long long& v) {
    is >> std::ws;
    while (is.peek() == '#') {
      std::string skip;
      std::getline(is, skip);
      is >> std::ws;
    }
    if (!(is >> v)) throw FormatError(FormatError::Kind::MalformedHeader, name, is.tellg(), "bad PNM header");
  };
  next_int(w);
  next_int(h);
  next_int(maxval);
  if (w <= 0 || h <= 0 || maxval != 255)
    throw FormatError(FormatError::Kind::MalformedHeader, name, 2, "only maxval 255 is supported");
  is.get();
  const int channels = magic == "P5" ? 1 : 3;
  Image img(static_cast<int>(h), static_cast<int>(w), channels);
  std::vector<unsigned char> bytes(img.size());
  const long long offset = is.tellg();
  is.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (static_cast<std::size_t>(is.gcount()) != bytes.size())
    throw FormatError(FormatError::Kind::Truncated, name, offset + is.gcount(), "pixel data ends early");
  auto data = img.data();
  for (std::size_t k = 0; k < data.size(); ++k) data[k] = bytes[k] / 255.0;
  return img;
}

Image read_image(const fs::path& path) {
  const std::string ext = path.extension().string();
  if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") return read_pnm(path);
  return read_wf(path);
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_intrinsics(const Intrinsics& K, const fs::path& path) {
  auto os = open_out(path);
  os << "fx " << format_double(K.fx) << '\n'
     << "fy " << format_double(K.fy) << '\n'
     << "cx " << format_double(K.cx) << '\n'
     << "cy " << format_double(K.cy) << '\n'
     << "width " << K.width << '\n'
     << "height " << K.height << '\n';
}

Intrinsics read_intrinsics(const fs::path& path) {
  auto is = open_in(path);
  const std::string name = path.string();
  std::map<std::string, std::string> values;
  std::string line;
  for (long long lineno = 1; std::getline(is, line); ++lineno) {
    line = clean_line(line);
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string key, value, extra;
    if (!(ls >> key >> value) || (ls >> extra))
      throw FormatError(FormatError::Kind::MalformedHeader, name, lineno, "expected \"key value\"");
    static const char* known[] = {"fx", "fy", "cx", "cy", "width", "height"};
    if (std::find(std::begin(known), std::end(known), key) == std::end(known))
      throw FormatError(FormatError::Kind::BadValue, name, lineno, "unknown key '" + key + "'");
    values[key] = value;
  }
  Intrinsics K;
  auto real = [&](const char* key, double& out) {
    auto it = values.find(key);
    if (it == values.end()) throw FormatError(FormatError::Kind::MissingKey, name, -1, std::string("key '") + key + "'");
    if (!parse_double(it->second, out))
      throw FormatError(FormatError::Kind::BadValue, name, -1, std::string("key '") + key + "' is not a number");
  };
  auto integer = [&](const char* key, int& out) {
    auto it = values.find(key);
    if (it == values.end()) throw FormatError(FormatError::Kind::MissingKey, name, -1, std::string("key '") + key + "'");
    long long v = 0;
    if (!parse_int(it->second, v) || v <= 0 || v > (1 << 20))
      throw FormatError(FormatError::Kind::BadValue, name, -1, std::string("key '") + key + "' is not a positive integer");
    out = static_cast<int>(v);
  };
  real("fx", K.fx);
  real("fy", K.fy);
  real("cx", K.cx);
  real("cy", K.cy);
  integer("width", K.width);
  integer("height", K.height);
  try {
    K.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(FormatError::Kind::BadValue, name, -1, e.what());
  }
  return K;
}

void write_trajectory(const Trajectory& traj, const fs::path& path) {
  auto os = open_out(path);
  for (const RigidTransform& t : traj) {
    const Eigen::Matrix4d m = t.matrix();
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 4; ++c) os << format_double(m(r, c)) << (r == 2 && c == 3 ? '\n' : ' ');
  }
  if (!os) throw IoError("write failed for " + path.string());
}

Trajectory read_trajectory(const fs::path& path) {
  auto is = open_in(path);
  const std::string name = path.string();
  Trajectory traj;
  std::string line;
  for (long long lineno = 1; std::getline(is, line); ++lineno) {
    line = clean_line(line);
    if (line.empty()) continue;
    std::istringstream ls(line);
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    std::string token;
    int count = 0;
    while (ls >> token) {
      double v = 0.0;
      if (count >= 12 || !parse_double(token, v))
        throw FormatError(FormatError::Kind::BadValue, name, lineno, "expected 12 numbers per pose");
      m(count / 4, count % 4) = v;
      ++count;
    }
    if (count != 12) throw FormatError(FormatError::Kind::BadValue, name, lineno, "expected 12 numbers per pose");
    Eigen::Matrix3d r = m.topLeftCorner<3, 3>();
    const double drift = (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
    if (drift > 1e-9 || std::abs(r.determinant() - 1.0) > 1e-9) {
      // Files printed with few digits are re-projected onto SO(3); anything
      // further off is rejected.
      if (drift > 1e-4 || r.determinant() <= 0.0)
        throw FormatError(FormatError::Kind::BadValue, name, lineno, "rotation block is not a rotation");
      Eigen::JacobiSVD<Eigen::Matrix3d> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
      r = svd.matrixU() * svd.matrixV().transpose();
    }
    traj.emplace_back(r, m.topRightCorner<3, 1>());
  }
  return traj;
}

void SnippetSequence::validate() const {
  if (frames.empty()) throw std::invalid_argument("sequence: no frames");
  for (const Image& f : frames)
    if (!f.same_shape(frames.front())) throw std::invalid_argument("sequence: frames differ in size");
  if (target_index < 0 || target_index >= static_cast<int>(frames.size()))
    throw std::invalid_argument("sequence: target index out of range");
  if (intrinsics.width != frames.front().width() || intrinsics.height != frames.front().height())
    throw std::invalid_argument("sequence: intrinsics do not match the frames");
  if (!gt_depth.empty()) {
    if (gt_depth.size() != frames.size()) throw std::invalid_argument("sequence: need one depth map per frame");
    for (const Image& d : gt_depth)
      if (d.height() != frames.front().height() || d.width() != frames.front().width() || d.channels() != 1)
        throw std::invalid_argument("sequence: depth map size mismatch");
  }
  if (!gt_poses.empty() && gt_poses.size() != frames.size())
    throw std::invalid_argument("sequence: need one pose per frame");
}

fs::path save_sequence(const SnippetSequence& seq, const fs::path& dir) {
  seq.validate();
  fs::create_directories(dir);
  std::ostringstream manifest;
  manifest << "# viewsyn sequence\n";
  manifest << "intrinsics intrinsics.txt\n";
  write_intrinsics(seq.intrinsics, dir / "intrinsics.txt");
  manifest << "target " << seq.target_index << '\n';
  char name[64];
  for (std::size_t k = 0; k < seq.frames.size(); ++k) {
    std::snprintf(name, sizeof name, "frame_%03zu", k);
    write_wf(seq.frames[k], dir / (std::string(name) + ".wf"));
    if (seq.frames[k].channels() == 1 || seq.frames[k].channels() == 3)
      write_pnm(seq.frames[k], dir / (std::string(name) + (seq.frames[k].channels() == 1 ? ".pgm" : ".ppm")));
    manifest << "frame " << name << ".wf\n";
  }
  for (std::size_t k = 0; k < seq.gt_depth.size(); ++k) {
    std::snprintf(name, sizeof name, "depth_%03zu.wf", k);
    write_wf(seq.gt_depth[k], dir / name);
    manifest << "depth " << name << '\n';
  }
  if (!seq.gt_poses.empty()) {
    write_trajectory(seq.gt_poses, dir / "poses.txt");
    manifest << "poses poses.txt\n";
  }
  const fs::path manifest_path = dir / "sequence.txt";
  auto os = open_out(manifest_path);
  os << manifest.str();
  return manifest_path;
}

SnippetSequence load_sequence(const fs::path& path) {
  const fs::path manifest_path = fs::is_directory(path) ? path / "sequence.txt" : path;
  auto is = open_in(manifest_path);
  const std::string name = manifest_path.string();
  const fs::path base = manifest_path.parent_path();

  SnippetSequence seq;
  bool have_intrinsics = false, have_target = false;
  std::string line;
  for (long long lineno = 1; std::getline(is, line); ++lineno) {
    line = clean_line(line);
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string key, value, extra;
    if (!(ls >> key >> value) || (ls >> extra))
      throw FormatError(FormatError::Kind::MalformedHeader, name, lineno, "expected \"key value\"");
    if (key == "intrinsics") {
      seq.intrinsics = read_intrinsics(resolve(base, value));
      have_intrinsics = true;
    } else if (key == "target") {
      long long t = 0;
      if (!parse_int(value, t) || t < 0) throw FormatError(FormatError::Kind::BadValue, name, lineno, "bad target index");
      seq.target_index = static_cast<int>(t);
      have_target = true;
    } else if (key == "frame") {
      seq.frames.push_back(read_image(resolve(base, value)));
    } else if (key == "depth") {
      seq.gt_depth.push_back(read_wf(resolve(base, value)));
    } else if (key == "poses") {
      seq.gt_poses = read_trajectory(resolve(base, value));
    } else {
      throw FormatError(FormatError::Kind::BadValue, name, lineno, "unknown key '" + key + "'");
    }
  }
  if (!have_intrinsics) throw FormatError(FormatError::Kind::MissingKey, name, -1, "key 'intrinsics'");
  if (!have_target) throw FormatError(FormatError::Kind::MissingKey, name, -1, "key 'target'");
  if (seq.frames.empty()) throw FormatError(FormatError::Kind::MissingKey, name, -1, "key 'frame'");
  for (const Image& f : seq.frames)
    if (!f.same_shape(seq.frames.front()))
      throw FormatError(FormatError::Kind::DimensionMismatch, name, -1, "frames differ in size");
  try {
    seq.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(FormatError::Kind::DimensionMismatch, name, -1, e.what());
  }
  return seq;
}

}  // namespace viewsyn

#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "viewsyn/geometry.hpp"
#include "viewsyn/image.hpp"

namespace viewsyn {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A file that exists but cannot be decoded. `offset()` is the byte offset
/// (binary files) or 1-based line number (text files) of the problem, or -1
/// when the problem is an absent key.
class FormatError : public IoError {
 public:
  enum class Kind { BadMagic, MalformedHeader, DimensionMismatch, Truncated, MissingKey, BadValue };

  FormatError(Kind kind, const std::string& path, long long offset, const std::string& detail);

  Kind kind() const { return kind_; }
  long long offset() const { return offset_; }

 private:
  Kind kind_;
  long long offset_;
};

/// WF01 container: the 4 bytes "WF01", '\n', an ASCII line "H W C\n", then
/// H*W*C little-endian IEEE-754 binary32 values in row-major order.
void write_wf(const Image& img, const std::filesystem::path& path);
Image read_wf(const std::filesystem::path& path);

/// Binary PGM (1 channel) or PPM (3 channels), maxval 255. Values are
/// clamped to [0, 1] and rounded; reading maps back to [0, 1].
void write_pnm(const Image& img, const std::filesystem::path& path);
Image read_pnm(const std::filesystem::path& path);

/// Reads WF01 or PGM/PPM, chosen by extension (.pgm/.ppm/.pnm, else WF01).
Image read_image(const std::filesystem::path& path);

/// "key value" lines with keys fx fy cx cy width height; '#' starts a comment.
void write_intrinsics(const Intrinsics& K, const std::filesystem::path& path);
Intrinsics read_intrinsics(const std::filesystem::path& path);

/// Formats a double with 17 significant digits (round-trips exactly).
std::string format_double(double v);

/// One pose per line: 12 numbers, the row-major 3x4 [R | t] of the
/// camera-to-world transform. Written with 17 significant digits.
void write_trajectory(const Trajectory& traj, const std::filesystem::path& path);
Trajectory read_trajectory(const std::filesystem::path& path);

struct SnippetSequence {
  std::vector<Image> frames;
  Intrinsics intrinsics;
  std::vector<Image> gt_depth;                 ///< empty, or one per frame
  Trajectory gt_poses;                         ///< empty, or camera-to-world per frame
  int target_index = 0;

  /// Throws std::invalid_argument on inconsistent sizes or target index.
  void validate() const;
};

/// Writes frames (WF01 plus a PGM/PPM preview), intrinsics, optional ground
/// truth, and the manifest `sequence.txt` into `dir`. Returns the manifest path.
std::filesystem::path save_sequence(const SnippetSequence& seq, const std::filesystem::path& dir);

/// Loads a manifest, or `dir/sequence.txt` when given a directory. Manifest
/// lines: "intrinsics <file>", "target <index>", "frame <file>" (in order),
/// and optionally "depth <file>" per frame and "poses <trajectory file>".
/// Relative paths resolve against the manifest's directory.
SnippetSequence load_sequence(const std::filesystem::path& path);

}  // namespace viewsyn

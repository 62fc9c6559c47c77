#pragma once

// NIfTI-1 reader/writer for 3D scalar volumes (.nii, .nii.gz, .hdr/.img).

#include <cortexforge/volume.hpp>

#include <zlib.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace cortexforge {

namespace nifti {

inline constexpr int kHeaderSize = 348;
inline constexpr int kDefaultVoxOffset = 352;

enum DataType : std::int16_t { kUint8 = 2, kInt16 = 4, kFloat32 = 16 };

/// Raw header fields in host byte order. Only the fields this library honours
/// are decoded; everything else is written as zero.
struct Header {
  std::array<std::int16_t, 8> dim{};
  std::int16_t datatype = 0;
  std::int16_t bitpix = 0;
  std::array<float, 8> pixdim{};
  float vox_offset = kDefaultVoxOffset;
  float scl_slope = 0.0f;
  float scl_inter = 0.0f;
  std::int16_t qform_code = 0;
  std::int16_t sform_code = 0;
  float quatern_b = 0, quatern_c = 0, quatern_d = 0;
  float qoffset_x = 0, qoffset_y = 0, qoffset_z = 0;
  std::array<float, 4> srow_x{}, srow_y{}, srow_z{};
  std::string descrip;
  std::string intent_name;
  std::string magic;
};

namespace detail {

inline bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

/// Reads a whole file; gzip streams are inflated transparently.
inline std::vector<std::uint8_t> read_file(const std::string& path) {
  if (!std::filesystem::exists(path)) throw IoError("no such file: " + path);
  gzFile f = gzopen(path.c_str(), "rb");
  if (!f) throw IoError("cannot open " + path);
  std::vector<std::uint8_t> bytes;
  std::array<std::uint8_t, 1 << 16> chunk;
  for (;;) {
    const int n = gzread(f, chunk.data(), static_cast<unsigned>(chunk.size()));
    if (n < 0) {
      gzclose(f);
      throw FormatError("corrupt compressed stream in " + path);
    }
    if (n == 0) break;
    bytes.insert(bytes.end(), chunk.begin(), chunk.begin() + n);
  }
  gzclose(f);
  return bytes;
}

inline void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  if (ends_with(path, ".gz")) {
    gzFile f = gzopen(path.c_str(), "wb6");
    if (!f) throw IoError("cannot write " + path);
    const int n = gzwrite(f, bytes.data(), static_cast<unsigned>(bytes.size()));
    if (gzclose(f) != Z_OK || n != static_cast<int>(bytes.size())) {
      throw IoError("failed writing " + path);
    }
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path);
}

class ByteReader {
 public:
  ByteReader(const std::vector<std::uint8_t>& bytes, bool swap) : bytes_(bytes), swap_(swap) {}

  template <typename T>
  T get(std::size_t offset) const {
    if (offset + sizeof(T) > bytes_.size()) throw FormatError("truncated NIfTI header");
    std::array<std::uint8_t, sizeof(T)> raw;
    std::memcpy(raw.data(), bytes_.data() + offset, sizeof(T));
    if (swap_) std::reverse(raw.begin(), raw.end());
    return std::bit_cast<T>(raw);
  }

  std::string text(std::size_t offset, std::size_t len) const {
    std::string s(reinterpret_cast<const char*>(bytes_.data() + offset), len);
    return s.substr(0, s.find('\0'));
  }

 private:
  const std::vector<std::uint8_t>& bytes_;
  bool swap_;
};

template <typename T>
void put(std::vector<std::uint8_t>& bytes, std::size_t offset, T value) {
  static_assert(std::endian::native == std::endian::little, "writer assumes a little-endian host");
  std::memcpy(bytes.data() + offset, &value, sizeof(T));
}

inline void put_text(std::vector<std::uint8_t>& bytes, std::size_t offset, std::size_t len,
                     const std::string& s) {
  std::memcpy(bytes.data() + offset, s.data(), std::min(len - 1, s.size()));
}

}  // namespace detail

/// Decodes a header from the first 348 bytes; `swapped` reports byte order.
inline Header parse_header(const std::vector<std::uint8_t>& bytes, bool& swapped) {
  if (bytes.size() < static_cast<std::size_t>(kHeaderSize)) throw FormatError("file shorter than a NIfTI-1 header");
  std::int32_t size_native;
  std::memcpy(&size_native, bytes.data(), 4);
  if (size_native == kHeaderSize) {
    swapped = false;
  } else if (__builtin_bswap32(static_cast<std::uint32_t>(size_native)) == kHeaderSize) {
    swapped = true;
  } else {
    throw FormatError("sizeof_hdr is not 348");
  }
  const detail::ByteReader r(bytes, swapped);
  Header h;
  h.magic = std::string(reinterpret_cast<const char*>(bytes.data() + 344), 4);
  if (h.magic != std::string("n+1\0", 4) && h.magic != std::string("ni1\0", 4)) {
    throw FormatError("missing NIfTI-1 magic");
  }
  for (int i = 0; i < 8; ++i) h.dim[i] = r.get<std::int16_t>(40 + 2 * i);
  h.datatype = r.get<std::int16_t>(70);
  h.bitpix = r.get<std::int16_t>(72);
  for (int i = 0; i < 8; ++i) h.pixdim[i] = r.get<float>(76 + 4 * i);
  h.vox_offset = r.get<float>(108);
  h.scl_slope = r.get<float>(112);
  h.scl_inter = r.get<float>(116);
  h.descrip = r.text(148, 80);
  h.qform_code = r.get<std::int16_t>(252);
  h.sform_code = r.get<std::int16_t>(254);
  h.quatern_b = r.get<float>(256);
  h.quatern_c = r.get<float>(260);
  h.quatern_d = r.get<float>(264);
  h.qoffset_x = r.get<float>(268);
  h.qoffset_y = r.get<float>(272);
  h.qoffset_z = r.get<float>(276);
  for (int i = 0; i < 4; ++i) {
    h.srow_x[i] = r.get<float>(280 + 4 * i);
    h.srow_y[i] = r.get<float>(296 + 4 * i);
    h.srow_z[i] = r.get<float>(312 + 4 * i);
  }
  h.intent_name = r.text(328, 16);
  return h;
}

/// Voxel-to-world matrix: sform when sform_code > 0, else qform when
/// qform_code > 0, else a pixdim scaling.
inline Mat4 header_affine(const Header& h) {
  Mat4 m = Mat4::Identity();
  if (h.sform_code > 0) {
    for (int c = 0; c < 4; ++c) {
      m(0, c) = h.srow_x[c];
      m(1, c) = h.srow_y[c];
      m(2, c) = h.srow_z[c];
    }
    return m;
  }
  const double dx = h.pixdim[1], dy = h.pixdim[2], dz = h.pixdim[3];
  if (h.qform_code > 0) {
    double b = h.quatern_b, c = h.quatern_c, d = h.quatern_d;
    double a = 1.0 - (b * b + c * c + d * d);
    if (a < 1e-7) {
      // 180-degree rotation: renormalize (b, c, d) and set a = 0.
      a = 1.0 / std::sqrt(b * b + c * c + d * d);
      b *= a;
      c *= a;
      d *= a;
      a = 0.0;
    } else {
      a = std::sqrt(a);
    }
    const double qfac = h.pixdim[0] < 0.0f ? -1.0 : 1.0;
    Mat3 r;
    r << a * a + b * b - c * c - d * d, 2 * (b * c - a * d), 2 * (b * d + a * c),
        2 * (b * c + a * d), a * a + c * c - b * b - d * d, 2 * (c * d - a * b),
        2 * (b * d - a * c), 2 * (c * d + a * b), a * a + d * d - c * c - b * b;
    m.topLeftCorner<3, 3>() = r * Vec3(dx, dy, qfac * dz).asDiagonal();
    m(0, 3) = h.qoffset_x;
    m(1, 3) = h.qoffset_y;
    m(2, 3) = h.qoffset_z;
    return m;
  }
  m(0, 0) = dx != 0.0 ? dx : 1.0;
  m(1, 1) = dy != 0.0 ? dy : 1.0;
  m(2, 2) = dz != 0.0 ? dz : 1.0;
  return m;
}

}  // namespace nifti

struct NiftiImage {
  VoxelGrid grid;
  std::string description;
};

inline NiftiImage read_nifti(const std::string& path) {
  const auto bytes = nifti::detail::read_file(path);
  bool swapped = false;
  const nifti::Header h = nifti::parse_header(bytes, swapped);

  const int ndim = h.dim[0];
  if (ndim < 1 || ndim > 7) throw FormatError("dim[0] out of range in " + path);
  if (ndim < 3) throw DimensionalityError("volume has fewer than 3 dimensions: " + path);
  for (int d = 4; d <= ndim; ++d) {
    if (h.dim[d] > 1) throw DimensionalityError("only 3D volumes are supported: " + path);
  }
  const Index3 shape{h.dim[1], h.dim[2], h.dim[3]};
  if (shape[0] <= 0 || shape[1] <= 0 || shape[2] <= 0) throw FormatError("non-positive dimension in " + path);

  std::size_t bytes_per_voxel = 0;
  switch (h.datatype) {
    case nifti::kUint8: bytes_per_voxel = 1; break;
    case nifti::kInt16: bytes_per_voxel = 2; break;
    case nifti::kFloat32: bytes_per_voxel = 4; break;
    default: throw UnsupportedError("unsupported NIfTI datatype " + std::to_string(h.datatype));
  }

  const bool pair_file = h.magic == std::string("ni1\0", 4);
  std::vector<std::uint8_t> image_bytes;
  std::size_t offset = 0;
  if (pair_file) {
    std::string img = path;
    if (nifti::detail::ends_with(img, ".hdr.gz")) {
      img.replace(img.size() - 7, 7, ".img.gz");
    } else if (nifti::detail::ends_with(img, ".hdr")) {
      img.replace(img.size() - 4, 4, ".img");
    } else {
      throw FormatError("ni1 header must be a .hdr file: " + path);
    }
    image_bytes = nifti::detail::read_file(img);
    offset = static_cast<std::size_t>(std::max(0.0f, h.vox_offset));
  } else {
    if (!(h.vox_offset >= nifti::kHeaderSize)) throw FormatError("vox_offset inside the header");
    offset = static_cast<std::size_t>(h.vox_offset);
  }
  const std::vector<std::uint8_t>& source = pair_file ? image_bytes : bytes;

  VoxelGrid grid;
  grid.shape = shape;
  try {
    grid.affine = Affine(nifti::header_affine(h));
  } catch (const GeometryError& e) {
    throw FormatError(std::string("invalid orientation in header: ") + e.what());
  }
  const std::size_t count = grid.voxel_count();
  if (offset + count * bytes_per_voxel > source.size()) throw FormatError("truncated voxel data in " + path);

  grid.data.resize(count);
  const nifti::detail::ByteReader r(source, swapped);
  for (std::size_t n = 0; n < count; ++n) {
    const std::size_t at = offset + n * bytes_per_voxel;
    switch (h.datatype) {
      case nifti::kUint8: grid.data[n] = source[at]; break;
      case nifti::kInt16: grid.data[n] = r.get<std::int16_t>(at); break;
      default: grid.data[n] = r.get<float>(at); break;
    }
  }
  const bool rescale = h.scl_slope != 0.0f && std::isfinite(h.scl_slope) &&
                       !(h.scl_slope == 1.0f && h.scl_inter == 0.0f);
  if (rescale) {
    for (float& v : grid.data) {
      v = static_cast<float>(static_cast<double>(v) * h.scl_slope + h.scl_inter);
    }
  }

  grid.kind = h.datatype == nifti::kFloat32 || rescale ? GridKind::intensity : GridKind::label;
  for (GridKind k : {GridKind::intensity, GridKind::label, GridKind::mask, GridKind::sdf}) {
    if (h.intent_name == to_string(k)) grid.kind = k;
  }
  if (grid.kind == GridKind::mask || grid.kind == GridKind::label) {
    try {
      grid.validate();
    } catch (const KindError&) {
      grid.kind = GridKind::intensity;
    }
  }
  return {std::move(grid), h.descrip};
}

inline VoxelGrid load_nifti(const std::string& path) { return read_nifti(path).grid; }

/// Writes a single-file NIfTI-1 volume (gzip-compressed when the path ends in
/// .gz). Intensity and sdf grids are stored as float32; masks as uint8;
/// labels as uint8 when the maximum label is <= 255, else int16.
inline void save_nifti(const VoxelGrid& grid, const std::string& path,
                       const std::string& description = "") {
  grid.validate();
  std::int16_t datatype = nifti::kFloat32;
  std::int16_t bitpix = 32;
  if (grid.kind == GridKind::mask || grid.kind == GridKind::label) {
    const float max_label = grid.data.empty() ? 0.0f : *std::max_element(grid.data.begin(), grid.data.end());
    if (max_label <= 255.0f) {
      datatype = nifti::kUint8;
      bitpix = 8;
    } else if (max_label <= 32767.0f) {
      datatype = nifti::kInt16;
      bitpix = 16;
    } else {
      throw UnsupportedError("label values above 32767 cannot be stored");
    }
  }
  const std::size_t count = grid.voxel_count();
  std::vector<std::uint8_t> bytes(nifti::kDefaultVoxOffset + count * (bitpix / 8), 0);
  using nifti::detail::put;
  put<std::int32_t>(bytes, 0, nifti::kHeaderSize);
  bytes[38] = 'r';
  const std::int16_t dims[8] = {3, static_cast<std::int16_t>(grid.shape[0]),
                                static_cast<std::int16_t>(grid.shape[1]),
                                static_cast<std::int16_t>(grid.shape[2]), 1, 1, 1, 1};
  for (int i = 0; i < 8; ++i) put<std::int16_t>(bytes, 40 + 2 * i, dims[i]);
  put<std::int16_t>(bytes, 70, datatype);
  put<std::int16_t>(bytes, 72, bitpix);
  const Vec3 spacing = grid.affine.spacing();
  const float qfac = grid.affine.linear().determinant() < 0.0 ? -1.0f : 1.0f;
  const float pixdim[8] = {qfac, static_cast<float>(spacing.x()), static_cast<float>(spacing.y()),
                           static_cast<float>(spacing.z()), 1, 1, 1, 1};
  for (int i = 0; i < 8; ++i) put<float>(bytes, 76 + 4 * i, pixdim[i]);
  put<float>(bytes, 108, static_cast<float>(nifti::kDefaultVoxOffset));
  put<float>(bytes, 112, 1.0f);
  put<float>(bytes, 116, 0.0f);
  bytes[123] = 2;  // xyzt_units: millimetres
  nifti::detail::put_text(bytes, 148, 80, description);
  put<std::int16_t>(bytes, 252, 0);
  put<std::int16_t>(bytes, 254, 1);
  const Mat4& m = grid.affine.matrix();
  for (int c = 0; c < 4; ++c) {
    put<float>(bytes, 280 + 4 * c, static_cast<float>(m(0, c)));
    put<float>(bytes, 296 + 4 * c, static_cast<float>(m(1, c)));
    put<float>(bytes, 312 + 4 * c, static_cast<float>(m(2, c)));
  }
  nifti::detail::put_text(bytes, 328, 16, std::string(to_string(grid.kind)));
  std::memcpy(bytes.data() + 344, "n+1\0", 4);

  std::uint8_t* out = bytes.data() + nifti::kDefaultVoxOffset;
  for (std::size_t n = 0; n < count; ++n) {
    switch (datatype) {
      case nifti::kUint8: out[n] = static_cast<std::uint8_t>(grid.data[n]); break;
      case nifti::kInt16: put<std::int16_t>(bytes, nifti::kDefaultVoxOffset + 2 * n,
                                            static_cast<std::int16_t>(grid.data[n])); break;
      default: put<float>(bytes, nifti::kDefaultVoxOffset + 4 * n, grid.data[n]); break;
    }
  }
  nifti::detail::write_file(path, bytes);
}

}  // namespace cortexforge

#include <cortexforge/nifti.hpp>

#include <gtest/gtest.h>

#include <cstring>
#include <fstream>
#include <random>

#include "oracles.hpp"

using namespace cortexforge;
using cortexforge::testing::random_nifti_grid;
using cortexforge::testing::TempDir;

namespace {

/// Minimal hand-assembled single-file header for reader tests.
std::vector<std::uint8_t> raw_header(std::int16_t datatype, std::int16_t bitpix, Index3 shape) {
  std::vector<std::uint8_t> b(352, 0);
  auto put = [&](std::size_t off, auto v) { std::memcpy(b.data() + off, &v, sizeof(v)); };
  put(0, std::int32_t{348});
  const std::int16_t dims[8] = {3, static_cast<std::int16_t>(shape[0]), static_cast<std::int16_t>(shape[1]),
                                static_cast<std::int16_t>(shape[2]), 1, 1, 1, 1};
  for (int i = 0; i < 8; ++i) put(40 + 2 * i, dims[i]);
  put(70, datatype);
  put(72, bitpix);
  const float pixdim[8] = {1, 1, 1, 1, 1, 1, 1, 1};
  for (int i = 0; i < 8; ++i) put(76 + 4 * i, pixdim[i]);
  put(108, 352.0f);
  std::memcpy(b.data() + 344, "n+1\0", 4);
  return b;
}

void write_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST(Nifti, Float32RoundTripIsBitExact) {
  TempDir dir("nifti");
  std::mt19937_64 rng(1);
  VoxelGrid g = random_nifti_grid(rng);
  g.shape = {8, 8, 8};
  g.data.resize(512);
  for (auto& v : g.data) v = std::uniform_real_distribution<float>(-5, 5)(rng);
  for (const std::string name : {"a.nii", "a.nii.gz"}) {
    save_nifti(g, dir.file(name));
    const VoxelGrid back = load_nifti(dir.file(name));
    EXPECT_EQ(back.shape, g.shape);
    EXPECT_EQ(back.affine, g.affine);
    EXPECT_EQ(0, std::memcmp(back.data.data(), g.data.data(), g.data.size() * sizeof(float)));
    EXPECT_EQ(back.kind, GridKind::intensity);
  }
}

TEST(Nifti, QformIdentityFallback) {
  TempDir dir("nifti");
  auto b = raw_header(nifti::kUint8, 8, {2, 2, 2});
  const std::int16_t qform = 1, sform = 0;
  std::memcpy(b.data() + 252, &qform, 2);
  std::memcpy(b.data() + 254, &sform, 2);
  b.resize(352 + 8, 1);
  write_bytes(dir.file("q.nii"), b);
  const VoxelGrid g = load_nifti(dir.file("q.nii"));
  EXPECT_EQ(g.affine.matrix(), Mat4::Identity());
}

TEST(Nifti, QformRotationAndQfac) {
  TempDir dir("nifti");
  auto b = raw_header(nifti::kUint8, 8, {2, 2, 2});
  const std::int16_t qform = 1;
  std::memcpy(b.data() + 252, &qform, 2);
  // 90 degrees about z: (b, c, d) = (0, 0, sin 45).
  const float qd = static_cast<float>(std::sqrt(0.5));
  std::memcpy(b.data() + 264, &qd, 4);
  const float pixdim[4] = {-1.0f, 2.0f, 3.0f, 4.0f};
  std::memcpy(b.data() + 76, pixdim, sizeof pixdim);
  b.resize(360, 0);
  write_bytes(dir.file("q.nii"), b);
  const Mat3 l = load_nifti(dir.file("q.nii")).affine.linear();
  Mat3 expected;
  expected << 0, -3, 0, 2, 0, 0, 0, 0, -4;
  EXPECT_LT((l - expected).norm(), 1e-6);
}

TEST(Nifti, SformPreferredOverQform) {
  TempDir dir("nifti");
  auto b = raw_header(nifti::kUint8, 8, {2, 2, 2});
  const std::int16_t one = 1;
  std::memcpy(b.data() + 252, &one, 2);
  std::memcpy(b.data() + 254, &one, 2);
  const float srow[12] = {2, 0, 0, 10, 0, 2, 0, 20, 0, 0, 2, 30};
  std::memcpy(b.data() + 280, srow, sizeof srow);
  b.resize(360, 0);
  write_bytes(dir.file("s.nii"), b);
  const Affine a = load_nifti(dir.file("s.nii")).affine;
  EXPECT_EQ(a.translation(), Vec3(10, 20, 30));
  EXPECT_EQ(a.spacing(), Vec3(2, 2, 2));
}

TEST(Nifti, Int16ScalingApplied) {
  TempDir dir("nifti");
  auto b = raw_header(nifti::kInt16, 16, {1, 1, 1});
  const float slope = 2.0f, inter = 1.0f;
  std::memcpy(b.data() + 112, &slope, 4);
  std::memcpy(b.data() + 116, &inter, 4);
  const std::int16_t value = 3;
  b.resize(354);
  std::memcpy(b.data() + 352, &value, 2);
  write_bytes(dir.file("i.nii"), b);
  EXPECT_EQ(load_nifti(dir.file("i.nii")).data.at(0), 7.0f);
}

TEST(Nifti, ByteSwappedFileIsRead) {
  TempDir dir("nifti");
  auto b = raw_header(nifti::kInt16, 16, {2, 1, 1});
  b.resize(356);
  const std::int16_t values[2] = {258, -3};
  std::memcpy(b.data() + 352, values, 4);
  // Swap every multi-byte field we wrote.
  auto swap_at = [&](std::size_t off, std::size_t len) { std::reverse(b.begin() + off, b.begin() + off + len); };
  swap_at(0, 4);
  for (int i = 0; i < 8; ++i) swap_at(40 + 2 * i, 2);
  swap_at(70, 2);
  swap_at(72, 2);
  for (int i = 0; i < 8; ++i) swap_at(76 + 4 * i, 4);
  swap_at(108, 4);
  swap_at(352, 2);
  swap_at(354, 2);
  write_bytes(dir.file("be.nii"), b);
  const VoxelGrid g = load_nifti(dir.file("be.nii"));
  EXPECT_EQ(g.data, (std::vector<float>{258.0f, -3.0f}));
}

TEST(Nifti, ErrorPaths) {
  TempDir dir("nifti");
  EXPECT_THROW(load_nifti(dir.file("missing.nii")), IoError);

  auto b = raw_header(nifti::kUint8, 8, {2, 2, 2});
  b.resize(360);
  auto bad_magic = b;
  std::memcpy(bad_magic.data() + 344, "xxxx", 4);
  write_bytes(dir.file("m.nii"), bad_magic);
  EXPECT_THROW(load_nifti(dir.file("m.nii")), FormatError);

  auto bad_type = raw_header(64 /* float64 */, 64, {1, 1, 1});
  bad_type.resize(360);
  write_bytes(dir.file("t.nii"), bad_type);
  EXPECT_THROW(load_nifti(dir.file("t.nii")), UnsupportedError);

  auto four_d = b;
  const std::int16_t dims[5] = {4, 2, 2, 2, 3};
  std::memcpy(four_d.data() + 40, dims, sizeof dims);
  four_d.resize(352 + 24);
  write_bytes(dir.file("d.nii"), four_d);
  EXPECT_THROW(load_nifti(dir.file("d.nii")), DimensionalityError);

  auto two_d = b;
  const std::int16_t dim0 = 2;
  std::memcpy(two_d.data() + 40, &dim0, 2);
  write_bytes(dir.file("2d.nii"), two_d);
  EXPECT_THROW(load_nifti(dir.file("2d.nii")), DimensionalityError);

  std::vector<std::uint8_t> truncated(b.begin(), b.begin() + 100);
  write_bytes(dir.file("short.nii"), truncated);
  EXPECT_THROW(load_nifti(dir.file("short.nii")), FormatError);

  auto short_data = raw_header(nifti::kUint8, 8, {4, 4, 4});
  write_bytes(dir.file("sd.nii"), short_data);
  EXPECT_THROW(load_nifti(dir.file("sd.nii")), FormatError);

  EXPECT_THROW(save_nifti(cortexforge::testing::unit_grid(2), dir.file("no/such/dir/x.nii")), IoError);
}

TEST(Nifti, LabelStorageFollowsRange) {
  TempDir dir("nifti");
  VoxelGrid g = cortexforge::testing::unit_grid(3, GridKind::label);
  g.data[0] = 255.0f;
  save_nifti(g, dir.file("u8.nii"));
  bool swapped = false;
  auto h = nifti::parse_header(nifti::detail::read_file(dir.file("u8.nii")), swapped);
  EXPECT_EQ(h.datatype, nifti::kUint8);
  g.data[0] = 300.0f;
  save_nifti(g, dir.file("i16.nii"));
  h = nifti::parse_header(nifti::detail::read_file(dir.file("i16.nii")), swapped);
  EXPECT_EQ(h.datatype, nifti::kInt16);
  const VoxelGrid back = load_nifti(dir.file("i16.nii"));
  EXPECT_EQ(back.kind, GridKind::label);
  EXPECT_EQ(back.data, g.data);
}

TEST(Nifti, KindAndDescriptionRoundTrip) {
  TempDir dir("nifti");
  VoxelGrid g = cortexforge::testing::unit_grid(3, GridKind::mask);
  g.data[4] = 1.0f;
  save_nifti(g, dir.file("mask.nii.gz"), "hello");
  const NiftiImage img = read_nifti(dir.file("mask.nii.gz"));
  EXPECT_EQ(img.grid.kind, GridKind::mask);
  EXPECT_EQ(img.description, "hello");
  EXPECT_EQ(img.grid.data, g.data);
}

TEST(Nifti, PairFileHeaderAndImage) {
  TempDir dir("nifti");
  auto b = raw_header(nifti::kUint8, 8, {2, 1, 1});
  std::memcpy(b.data() + 344, "ni1\0", 4);
  const float zero = 0.0f;
  std::memcpy(b.data() + 108, &zero, 4);
  b.resize(348);
  write_bytes(dir.file("p.hdr"), b);
  write_bytes(dir.file("p.img"), {5, 9});
  EXPECT_EQ(load_nifti(dir.file("p.hdr")).data, (std::vector<float>{5.0f, 9.0f}));
}

TEST(Nifti, RandomGridsRoundTripProperty) {
  TempDir dir("nifti");
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 25; ++trial) {
    const VoxelGrid g = random_nifti_grid(rng);
    const std::string path = dir.file(trial % 2 ? "r.nii.gz" : "r.nii");
    save_nifti(g, path);
    const VoxelGrid back = load_nifti(path);
    ASSERT_EQ(back.shape, g.shape);
    ASSERT_EQ(back.affine, g.affine);
    ASSERT_EQ(0, std::memcmp(back.data.data(), g.data.data(), g.data.size() * sizeof(float)));
  }
}

TEST(Nifti, GzipOutputIsDeterministic) {
  TempDir dir("nifti");
  std::mt19937_64 rng(4);
  const VoxelGrid g = random_nifti_grid(rng);
  save_nifti(g, dir.file("a.nii.gz"));
  save_nifti(g, dir.file("b.nii.gz"));
  std::ifstream a(dir.file("a.nii.gz"), std::ios::binary), b(dir.file("b.nii.gz"), std::ios::binary);
  const std::string sa((std::istreambuf_iterator<char>(a)), {}), sb((std::istreambuf_iterator<char>(b)), {});
  EXPECT_EQ(sa, sb);
}

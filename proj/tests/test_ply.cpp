#include <cortexforge/ply.hpp>
#include <cortexforge/shapes.hpp>

#include <gtest/gtest.h>

#include <fstream>

#include "test_support.hpp"

using namespace cortexforge;
using cortexforge::testing::TempDir;

namespace {

void write_text(const std::string& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

void expect_float_equal(const TriangleMesh& a, const TriangleMesh& b) {
  ASSERT_EQ(a.faces, b.faces);
  ASSERT_EQ(a.vertices.size(), b.vertices.size());
  for (std::size_t v = 0; v < a.vertices.size(); ++v) {
    for (int c = 0; c < 3; ++c) ASSERT_EQ(static_cast<float>(a.vertices[v][c]), b.vertices[v][c]);
  }
}

}  // namespace

TEST(Ply, RoundTripAllFormats) {
  TempDir dir("ply");
  const TriangleMesh m = icosphere(2, 12.345, Vec3(1.1, -2.2, 3.3));
  for (auto format : {ply::Format::ascii, ply::Format::binary_little_endian, ply::Format::binary_big_endian}) {
    const std::string path = dir.file("m.ply");
    write_ply(m, path, format);
    expect_float_equal(m, read_ply(path));
  }
}

TEST(Ply, ReaderToleratesExtraPropertiesAndPolygons) {
  TempDir dir("ply");
  write_text(dir.file("q.ply"),
             "ply\nformat ascii 1.0\ncomment quad\nelement vertex 4\n"
             "property float x\nproperty float nx\nproperty float y\nproperty float z\nproperty uchar red\n"
             "element face 1\nproperty list uchar int vertex_indices\nproperty int flags\n"
             "element material 1\nproperty float shininess\nend_header\n"
             "0 9 0 0 255\n1 9 0 0 255\n1 9 1 0 255\n0 9 1 0 255\n4 0 1 2 3 7\n0.5\n");
  const TriangleMesh m = read_ply(dir.file("q.ply"));
  ASSERT_EQ(m.vertices.size(), 4u);
  EXPECT_EQ(m.vertices[2], Vec3(1, 1, 0));
  ASSERT_EQ(m.faces.size(), 2u);
  EXPECT_EQ(m.faces[0], (Face{0, 1, 2}));
  EXPECT_EQ(m.faces[1], (Face{0, 2, 3}));
}

TEST(Ply, WriterEmitsExactlyTheDocumentedHeader) {
  TempDir dir("ply");
  write_ply(tetrahedron(Vec3::Zero(), 1.0), dir.file("t.ply"));
  std::ifstream in(dir.file("t.ply"), std::ios::binary);
  std::string header, line;
  while (std::getline(in, line)) {
    header += line + "\n";
    if (line == "end_header") break;
  }
  EXPECT_EQ(header,
            "ply\nformat binary_little_endian 1.0\nelement vertex 4\nproperty float x\nproperty float y\n"
            "property float z\nelement face 4\nproperty list uchar int vertex_indices\nend_header\n");
}

TEST(Ply, MalformedInputsThrow) {
  TempDir dir("ply");
  EXPECT_THROW(read_ply(dir.file("missing.ply")), IoError);
  write_text(dir.file("a.ply"), "obj\n");
  EXPECT_THROW(read_ply(dir.file("a.ply")), FormatError);
  write_text(dir.file("b.ply"),
             "ply\nformat ascii 1.0\nelement vertex 3\nproperty float x\nproperty float y\nproperty float z\n"
             "element face 1\nproperty list uchar int vertex_indices\nend_header\n0 0 0\n1 0 0\n0 1 0\n3 0 1 5\n");
  EXPECT_THROW(read_ply(dir.file("b.ply")), FormatError);
  write_text(dir.file("c.ply"),
             "ply\nformat ascii 1.0\nelement vertex 3\nproperty float x\nproperty float y\nproperty float z\n"
             "end_header\n0 0 0\n1 0\n");
  EXPECT_THROW(read_ply(dir.file("c.ply")), FormatError);
  write_text(dir.file("d.ply"), "ply\nformat binary_little_endian 1.0\nelement vertex 2\nproperty float x\n"
                                "property float y\nproperty float z\nend_header\n\x01\x02");
  EXPECT_THROW(read_ply(dir.file("d.ply")), FormatError);
}

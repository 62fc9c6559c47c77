#pragma once

// PLY triangle-mesh I/O (ascii, binary little/big endian).

#include <cortexforge/errors.hpp>
#include <cortexforge/mesh.hpp>

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace cortexforge {

namespace ply {

enum class Format { ascii, binary_little_endian, binary_big_endian };

struct Property {
  std::string name;
  std::string type;        // scalar type, or the item type of a list
  std::string count_type;  // non-empty for list properties
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> properties;
};

inline std::size_t type_size(const std::string& t) {
  if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
  if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
  if (t == "int" || t == "uint" || t == "float" || t == "int32" || t == "uint32" || t == "float32") return 4;
  if (t == "double" || t == "float64") return 8;
  throw FormatError("unknown PLY property type '" + t + "'");
}

namespace detail {

template <typename T>
T read_raw(std::istream& in, bool swap) {
  std::array<char, sizeof(T)> raw;
  if (!in.read(raw.data(), sizeof(T))) throw FormatError("truncated PLY body");
  if (swap) std::reverse(raw.begin(), raw.end());
  return std::bit_cast<T>(raw);
}

inline double read_binary(std::istream& in, const std::string& t, bool swap) {
  if (t == "char" || t == "int8") return read_raw<std::int8_t>(in, swap);
  if (t == "uchar" || t == "uint8") return read_raw<std::uint8_t>(in, swap);
  if (t == "short" || t == "int16") return read_raw<std::int16_t>(in, swap);
  if (t == "ushort" || t == "uint16") return read_raw<std::uint16_t>(in, swap);
  if (t == "int" || t == "int32") return read_raw<std::int32_t>(in, swap);
  if (t == "uint" || t == "uint32") return read_raw<std::uint32_t>(in, swap);
  if (t == "float" || t == "float32") return read_raw<float>(in, swap);
  if (t == "double" || t == "float64") return read_raw<double>(in, swap);
  throw FormatError("unknown PLY property type '" + t + "'");
}

}  // namespace detail

}  // namespace ply

inline TriangleMesh read_ply(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  std::getline(in, line);
  if (line.rfind("ply", 0) != 0) throw FormatError("missing 'ply' magic in " + path);

  ply::Format format = ply::Format::ascii;
  std::vector<ply::Element> elements;
  bool have_format = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "format") {
      std::string f;
      ls >> f;
      if (f == "ascii") format = ply::Format::ascii;
      else if (f == "binary_little_endian") format = ply::Format::binary_little_endian;
      else if (f == "binary_big_endian") format = ply::Format::binary_big_endian;
      else throw FormatError("unknown PLY format '" + f + "'");
      have_format = true;
    } else if (word == "element") {
      ply::Element e;
      if (!(ls >> e.name >> e.count)) throw FormatError("malformed PLY element line");
      elements.push_back(e);
    } else if (word == "property") {
      if (elements.empty()) throw FormatError("PLY property before any element");
      ply::Property p;
      std::string t;
      ls >> t;
      if (t == "list") {
        ls >> p.count_type >> p.type >> p.name;
      } else {
        p.type = t;
        ls >> p.name;
      }
      if (p.name.empty()) throw FormatError("malformed PLY property line");
      ply::type_size(p.type);
      if (!p.count_type.empty()) ply::type_size(p.count_type);
      elements.back().properties.push_back(p);
    } else if (word == "end_header") {
      break;
    } else if (word == "comment" || word == "obj_info" || word.empty()) {
      continue;
    } else {
      throw FormatError("unexpected PLY header line '" + line + "'");
    }
  }
  if (!have_format) throw FormatError("PLY header lacks a format line");

  const bool swap = (format == ply::Format::binary_big_endian) == (std::endian::native == std::endian::little);
  TriangleMesh mesh;
  for (const auto& e : elements) {
    int xi = -1, yi = -1, zi = -1, li = -1;
    for (std::size_t p = 0; p < e.properties.size(); ++p) {
      const auto& name = e.properties[p].name;
      if (name == "x") xi = static_cast<int>(p);
      if (name == "y") yi = static_cast<int>(p);
      if (name == "z") zi = static_cast<int>(p);
      if ((name == "vertex_indices" || name == "vertex_index") && !e.properties[p].count_type.empty())
        li = static_cast<int>(p);
    }
    if (e.name == "vertex" && (xi < 0 || yi < 0 || zi < 0)) throw FormatError("PLY vertex lacks x/y/z");
    if (e.name == "face" && li < 0) throw FormatError("PLY face lacks vertex_indices");

    for (std::size_t n = 0; n < e.count; ++n) {
      std::istringstream row;
      if (format == ply::Format::ascii) {
        do {
          if (!std::getline(in, line)) throw FormatError("truncated PLY body");
        } while (line.find_first_not_of(" \t\r") == std::string::npos);
        row.str(line);
      }
      auto scalar = [&](const std::string& type) -> double {
        if (format != ply::Format::ascii) return ply::detail::read_binary(in, type, swap);
        double v;
        if (!(row >> v)) throw FormatError("malformed PLY ascii row");
        return type == "float" || type == "float32" ? static_cast<double>(static_cast<float>(v)) : v;
      };
      Vec3 position = Vec3::Zero();
      std::vector<int> indices;
      for (std::size_t p = 0; p < e.properties.size(); ++p) {
        const auto& prop = e.properties[p];
        if (!prop.count_type.empty()) {
          const double count = scalar(prop.count_type);
          if (count < 0 || count > 1e6) throw FormatError("bad PLY list length");
          for (int c = 0; c < static_cast<int>(count); ++c) {
            const double v = scalar(prop.type);
            if (static_cast<int>(p) == li) indices.push_back(static_cast<int>(v));
          }
          continue;
        }
        const double v = scalar(prop.type);
        if (static_cast<int>(p) == xi) position.x() = v;
        if (static_cast<int>(p) == yi) position.y() = v;
        if (static_cast<int>(p) == zi) position.z() = v;
      }
      if (e.name == "vertex") {
        mesh.vertices.push_back(position);
      } else if (e.name == "face") {
        if (indices.size() < 3) throw FormatError("PLY face with fewer than 3 vertices");
        // Fan-triangulate polygons.
        for (std::size_t c = 1; c + 1 < indices.size(); ++c)
          mesh.faces.push_back({indices[0], indices[c], indices[c + 1]});
      }
    }
  }
  for (const auto& f : mesh.faces)
    for (int v : f)
      if (v < 0 || static_cast<std::size_t>(v) >= mesh.vertices.size())
        throw FormatError("PLY face index out of range");
  return mesh;
}

/// Writes vertices as float32 x/y/z and faces as uchar count + int32 indices.
inline void write_ply(const TriangleMesh& mesh, const std::string& path,
                      ply::Format format = ply::Format::binary_little_endian) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << "ply\n";
  out << "format "
      << (format == ply::Format::ascii ? "ascii" : format == ply::Format::binary_little_endian ? "binary_little_endian" : "binary_big_endian")
      << " 1.0\n";
  out << "element vertex " << mesh.vertices.size() << "\n";
  out << "property float x\nproperty float y\nproperty float z\n";
  out << "element face " << mesh.faces.size() << "\n";
  out << "property list uchar int vertex_indices\n";
  out << "end_header\n";
  const bool swap = (format == ply::Format::binary_big_endian) == (std::endian::native == std::endian::little);
  auto put = [&](auto value) {
    auto raw = std::bit_cast<std::array<char, sizeof(value)>>(value);
    if (swap) std::reverse(raw.begin(), raw.end());
    out.write(raw.data(), raw.size());
  };
  if (format == ply::Format::ascii) {
    out.precision(9);
    for (const auto& v : mesh.vertices)
      out << static_cast<float>(v.x()) << ' ' << static_cast<float>(v.y()) << ' ' << static_cast<float>(v.z()) << '\n';
    for (const auto& f : mesh.faces) out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
  } else {
    for (const auto& v : mesh.vertices) {
      put(static_cast<float>(v.x()));
      put(static_cast<float>(v.y()));
      put(static_cast<float>(v.z()));
    }
    for (const auto& f : mesh.faces) {
      put(static_cast<std::uint8_t>(3));
      for (int i : f) put(static_cast<std::int32_t>(i));
    }
  }
  if (!out) throw IoError("failed writing " + path);
}

}  // namespace cortexforge

#pragma once

#include <cortexforge/mesh.hpp>
#include <cortexforge/shapes.hpp>
#include <cortexforge/volume.hpp>

#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

namespace cortexforge::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("cortexforge_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// 1mm isotropic grid whose voxel (0,0,0) sits at the world origin.
inline VoxelGrid unit_grid(int n, GridKind kind = GridKind::intensity) {
  return VoxelGrid({n, n, n}, Affine::from_spacing(Vec3::Ones()), kind);
}

/// Solid ball indicator (voxel centres within radius of centre).
inline VoxelGrid ball_mask(int n, const Vec3& centre, double radius) {
  VoxelGrid g = unit_grid(n, GridKind::mask);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        if ((g.center(i, j, k) - centre).norm() <= radius) g.at(i, j, k) = 1.0f;
  return g;
}

/// Icosphere with vertices pushed radially by uniform noise in [-amp, amp].
inline TriangleMesh perturbed_sphere(int subdivisions, double radius, double amp, std::mt19937_64& rng,
                                     const Vec3& centre = Vec3::Zero()) {
  TriangleMesh m = icosphere(subdivisions, radius, centre);
  std::uniform_real_distribution<double> u(-amp, amp);
  for (auto& v : m.vertices) {
    const Vec3 dir = (v - centre).normalized();
    v += u(rng) * dir;
  }
  return m;
}

}  // namespace cortexforge::testing

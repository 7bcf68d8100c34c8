#pragma once

// Data-parallel geometry kernels behind the perception inner loops (LiDAR
// ray casting, point-cloud transforms, nearest-neighbor search). Scalar
// reference implementations plus AVX2 variants selected at runtime.
//
// The variants are required to be bit-for-bit equivalent to the scalar
// reference: identical operation order per element, no FMA contraction, and
// min/max with MINPD/MAXPD semantics. The equivalence suite asserts exact
// equality.

#include <cstddef>
#include <cstdint>

namespace sky::kern {

enum class IsaLevel : uint8_t { Scalar = 0, Avx2 = 1 };

// Level chosen by runtime CPU detection (or forced).
IsaLevel active_level();
// Pin a level, e.g. to compare variants in tests. Returns the level actually
// in effect (forcing Avx2 on a host without it falls back to Scalar).
IsaLevel force_level(IsaLevel level);

// out = R * p + t for n points in SoA layout. R is row-major 3x3.
void transform_points(const double* xs, const double* ys, const double* zs,
                      size_t n, const double R[9], const double t[3], double* ox,
                      double* oy, double* oz);

// Ray / ground-plane (z = 0) ranges for n unit rays from a common origin.
// Rays parallel to or pointing away from the plane get +inf.
void ray_ground_ranges(const double* dx, const double* dy, const double* dz,
                       size_t n, double origin_z, double max_range,
                       double* ranges);

// Branchless slab ray/AABB intersection for n rays from a common origin;
// ranges[i] is updated with the nearer hit (entry distance), left unchanged
// when the box is missed or farther.
void ray_box_ranges(const double* dx, const double* dy, const double* dz,
                    size_t n, const double origin[3], const double box_min[3],
                    const double box_max[3], double max_range, double* ranges);

// Index of the candidate nearest to (qx,qy,qz) over a contiguous SoA array;
// ties resolve to the lowest index. Returns n when the array is empty.
// best_d2 receives the winning squared distance.
size_t nearest_index(double qx, double qy, double qz, const double* xs,
                     const double* ys, const double* zs, size_t n,
                     double* best_d2);

namespace detail {
// Raw variants, exposed for the equivalence tests.
struct Variant {
  void (*transform_points)(const double*, const double*, const double*, size_t,
                           const double[9], const double[3], double*, double*,
                           double*);
  void (*ray_ground_ranges)(const double*, const double*, const double*, size_t,
                            double, double, double*);
  void (*ray_box_ranges)(const double*, const double*, const double*, size_t,
                         const double[3], const double[3], const double[3],
                         double, double*);
  size_t (*nearest_index)(double, double, double, const double*, const double*,
                          const double*, size_t, double*);
};
const Variant& scalar_variant();
const Variant* avx2_variant();  // nullptr when unavailable at build time
}  // namespace detail

}  // namespace sky::kern

#pragma once

#include <cstdint>
#include <vector>

#include "defreg/types.hpp"

namespace defreg {

struct SynthSpec {
    enum class Kind { spheres, sinusoid };
    Kind kind = Kind::sinusoid;
    int size = 32;               // cube edge, >= 16
    double amplitude = 3.0;      // sinusoid, voxels, <= size/8
    double radius = 8.0;         // spheres
    Point3 offset{4.0, 0.0, 0.0}; // spheres center offset, |offset| + radius < size/2
    std::uint64_t seed = 0;
};

void validate(const SynthSpec& spec);

// Smooth pseudo-random texture: seeded white noise, two rounds of
// downsample2, resampled back to the original grid, min-max normalized.
Volume smooth_noise_volume(const Dims3& dims, std::uint64_t seed);

// Smooth random field built the same way per component, rescaled so the
// largest component magnitude equals `amplitude`.
VectorField smooth_noise_field(const Dims3& dims, double amplitude, std::uint64_t seed);

struct SinusoidCase {
    Volume fixed;
    Volume moving;
    VectorField gt_ddf;
    std::vector<Point3> landmarks_fixed;
    std::vector<Point3> landmarks_moving;
};

// Ground-truth deformation recovery case. moving is the base texture and
// fixed = warp(moving, gt_ddf), so registering moving onto fixed recovers
// gt_ddf directly with no inverse field involved. Each gt component is a
// single-frequency sinusoid in its own coordinate, zero on both faces.
SinusoidCase gen_sinusoid(const SynthSpec& spec);

struct SpheresCase {
    Volume fixed;
    Volume moving;
    Volume fixed_label;
    Volume moving_label;
};

// Binary ball masks (moving ball scaled 1.15x and shifted by `offset`) with
// images made by blurring the masks and adding seeded noise.
SpheresCase gen_spheres(const SynthSpec& spec);

// Foreground mask for recovery scoring: voxels whose fixed-image gradient
// magnitude exceeds the median. Textureless regions are unidentifiable and
// excluded.
std::vector<std::uint8_t> foreground_mask(const Volume& fixed);

} // namespace defreg

#pragma once

#include "defreg/types.hpp"

namespace defreg {

enum class Interp { linear, nearest };

// Per-axis piece of the trilinear stencil. `i0`/`i1` are the bracketing
// voxel indices after edge clamping, `f` the fractional weight on `i1`,
// `pass` the derivative of the clamp (0 when the query lay outside the grid).
struct AxisStencil {
    int i0 = 0;
    int i1 = 0;
    double f = 0.0;
    double pass = 1.0;
};

AxisStencil axis_stencil(double p, int n);

// Trilinear interpolation of the 8 enclosing voxels; coordinates outside
// the grid are clamped per axis (edge-clamp policy).
Scalar sample_trilinear(const Volume& vol, const Point3& p);

// Exact spatial gradient of the trilinear interpolant at p. Zero in
// directions where the coordinate was clamped.
Point3 sample_gradient(const Volume& vol, const Point3& p);

// Per-component trilinear sample of a vector field.
Point3 sample_field(const VectorField& field, const Point3& p);

// out(x) = sample(vol, x + u(x)). Nearest mode rounds the sample point and
// clamps. Output keeps the input dims and spacing.
Volume warp(const Volume& vol, const VectorField& u, Interp interp = Interp::linear);

// Exact adjoint of warp(., linear) in its displacement argument:
// g(x) = upstream(x) * sample_gradient(vol, x + u(x)).
VectorField warp_adjoint(const Volume& vol, const VectorField& u, const Volume& upstream);

// Adjoint of warp(., linear) in its image argument: scatters upstream(x)
// onto the 8 corners of x + u(x) with the gather weights.
Volume warp_image_adjoint(const Volume& upstream, const VectorField& u);

// 2x2x2 mean pooling; dims become ceil(n/2) per axis, odd tails replicate
// the edge plane, spacing doubles.
Volume downsample2(const Volume& vol);
VectorField downsample2(const VectorField& field);

// Trilinear resample of a scalar grid onto target dims. Coordinates map by
// (source-1)/(target-1) per axis; a source axis of dim 1 maps to a constant.
Volume resample_to(const Volume& vol, const Dims3& target);

// Component-wise resample onto a finer grid, then scale each component by
// the per-axis dim ratio so displacements stay in target-voxel units.
VectorField upsample_field(const VectorField& u, const Dims3& target);

} // namespace defreg

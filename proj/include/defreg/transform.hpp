#pragma once

#include <variant>

#include "defreg/types.hpp"

namespace defreg {

// Dense displacement: the parameters are the field itself.
struct DenseDdf {
    VectorField u;
};

// Stationary velocity field, integrated by scaling and squaring.
struct Svf {
    VectorField v;
    int steps = 7;
};

// Cubic B-spline free-form deformation. Control points live every
// `control_spacing` voxels; the stored grid has one phantom control before
// index 0 and two beyond the last cell so every voxel has full 4^3 support.
// Stored index j corresponds to control position (j - 1) * control_spacing.
struct BsplineFfd {
    int control_spacing = 4;
    Dims3 image_dims;
    Eigen::Vector3d spacing{1.0, 1.0, 1.0};
    Dims3 coeff_dims;
    std::array<Eigen::ArrayXd, 3> coeffs;

    static Dims3 coeff_dims_for(const Dims3& image_dims, int control_spacing);
    static BsplineFfd zeros(const Dims3& image_dims, int control_spacing,
                            Eigen::Vector3d spacing = {1.0, 1.0, 1.0});
};

// phi(x) = A x + t on voxel coordinates, stored as the 3x4 block [A | t].
struct AffineTransform {
    Eigen::Matrix<double, 3, 4> mat = Eigen::Matrix<double, 3, 4>::Identity();

    static AffineTransform identity() { return {}; }
};

using Transform = std::variant<DenseDdf, Svf, BsplineFfd, AffineTransform>;

// Renders any parameterization as a dense displacement field on `dims`.
VectorField ddf_of(const Transform& t, const Dims3& dims,
                   const Eigen::Vector3d& spacing = {1.0, 1.0, 1.0});

// (a o+ b)(x) = b(x) + a(x + b(x)); applies b first, then a.
// This order convention is used everywhere: exponential squaring, inverse
// consistency checks, and evaluation.
VectorField compose(const VectorField& a, const VectorField& b);

// Scaling-and-squaring exponential: u = v / 2^steps, then `steps` rounds of
// u <- u o+ u.
VectorField exp_svf(const VectorField& v, int steps);

// Exact reverse-mode transpose of the squaring recursion: given dL/du of
// the rendered displacement, returns dL/dv.
VectorField exp_svf_pullback(const VectorField& v, int steps, const VectorField& g_ddf);

VectorField bspline_eval(const BsplineFfd& ffd);

// Transpose of bspline_eval: scatters voxel gradients onto the control grid
// with the same tensor-product weights.
std::array<Eigen::ArrayXd, 3> bspline_pullback(const BsplineFfd& ffd,
                                               const VectorField& g_ddf);

// det(I + grad u), central differences in the interior and one-sided at the
// boundary. Values <= 0 mark folding.
Volume jacobian_det(const VectorField& u);

// Flat parameter-vector view used by the optimizer. Component planes are
// concatenated x, y, z; the affine is row-major [A | t].
std::int64_t param_count(const Transform& t);
Eigen::ArrayXd get_params(const Transform& t);
void set_params(Transform& t, const Eigen::ArrayXd& params);

// Chain rule from a DDF-space gradient back to the parameters.
Eigen::ArrayXd pullback_params(const Transform& t, const VectorField& g_ddf);

} // namespace defreg

#include "defreg/transform.hpp"

#include <cmath>

#include "defreg/grid.hpp"
#include "defreg/parallel.hpp"

namespace defreg {

namespace {

Volume component_volume(const VectorField& f, int c) {
    return Volume(f.dims, f.spacing, f.comp[c]);
}

void check_steps(int steps) {
    if (steps < 0 || steps > 16) {
        fail(ErrorKind::domain_error,
             "svf steps must lie in [0, 16], got " + std::to_string(steps));
    }
}

} // namespace

Dims3 BsplineFfd::coeff_dims_for(const Dims3& image_dims, int control_spacing) {
    auto axis = [&](int n) { return (n - 1) / control_spacing + 4; };
    return {axis(image_dims.nx), axis(image_dims.ny), axis(image_dims.nz)};
}

BsplineFfd BsplineFfd::zeros(const Dims3& image_dims, int control_spacing,
                             Eigen::Vector3d spacing) {
    if (control_spacing < 2) {
        fail(ErrorKind::domain_error, "control_spacing must be >= 2, got " +
                                          std::to_string(control_spacing));
    }
    BsplineFfd ffd;
    ffd.control_spacing = control_spacing;
    ffd.image_dims = image_dims;
    ffd.spacing = std::move(spacing);
    ffd.coeff_dims = coeff_dims_for(image_dims, control_spacing);
    for (auto& c : ffd.coeffs) c = Eigen::ArrayXd::Zero(ffd.coeff_dims.voxel_count());
    return ffd;
}

VectorField compose(const VectorField& a, const VectorField& b) {
    require_same_dims(a.dims, b.dims, "compose");
    const Dims3 d = a.dims;
    VectorField out = VectorField::zeros(d, b.spacing);
    parallel::for_each_slice(d.nz, [&](int z) {
        for (int y = 0; y < d.ny; ++y) {
            for (int x = 0; x < d.nx; ++x) {
                const std::int64_t i = flat_index(d, x, y, z);
                const Point3 bx = b.at(i);
                out.set(i, bx + sample_field(a, Point3(x, y, z) + bx));
            }
        }
    });
    return out;
}

VectorField exp_svf(const VectorField& v, int steps) {
    check_steps(steps);
    VectorField u = v;
    const double scale = std::ldexp(1.0, -steps);
    for (auto& c : u.comp) c *= scale;
    for (int k = 0; k < steps; ++k) u = compose(u, u);
    return u;
}

VectorField exp_svf_pullback(const VectorField& v, int steps, const VectorField& g_ddf) {
    check_steps(steps);
    require_same_dims(v.dims, g_ddf.dims, "exp_svf_pullback");

    // Recompute and stash the forward states u_0 .. u_{steps-1}.
    std::vector<VectorField> states;
    states.reserve(static_cast<size_t>(steps));
    VectorField u = v;
    const double scale = std::ldexp(1.0, -steps);
    for (auto& c : u.comp) c *= scale;
    for (int k = 0; k < steps; ++k) {
        states.push_back(u);
        u = compose(u, u);
    }

    // Reverse through u_{k+1} = u_k o+ u_k. With c(a,b)(x) = b(x) + a(x+b(x)),
    // the b argument receives the identity term plus the sampled-gradient
    // chain, and the a argument receives the transposed gather (a scatter).
    VectorField g = g_ddf;
    for (int k = steps - 1; k >= 0; --k) {
        const VectorField& uk = states[static_cast<size_t>(k)];
        VectorField next = g; // identity term through b
        for (int c = 0; c < 3; ++c) {
            const Volume upstream = component_volume(g, c);
            const VectorField chain = warp_adjoint(component_volume(uk, c), uk, upstream);
            for (int j = 0; j < 3; ++j) next.comp[j] += chain.comp[j];
            next.comp[c] += warp_image_adjoint(upstream, uk).data;
        }
        g = std::move(next);
    }
    for (auto& c : g.comp) c *= scale;
    return g;
}

namespace {

// Uniform cubic B-spline basis on t in [0, 1).
inline void bspline_weights(double t, double w[4]) {
    const double t2 = t * t;
    const double t3 = t2 * t;
    w[0] = (1.0 - 3.0 * t + 3.0 * t2 - t3) / 6.0;
    w[1] = (4.0 - 6.0 * t2 + 3.0 * t3) / 6.0;
    w[2] = (1.0 + 3.0 * t + 3.0 * t2 - 3.0 * t3) / 6.0;
    w[3] = t3 / 6.0;
}

struct BsplineAxis {
    int base;      // stored control index of the first of the 4 supports
    double w[4];
};

inline BsplineAxis bspline_axis(int x, int spacing) {
    const int cell = x / spacing;
    const double t = double(x) / spacing - cell;
    BsplineAxis a;
    a.base = cell; // stored index = control index + 1, so cell-1 maps to cell
    bspline_weights(t, a.w);
    return a;
}

void check_ffd(const BsplineFfd& ffd) {
    if (ffd.control_spacing < 2) {
        fail(ErrorKind::domain_error, "control_spacing must be >= 2");
    }
    const Dims3 expect = BsplineFfd::coeff_dims_for(ffd.image_dims, ffd.control_spacing);
    if (!(expect == ffd.coeff_dims)) {
        fail(ErrorKind::shape_mismatch,
             "bspline coefficient grid is " + ffd.coeff_dims.str() + ", expected " +
                 expect.str());
    }
    for (const auto& c : ffd.coeffs) {
        if (c.size() != ffd.coeff_dims.voxel_count()) {
            fail(ErrorKind::shape_mismatch, "bspline coefficient array length mismatch");
        }
    }
}

} // namespace

VectorField bspline_eval(const BsplineFfd& ffd) {
    check_ffd(ffd);
    const Dims3 d = ffd.image_dims;
    const Dims3 cd = ffd.coeff_dims;
    VectorField out = VectorField::zeros(d, ffd.spacing);
    parallel::for_each_slice(d.nz, [&](int z) {
        const BsplineAxis az = bspline_axis(z, ffd.control_spacing);
        for (int y = 0; y < d.ny; ++y) {
            const BsplineAxis ay = bspline_axis(y, ffd.control_spacing);
            for (int x = 0; x < d.nx; ++x) {
                const BsplineAxis ax = bspline_axis(x, ffd.control_spacing);
                double acc[3] = {0.0, 0.0, 0.0};
                for (int kz = 0; kz < 4; ++kz) {
                    for (int ky = 0; ky < 4; ++ky) {
                        const double wyz = ay.w[ky] * az.w[kz];
                        const std::int64_t row =
                            flat_index(cd, ax.base, ay.base + ky, az.base + kz);
                        for (int kx = 0; kx < 4; ++kx) {
                            const double w = ax.w[kx] * wyz;
                            const std::int64_t ci = row + kx;
                            acc[0] += w * ffd.coeffs[0][ci];
                            acc[1] += w * ffd.coeffs[1][ci];
                            acc[2] += w * ffd.coeffs[2][ci];
                        }
                    }
                }
                const std::int64_t i = flat_index(d, x, y, z);
                out.comp[0][i] = acc[0];
                out.comp[1][i] = acc[1];
                out.comp[2][i] = acc[2];
            }
        }
    });
    return out;
}

std::array<Eigen::ArrayXd, 3> bspline_pullback(const BsplineFfd& ffd,
                                               const VectorField& g_ddf) {
    check_ffd(ffd);
    require_same_dims(ffd.image_dims, g_ddf.dims, "bspline_pullback");
    const Dims3 d = ffd.image_dims;
    const Dims3 cd = ffd.coeff_dims;
    std::array<Eigen::ArrayXd, 3> grad;
    for (auto& g : grad) g = Eigen::ArrayXd::Zero(cd.voxel_count());
    for (int z = 0; z < d.nz; ++z) {
        const BsplineAxis az = bspline_axis(z, ffd.control_spacing);
        for (int y = 0; y < d.ny; ++y) {
            const BsplineAxis ay = bspline_axis(y, ffd.control_spacing);
            for (int x = 0; x < d.nx; ++x) {
                const BsplineAxis ax = bspline_axis(x, ffd.control_spacing);
                const std::int64_t i = flat_index(d, x, y, z);
                const double g0 = g_ddf.comp[0][i];
                const double g1 = g_ddf.comp[1][i];
                const double g2 = g_ddf.comp[2][i];
                for (int kz = 0; kz < 4; ++kz) {
                    for (int ky = 0; ky < 4; ++ky) {
                        const double wyz = ay.w[ky] * az.w[kz];
                        const std::int64_t row =
                            flat_index(cd, ax.base, ay.base + ky, az.base + kz);
                        for (int kx = 0; kx < 4; ++kx) {
                            const double w = ax.w[kx] * wyz;
                            grad[0][row + kx] += w * g0;
                            grad[1][row + kx] += w * g1;
                            grad[2][row + kx] += w * g2;
                        }
                    }
                }
            }
        }
    }
    return grad;
}

VectorField ddf_of(const Transform& t, const Dims3& dims, const Eigen::Vector3d& spacing) {
    return std::visit(
        [&](const auto& tr) -> VectorField {
            using T = std::decay_t<decltype(tr)>;
            if constexpr (std::is_same_v<T, DenseDdf>) {
                require_same_dims(tr.u.dims, dims, "ddf_of");
                return tr.u;
            } else if constexpr (std::is_same_v<T, Svf>) {
                require_same_dims(tr.v.dims, dims, "ddf_of");
                return exp_svf(tr.v, tr.steps);
            } else if constexpr (std::is_same_v<T, BsplineFfd>) {
                require_same_dims(tr.image_dims, dims, "ddf_of");
                return bspline_eval(tr);
            } else {
                VectorField out = VectorField::zeros(dims, spacing);
                const Eigen::Matrix3d a = tr.mat.template leftCols<3>();
                const Eigen::Vector3d trans = tr.mat.col(3);
                parallel::for_each_slice(dims.nz, [&](int z) {
                    for (int y = 0; y < dims.ny; ++y) {
                        for (int x = 0; x < dims.nx; ++x) {
                            const Point3 p(x, y, z);
                            out.set(flat_index(dims, x, y, z), a * p + trans - p);
                        }
                    }
                });
                return out;
            }
        },
        t);
}

Volume jacobian_det(const VectorField& u) {
    const Dims3 d = u.dims;
    if (d.nx < 2 || d.ny < 2 || d.nz < 2) {
        fail(ErrorKind::dims_mismatch, "jacobian_det needs dims >= 2 per axis");
    }
    Volume out = Volume::zeros(d, u.spacing);
    // Derivative of component c along axis ax at one voxel.
    auto diff = [&](int c, int ax, int x, int y, int z) {
        int lo[3] = {x, y, z};
        int hi[3] = {x, y, z};
        const int n = d[ax];
        const int p = lo[ax];
        double denom;
        if (p == 0) {
            hi[ax] = 1;
            denom = 1.0;
        } else if (p == n - 1) {
            lo[ax] = n - 2;
            denom = 1.0;
        } else {
            lo[ax] = p - 1;
            hi[ax] = p + 1;
            denom = 2.0;
        }
        return (u.comp[c][flat_index(d, hi[0], hi[1], hi[2])] -
                u.comp[c][flat_index(d, lo[0], lo[1], lo[2])]) /
               denom;
    };
    parallel::for_each_slice(d.nz, [&](int z) {
        for (int y = 0; y < d.ny; ++y) {
            for (int x = 0; x < d.nx; ++x) {
                Eigen::Matrix3d j;
                for (int c = 0; c < 3; ++c)
                    for (int ax = 0; ax < 3; ++ax) j(c, ax) = diff(c, ax, x, y, z);
                j += Eigen::Matrix3d::Identity();
                out.data[flat_index(d, x, y, z)] = j.determinant();
            }
        }
    });
    return out;
}

std::int64_t param_count(const Transform& t) {
    return std::visit(
        [](const auto& tr) -> std::int64_t {
            using T = std::decay_t<decltype(tr)>;
            if constexpr (std::is_same_v<T, DenseDdf>) {
                return 3 * tr.u.dims.voxel_count();
            } else if constexpr (std::is_same_v<T, Svf>) {
                return 3 * tr.v.dims.voxel_count();
            } else if constexpr (std::is_same_v<T, BsplineFfd>) {
                return 3 * tr.coeff_dims.voxel_count();
            } else {
                return 12;
            }
        },
        t);
}

namespace {

Eigen::ArrayXd concat3(const std::array<Eigen::ArrayXd, 3>& comp) {
    const auto n = comp[0].size();
    Eigen::ArrayXd out(3 * n);
    out.segment(0, n) = comp[0];
    out.segment(n, n) = comp[1];
    out.segment(2 * n, n) = comp[2];
    return out;
}

void split3(const Eigen::ArrayXd& flat, std::array<Eigen::ArrayXd, 3>& comp) {
    const auto n = flat.size() / 3;
    comp[0] = flat.segment(0, n);
    comp[1] = flat.segment(n, n);
    comp[2] = flat.segment(2 * n, n);
}

} // namespace

Eigen::ArrayXd get_params(const Transform& t) {
    return std::visit(
        [](const auto& tr) -> Eigen::ArrayXd {
            using T = std::decay_t<decltype(tr)>;
            if constexpr (std::is_same_v<T, DenseDdf>) {
                return concat3(tr.u.comp);
            } else if constexpr (std::is_same_v<T, Svf>) {
                return concat3(tr.v.comp);
            } else if constexpr (std::is_same_v<T, BsplineFfd>) {
                return concat3(tr.coeffs);
            } else {
                Eigen::ArrayXd out(12);
                for (int r = 0; r < 3; ++r)
                    for (int c = 0; c < 4; ++c) out[4 * r + c] = tr.mat(r, c);
                return out;
            }
        },
        t);
}

void set_params(Transform& t, const Eigen::ArrayXd& params) {
    if (params.size() != param_count(t)) {
        fail(ErrorKind::shape_mismatch,
             "set_params: expected " + std::to_string(param_count(t)) + " values, got " +
                 std::to_string(params.size()));
    }
    std::visit(
        [&](auto& tr) {
            using T = std::decay_t<decltype(tr)>;
            if constexpr (std::is_same_v<T, DenseDdf>) {
                split3(params, tr.u.comp);
            } else if constexpr (std::is_same_v<T, Svf>) {
                split3(params, tr.v.comp);
            } else if constexpr (std::is_same_v<T, BsplineFfd>) {
                split3(params, tr.coeffs);
            } else {
                for (int r = 0; r < 3; ++r)
                    for (int c = 0; c < 4; ++c) tr.mat(r, c) = params[4 * r + c];
            }
        },
        t);
}

Eigen::ArrayXd pullback_params(const Transform& t, const VectorField& g_ddf) {
    return std::visit(
        [&](const auto& tr) -> Eigen::ArrayXd {
            using T = std::decay_t<decltype(tr)>;
            if constexpr (std::is_same_v<T, DenseDdf>) {
                require_same_dims(tr.u.dims, g_ddf.dims, "pullback_params");
                return concat3(g_ddf.comp);
            } else if constexpr (std::is_same_v<T, Svf>) {
                return concat3(exp_svf_pullback(tr.v, tr.steps, g_ddf).comp);
            } else if constexpr (std::is_same_v<T, BsplineFfd>) {
                return concat3(bspline_pullback(tr, g_ddf));
            } else {
                const Dims3 d = g_ddf.dims;
                Eigen::ArrayXd out = Eigen::ArrayXd::Zero(12);
                for (int z = 0; z < d.nz; ++z) {
                    for (int y = 0; y < d.ny; ++y) {
                        for (int x = 0; x < d.nx; ++x) {
                            const Point3 g = g_ddf.at(x, y, z);
                            const double pos[4] = {double(x), double(y), double(z), 1.0};
                            for (int r = 0; r < 3; ++r)
                                for (int c = 0; c < 4; ++c) out[4 * r + c] += g[r] * pos[c];
                        }
                    }
                }
                return out;
            }
        },
        t);
}

} // namespace defreg

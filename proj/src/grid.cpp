#include "defreg/grid.hpp"

#include <cmath>

#include "defreg/parallel.hpp"

namespace defreg {

AxisStencil axis_stencil(double p, int n) {
    AxisStencil s;
    if (n < 2) {
        s.pass = 0.0;
        return s;
    }
    double c = p;
    if (c <= 0.0) {
        c = 0.0;
        s.pass = (p < 0.0) ? 0.0 : 1.0;
    } else if (c >= n - 1) {
        c = n - 1;
        s.pass = (p > n - 1) ? 0.0 : 1.0;
    }
    int i0 = static_cast<int>(std::floor(c));
    if (i0 > n - 2) i0 = n - 2;
    s.i0 = i0;
    s.i1 = i0 + 1;
    s.f = c - i0;
    return s;
}

namespace {

struct Stencil {
    AxisStencil ax, ay, az;
};

inline Stencil make_stencil(const Dims3& d, const Point3& p) {
    return {axis_stencil(p.x(), d.nx), axis_stencil(p.y(), d.ny),
            axis_stencil(p.z(), d.nz)};
}

inline Scalar gather(const Eigen::ArrayXd& data, const Dims3& d, const Stencil& s) {
    const double fx = s.ax.f, fy = s.ay.f, fz = s.az.f;
    const std::int64_t i000 = flat_index(d, s.ax.i0, s.ay.i0, s.az.i0);
    const std::int64_t i100 = flat_index(d, s.ax.i1, s.ay.i0, s.az.i0);
    const std::int64_t i010 = flat_index(d, s.ax.i0, s.ay.i1, s.az.i0);
    const std::int64_t i110 = flat_index(d, s.ax.i1, s.ay.i1, s.az.i0);
    const std::int64_t i001 = flat_index(d, s.ax.i0, s.ay.i0, s.az.i1);
    const std::int64_t i101 = flat_index(d, s.ax.i1, s.ay.i0, s.az.i1);
    const std::int64_t i011 = flat_index(d, s.ax.i0, s.ay.i1, s.az.i1);
    const std::int64_t i111 = flat_index(d, s.ax.i1, s.ay.i1, s.az.i1);
    const double c00 = data[i000] * (1.0 - fx) + data[i100] * fx;
    const double c10 = data[i010] * (1.0 - fx) + data[i110] * fx;
    const double c01 = data[i001] * (1.0 - fx) + data[i101] * fx;
    const double c11 = data[i011] * (1.0 - fx) + data[i111] * fx;
    const double c0 = c00 * (1.0 - fy) + c10 * fy;
    const double c1 = c01 * (1.0 - fy) + c11 * fy;
    return c0 * (1.0 - fz) + c1 * fz;
}

inline Point3 gather_gradient(const Eigen::ArrayXd& data, const Dims3& d, const Stencil& s) {
    const double fx = s.ax.f, fy = s.ay.f, fz = s.az.f;
    const double v000 = data[flat_index(d, s.ax.i0, s.ay.i0, s.az.i0)];
    const double v100 = data[flat_index(d, s.ax.i1, s.ay.i0, s.az.i0)];
    const double v010 = data[flat_index(d, s.ax.i0, s.ay.i1, s.az.i0)];
    const double v110 = data[flat_index(d, s.ax.i1, s.ay.i1, s.az.i0)];
    const double v001 = data[flat_index(d, s.ax.i0, s.ay.i0, s.az.i1)];
    const double v101 = data[flat_index(d, s.ax.i1, s.ay.i0, s.az.i1)];
    const double v011 = data[flat_index(d, s.ax.i0, s.ay.i1, s.az.i1)];
    const double v111 = data[flat_index(d, s.ax.i1, s.ay.i1, s.az.i1)];
    // d/dx collapses the x pairs to differences, then blends over y and z.
    const double dx = ((v100 - v000) * (1.0 - fy) + (v110 - v010) * fy) * (1.0 - fz) +
                      ((v101 - v001) * (1.0 - fy) + (v111 - v011) * fy) * fz;
    const double dy = ((v010 - v000) * (1.0 - fx) + (v110 - v100) * fx) * (1.0 - fz) +
                      ((v011 - v001) * (1.0 - fx) + (v111 - v101) * fx) * fz;
    const double dz = ((v001 - v000) * (1.0 - fx) + (v101 - v100) * fx) * (1.0 - fy) +
                      ((v011 - v010) * (1.0 - fx) + (v111 - v110) * fx) * fy;
    return {dx * s.ax.pass, dy * s.ay.pass, dz * s.az.pass};
}

inline int round_clamp(double p, int n) {
    int i = static_cast<int>(std::floor(p + 0.5));
    if (i < 0) i = 0;
    if (i > n - 1) i = n - 1;
    return i;
}

} // namespace

Scalar sample_trilinear(const Volume& vol, const Point3& p) {
    return gather(vol.data, vol.dims, make_stencil(vol.dims, p));
}

Point3 sample_gradient(const Volume& vol, const Point3& p) {
    return gather_gradient(vol.data, vol.dims, make_stencil(vol.dims, p));
}

Point3 sample_field(const VectorField& field, const Point3& p) {
    const Stencil s = make_stencil(field.dims, p);
    return {gather(field.comp[0], field.dims, s),
            gather(field.comp[1], field.dims, s),
            gather(field.comp[2], field.dims, s)};
}

Volume warp(const Volume& vol, const VectorField& u, Interp interp) {
    require_same_dims(vol.dims, u.dims, "warp");
    const Dims3 d = vol.dims;
    Volume out = Volume::zeros(d, vol.spacing);
    parallel::for_each_slice(d.nz, [&](int z) {
        for (int y = 0; y < d.ny; ++y) {
            for (int x = 0; x < d.nx; ++x) {
                const std::int64_t i = flat_index(d, x, y, z);
                const Point3 p = Point3(x, y, z) + u.at(i);
                if (interp == Interp::linear) {
                    out.data[i] = gather(vol.data, d, make_stencil(d, p));
                } else {
                    out.data[i] = vol.data[flat_index(d, round_clamp(p.x(), d.nx),
                                                      round_clamp(p.y(), d.ny),
                                                      round_clamp(p.z(), d.nz))];
                }
            }
        }
    });
    return out;
}

VectorField warp_adjoint(const Volume& vol, const VectorField& u, const Volume& upstream) {
    require_same_dims(vol.dims, u.dims, "warp_adjoint");
    require_same_dims(vol.dims, upstream.dims, "warp_adjoint");
    const Dims3 d = vol.dims;
    VectorField g = VectorField::zeros(d, u.spacing);
    parallel::for_each_slice(d.nz, [&](int z) {
        for (int y = 0; y < d.ny; ++y) {
            for (int x = 0; x < d.nx; ++x) {
                const std::int64_t i = flat_index(d, x, y, z);
                const Point3 p = Point3(x, y, z) + u.at(i);
                g.set(i, upstream.data[i] * gather_gradient(vol.data, d, make_stencil(d, p)));
            }
        }
    });
    return g;
}

Volume warp_image_adjoint(const Volume& upstream, const VectorField& u) {
    require_same_dims(upstream.dims, u.dims, "warp_image_adjoint");
    const Dims3 d = upstream.dims;
    Volume out = Volume::zeros(d, upstream.spacing);
    // Scatter writes collide across slices, so this stays single threaded.
    for (int z = 0; z < d.nz; ++z) {
        for (int y = 0; y < d.ny; ++y) {
            for (int x = 0; x < d.nx; ++x) {
                const std::int64_t i = flat_index(d, x, y, z);
                const Point3 p = Point3(x, y, z) + u.at(i);
                const Stencil s = make_stencil(d, p);
                const double g = upstream.data[i];
                const double fx = s.ax.f, fy = s.ay.f, fz = s.az.f;
                out.data[flat_index(d, s.ax.i0, s.ay.i0, s.az.i0)] += g * (1 - fx) * (1 - fy) * (1 - fz);
                out.data[flat_index(d, s.ax.i1, s.ay.i0, s.az.i0)] += g * fx * (1 - fy) * (1 - fz);
                out.data[flat_index(d, s.ax.i0, s.ay.i1, s.az.i0)] += g * (1 - fx) * fy * (1 - fz);
                out.data[flat_index(d, s.ax.i1, s.ay.i1, s.az.i0)] += g * fx * fy * (1 - fz);
                out.data[flat_index(d, s.ax.i0, s.ay.i0, s.az.i1)] += g * (1 - fx) * (1 - fy) * fz;
                out.data[flat_index(d, s.ax.i1, s.ay.i0, s.az.i1)] += g * fx * (1 - fy) * fz;
                out.data[flat_index(d, s.ax.i0, s.ay.i1, s.az.i1)] += g * (1 - fx) * fy * fz;
                out.data[flat_index(d, s.ax.i1, s.ay.i1, s.az.i1)] += g * fx * fy * fz;
            }
        }
    }
    return out;
}

namespace {

inline Dims3 half_dims(const Dims3& d) {
    return {(d.nx + 1) / 2, (d.ny + 1) / 2, (d.nz + 1) / 2};
}

Eigen::ArrayXd pool2(const Eigen::ArrayXd& data, const Dims3& d, const Dims3& h) {
    Eigen::ArrayXd out(h.voxel_count());
    for (int z = 0; z < h.nz; ++z) {
        for (int y = 0; y < h.ny; ++y) {
            for (int x = 0; x < h.nx; ++x) {
                double sum = 0.0;
                for (int dz = 0; dz < 2; ++dz) {
                    const int sz = std::min(2 * z + dz, d.nz - 1);
                    for (int dy = 0; dy < 2; ++dy) {
                        const int sy = std::min(2 * y + dy, d.ny - 1);
                        for (int dx = 0; dx < 2; ++dx) {
                            const int sx = std::min(2 * x + dx, d.nx - 1);
                            sum += data[flat_index(d, sx, sy, sz)];
                        }
                    }
                }
                out[flat_index(h, x, y, z)] = sum / 8.0;
            }
        }
    }
    return out;
}

} // namespace

Volume downsample2(const Volume& vol) {
    const Dims3 h = half_dims(vol.dims);
    return Volume(h, 2.0 * vol.spacing, pool2(vol.data, vol.dims, h));
}

VectorField downsample2(const VectorField& field) {
    const Dims3 h = half_dims(field.dims);
    VectorField out;
    out.dims = h;
    out.spacing = 2.0 * field.spacing;
    for (int c = 0; c < 3; ++c) out.comp[c] = pool2(field.comp[c], field.dims, h);
    return out;
}

namespace {

Eigen::ArrayXd resample_component(const Eigen::ArrayXd& data, const Dims3& src,
                                  const Dims3& tgt) {
    const double mx = tgt.nx > 1 ? double(src.nx - 1) / double(tgt.nx - 1) : 0.0;
    const double my = tgt.ny > 1 ? double(src.ny - 1) / double(tgt.ny - 1) : 0.0;
    const double mz = tgt.nz > 1 ? double(src.nz - 1) / double(tgt.nz - 1) : 0.0;
    Eigen::ArrayXd out(tgt.voxel_count());
    parallel::for_each_slice(tgt.nz, [&](int z) {
        for (int y = 0; y < tgt.ny; ++y) {
            for (int x = 0; x < tgt.nx; ++x) {
                const Point3 p(x * mx, y * my, z * mz);
                out[flat_index(tgt, x, y, z)] = gather(data, src, make_stencil(src, p));
            }
        }
    });
    return out;
}

} // namespace

Volume resample_to(const Volume& vol, const Dims3& target) {
    if (target == vol.dims) return vol;
    Eigen::Vector3d sp(vol.spacing.x() * vol.dims.nx / target.nx,
                       vol.spacing.y() * vol.dims.ny / target.ny,
                       vol.spacing.z() * vol.dims.nz / target.nz);
    return Volume(target, sp, resample_component(vol.data, vol.dims, target));
}

VectorField upsample_field(const VectorField& u, const Dims3& target) {
    if (target.nx < u.dims.nx || target.ny < u.dims.ny || target.nz < u.dims.nz) {
        fail(ErrorKind::dims_mismatch,
             "upsample_field: target " + target.str() + " smaller than source " +
                 u.dims.str());
    }
    VectorField out;
    out.dims = target;
    out.spacing = Eigen::Vector3d(u.spacing.x() * u.dims.nx / target.nx,
                                  u.spacing.y() * u.dims.ny / target.ny,
                                  u.spacing.z() * u.dims.nz / target.nz);
    const double ratio[3] = {double(target.nx) / u.dims.nx,
                             double(target.ny) / u.dims.ny,
                             double(target.nz) / u.dims.nz};
    for (int c = 0; c < 3; ++c) {
        out.comp[c] = resample_component(u.comp[c], u.dims, target) * ratio[c];
    }
    return out;
}

} // namespace defreg

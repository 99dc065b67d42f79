#include "defreg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "defreg/grid.hpp"
#include "defreg/rng.hpp"

namespace defreg {

void validate(const SynthSpec& spec) {
    if (spec.size < 16) {
        fail(ErrorKind::spec_invalid, "synth size must be >= 16, got " +
                                          std::to_string(spec.size));
    }
    if (spec.kind == SynthSpec::Kind::sinusoid) {
        if (spec.amplitude < 0.0 || spec.amplitude > spec.size / 8.0) {
            fail(ErrorKind::spec_invalid, "sinusoid amplitude must lie in [0, size/8]");
        }
    } else {
        if (spec.radius <= 0.0 ||
            spec.radius + spec.offset.norm() >= spec.size / 2.0) {
            fail(ErrorKind::spec_invalid,
                 "spheres need radius + |offset| < size/2 and radius > 0");
        }
    }
}

namespace {

Eigen::ArrayXd white_noise(std::int64_t n, std::uint64_t seed) {
    SplitMix64 rng(seed);
    Eigen::ArrayXd out(n);
    for (std::int64_t i = 0; i < n; ++i) out[i] = rng.next_unit();
    return out;
}

Volume smooth_volume_raw(const Dims3& dims, std::uint64_t seed) {
    Volume v(dims, {1.0, 1.0, 1.0}, white_noise(dims.voxel_count(), seed));
    return resample_to(downsample2(downsample2(v)), dims);
}

} // namespace

Volume smooth_noise_volume(const Dims3& dims, std::uint64_t seed) {
    Volume v = smooth_volume_raw(dims, seed);
    const double lo = v.data.minCoeff();
    const double hi = v.data.maxCoeff();
    v.data = hi > lo ? ((v.data - lo) / (hi - lo)).eval() : Eigen::ArrayXd::Zero(v.data.size());
    v.spacing = {1.0, 1.0, 1.0};
    return v;
}

VectorField smooth_noise_field(const Dims3& dims, double amplitude, std::uint64_t seed) {
    VectorField f = VectorField::zeros(dims);
    double peak = 0.0;
    for (int c = 0; c < 3; ++c) {
        Volume v = smooth_volume_raw(dims, splitmix64_once(seed + 0x9E37u * (c + 1)));
        v.data -= v.data.mean();
        f.comp[c] = v.data;
        peak = std::max(peak, f.comp[c].abs().maxCoeff());
    }
    if (peak > 0.0 && amplitude > 0.0) {
        const double s = amplitude / peak;
        for (auto& c : f.comp) c *= s;
    } else if (amplitude == 0.0) {
        for (auto& c : f.comp) c.setZero();
    }
    return f;
}

SinusoidCase gen_sinusoid(const SynthSpec& spec) {
    validate(spec);
    const int n = spec.size;
    const Dims3 dims{n, n, n};
    SinusoidCase out;

    out.gt_ddf = VectorField::zeros(dims);
    const double freq = 2.0 * std::numbers::pi / (n - 1);
    for (int z = 0; z < n; ++z) {
        for (int y = 0; y < n; ++y) {
            for (int x = 0; x < n; ++x) {
                const std::int64_t i = flat_index(dims, x, y, z);
                out.gt_ddf.comp[0][i] = spec.amplitude * std::sin(freq * x);
                out.gt_ddf.comp[1][i] = spec.amplitude * std::sin(freq * y);
                out.gt_ddf.comp[2][i] = spec.amplitude * std::sin(freq * z);
            }
        }
    }

    out.moving = smooth_noise_volume(dims, spec.seed);
    out.fixed = warp(out.moving, out.gt_ddf);

    // Landmarks at the interior quarter-lattice; the moving correspondence
    // of a fixed point p is p + gt(p).
    const double q[2] = {std::floor(n / 4.0), std::floor(3.0 * n / 4.0)};
    for (double lz : q) {
        for (double ly : q) {
            for (double lx : q) {
                const Point3 p(lx, ly, lz);
                out.landmarks_fixed.push_back(p);
                out.landmarks_moving.push_back(
                    p + Point3(spec.amplitude * std::sin(freq * lx),
                               spec.amplitude * std::sin(freq * ly),
                               spec.amplitude * std::sin(freq * lz)));
            }
        }
    }
    return out;
}

SpheresCase gen_spheres(const SynthSpec& spec) {
    validate(spec);
    const int n = spec.size;
    const Dims3 dims{n, n, n};
    const Point3 center((n - 1) / 2.0, (n - 1) / 2.0, (n - 1) / 2.0);

    auto ball = [&](const Point3& c, double r) {
        Volume v = Volume::zeros(dims);
        for (int z = 0; z < n; ++z)
            for (int y = 0; y < n; ++y)
                for (int x = 0; x < n; ++x)
                    v.data[flat_index(dims, x, y, z)] =
                        (Point3(x, y, z) - c).norm() <= r ? 1.0 : 0.0;
        return v;
    };

    SpheresCase out;
    out.fixed_label = ball(center, spec.radius);
    out.moving_label = ball(center + spec.offset, spec.radius * 1.15);

    auto image_of = [&](const Volume& label, std::uint64_t seed) {
        Volume img = resample_to(downsample2(label), dims);
        img.spacing = {1.0, 1.0, 1.0};
        img.data += 0.05 * white_noise(dims.voxel_count(), seed);
        return img;
    };
    out.fixed = image_of(out.fixed_label, splitmix64_once(spec.seed ^ 0xF1u));
    out.moving = image_of(out.moving_label, splitmix64_once(spec.seed ^ 0xA7u));
    return out;
}

std::vector<std::uint8_t> foreground_mask(const Volume& fixed) {
    const Dims3 d = fixed.dims;
    const std::int64_t n = d.voxel_count();
    std::vector<double> mag(static_cast<size_t>(n));
    for (int z = 0; z < d.nz; ++z)
        for (int y = 0; y < d.ny; ++y)
            for (int x = 0; x < d.nx; ++x) {
                const std::int64_t i = flat_index(d, x, y, z);
                mag[static_cast<size_t>(i)] =
                    sample_gradient(fixed, Point3(x, y, z)).norm();
            }
    std::vector<double> sorted = mag;
    std::nth_element(sorted.begin(), sorted.begin() + n / 2, sorted.end());
    const double median = sorted[static_cast<size_t>(n / 2)];
    std::vector<std::uint8_t> mask(static_cast<size_t>(n));
    for (std::int64_t i = 0; i < n; ++i)
        mask[static_cast<size_t>(i)] = mag[static_cast<size_t>(i)] > median ? 1 : 0;
    return mask;
}

} // namespace defreg

#include "defreg/losses.hpp"

#include <cmath>

#include "defreg/grid.hpp"
#include "defreg/parallel.hpp"

namespace defreg {

namespace {

// All loss reductions sum per z-slice in ascending order; slices are
// contiguous segments in the x-fastest layout.
double sum_by_slice(const Eigen::ArrayXd& a, const Dims3& d) {
    const std::int64_t plane = static_cast<std::int64_t>(d.nx) * d.ny;
    double total = 0.0;
    for (int z = 0; z < d.nz; ++z) total += a.segment(z * plane, plane).sum();
    return total;
}

void check_pair(const Volume& f, const Volume& w, const char* where) {
    require_same_dims(f.dims, w.dims, where);
}

void check_label_pair(const Volume& f, const Volume& w, const char* where) {
    check_pair(f, w, where);
    validate_label_range(f, where);
    validate_label_range(w, where);
}

// Separable box sum over the clamped window [p-r, p+r] per axis.
void box_pass(Eigen::ArrayXd& a, int n, std::int64_t stride, std::int64_t lanes,
              std::int64_t lane_stride, int r) {
    Eigen::ArrayXd lane(n);
    for (std::int64_t l = 0; l < lanes; ++l) {
        const std::int64_t base = l * lane_stride;
        double s = 0.0;
        const int top = std::min(r, n - 1);
        for (int t = 0; t <= top; ++t) s += a[base + t * stride];
        lane[0] = s;
        for (int x = 1; x < n; ++x) {
            const int enter = x + r;
            if (enter <= n - 1) s += a[base + enter * stride];
            const int leave = x - r - 1;
            if (leave >= 0) s -= a[base + leave * stride];
            lane[x] = s;
        }
        for (int x = 0; x < n; ++x) a[base + x * stride] = lane[x];
    }
}

Eigen::ArrayXd box_sum(const Eigen::ArrayXd& src, const Dims3& d, int r) {
    Eigen::ArrayXd a = src;
    const std::int64_t nx = d.nx, ny = d.ny;
    // x lanes are contiguous rows and y lanes stride nx, both within one
    // slice; z lanes stride a full slice.
    for (std::int64_t z = 0; z < d.nz; ++z) {
        Eigen::ArrayXd slice = a.segment(z * nx * ny, nx * ny);
        box_pass(slice, d.nx, 1, ny, nx, r);
        box_pass(slice, d.ny, nx, nx, 1, r);
        a.segment(z * nx * ny, nx * ny) = slice;
    }
    box_pass(a, d.nz, nx * ny, nx * ny, 1, r);
    return a;
}

} // namespace

LossGrad ssd(const Volume& fixed, const Volume& warped) {
    check_pair(fixed, warped, "ssd");
    const double n = static_cast<double>(fixed.dims.voxel_count());
    Eigen::ArrayXd diff = warped.data - fixed.data;
    LossGrad out;
    out.value = sum_by_slice(diff.square(), fixed.dims) / n;
    out.grad = Volume(fixed.dims, fixed.spacing, (2.0 / n) * diff);
    return out;
}

LossGrad gncc(const Volume& fixed, const Volume& warped) {
    check_pair(fixed, warped, "gncc");
    const Dims3 d = fixed.dims;
    const double n = static_cast<double>(d.voxel_count());
    const double mf = sum_by_slice(fixed.data, d) / n;
    const double mw = sum_by_slice(warped.data, d) / n;
    Eigen::ArrayXd cf = fixed.data - mf;
    Eigen::ArrayXd cw = warped.data - mw;
    const double cov = sum_by_slice(cf * cw, d) / n;
    const double var_f = sum_by_slice(cf.square(), d) / n;
    const double var_w = sum_by_slice(cw.square(), d) / n;
    const double denom = std::sqrt((var_f + kVarianceFloor) * (var_w + kVarianceFloor));
    const double ncc = cov / denom;
    LossGrad out;
    out.value = 1.0 - ncc;
    out.grad = Volume(d, fixed.spacing,
                      (ncc / (var_w + kVarianceFloor) / n) * cw - (1.0 / (denom * n)) * cf);
    return out;
}

LossGrad lncc(const Volume& fixed, const Volume& warped, int window) {
    check_pair(fixed, warped, "lncc");
    if (window % 2 == 0) {
        fail(ErrorKind::even_window, "lncc window must be odd, got " + std::to_string(window));
    }
    if (window < 3) {
        fail(ErrorKind::domain_error, "lncc window must be >= 3, got " + std::to_string(window));
    }
    const Dims3 d = fixed.dims;
    const int r = window / 2;
    const double n = static_cast<double>(d.voxel_count());
    const Eigen::ArrayXd& f = fixed.data;
    const Eigen::ArrayXd& w = warped.data;

    const Eigen::ArrayXd count = box_sum(Eigen::ArrayXd::Ones(f.size()), d, r);
    const Eigen::ArrayXd mean_f = box_sum(f, d, r) / count;
    const Eigen::ArrayXd mean_w = box_sum(w, d, r) / count;
    const Eigen::ArrayXd cov = box_sum(f * w, d, r) / count - mean_f * mean_w;
    const Eigen::ArrayXd var_f = box_sum(f.square(), d, r) / count - mean_f.square();
    const Eigen::ArrayXd var_w = box_sum(w.square(), d, r) / count - mean_w.square();

    const Eigen::ArrayXd denom = var_f * var_w + kVarianceFloor;
    const Eigen::ArrayXd term = cov.square() / denom;

    LossGrad out;
    out.value = 1.0 - sum_by_slice(term, d) / n;

    // d term / d cov and d term / d var_w, pushed back through the box
    // windows: a voxel i contributes to every window containing it, and box
    // windows are symmetric, so the outer sum is another box filter.
    const Eigen::ArrayXd t1 = 2.0 * cov / denom;
    const Eigen::ArrayXd t2 = -cov.square() * var_f / denom.square();
    Eigen::ArrayXd g = f * box_sum(t1 / count, d, r) - box_sum(t1 * mean_f / count, d, r) +
                       2.0 * w * box_sum(t2 / count, d, r) -
                       2.0 * box_sum(t2 * mean_w / count, d, r);
    out.grad = Volume(d, fixed.spacing, (-1.0 / n) * g);
    return out;
}

namespace {

struct HatBin {
    int k0;       // lower bin
    double w1;    // weight on bin k0+1 (w0 = 1 - w1)
};

// Linear hat kernel over bin centers k/(B-1) on a normalized value in [0,1].
inline HatBin hat_bin(double a, int bins) {
    double s = a * (bins - 1);
    int k = static_cast<int>(std::floor(s));
    if (k > bins - 2) k = bins - 2;
    if (k < 0) k = 0;
    return {k, s - k};
}

struct Normalized {
    Eigen::ArrayXd values; // in [0, 1]
    double range = 0.0;    // max - min; 0 marks a constant image
};

Normalized normalize_minmax(const Eigen::ArrayXd& a) {
    Normalized out;
    const double lo = a.minCoeff();
    const double hi = a.maxCoeff();
    out.range = hi - lo;
    if (out.range <= 0.0) {
        out.values = Eigen::ArrayXd::Constant(a.size(), 0.5);
        out.range = 0.0;
    } else {
        out.values = (a - lo) / out.range;
    }
    return out;
}

} // namespace

LossGrad mi(const Volume& fixed, const Volume& warped, int bins) {
    check_pair(fixed, warped, "mi");
    if (bins < 4) {
        fail(ErrorKind::domain_error, "mi bins must be >= 4, got " + std::to_string(bins));
    }
    const Dims3 d = fixed.dims;
    const std::int64_t n = d.voxel_count();
    const Normalized nf = normalize_minmax(fixed.data);
    const Normalized nw = normalize_minmax(warped.data);

    Eigen::ArrayXXd joint = Eigen::ArrayXXd::Zero(bins, bins); // (fixed, warped)
    for (std::int64_t i = 0; i < n; ++i) {
        const HatBin bf = hat_bin(nf.values[i], bins);
        const HatBin bw = hat_bin(nw.values[i], bins);
        joint(bf.k0, bw.k0) += (1.0 - bf.w1) * (1.0 - bw.w1);
        joint(bf.k0, bw.k0 + 1) += (1.0 - bf.w1) * bw.w1;
        joint(bf.k0 + 1, bw.k0) += bf.w1 * (1.0 - bw.w1);
        joint(bf.k0 + 1, bw.k0 + 1) += bf.w1 * bw.w1;
    }
    joint /= static_cast<double>(n);
    const Eigen::ArrayXd pf = joint.rowwise().sum();
    const Eigen::ArrayXd qw = joint.colwise().sum();

    double mi_nats = 0.0;
    for (int j = 0; j < bins; ++j) {
        for (int k = 0; k < bins; ++k) {
            const double p = joint(j, k);
            if (p > 0.0) mi_nats += p * std::log(p / (pf[j] * qw[k]));
        }
    }

    LossGrad out;
    out.value = -mi_nats;
    out.grad = Volume::zeros(d, fixed.spacing);
    if (nw.range == 0.0) return out; // constant warped image: defined flat

    // dMI/d(joint mass at (j,k)) accounting for the marginals; the constant
    // -1 cancels in the k+1 minus k difference below.
    Eigen::ArrayXXd dm(bins, bins);
    for (int j = 0; j < bins; ++j) {
        for (int k = 0; k < bins; ++k) {
            const double p = std::max(joint(j, k), 1e-300);
            dm(j, k) = std::log(p / std::max(pf[j] * qw[k], 1e-300));
        }
    }
    const double scale = (bins - 1) / (nw.range * static_cast<double>(n));
    for (std::int64_t i = 0; i < n; ++i) {
        const HatBin bf = hat_bin(nf.values[i], bins);
        const HatBin bw = hat_bin(nw.values[i], bins);
        const double d0 = (1.0 - bf.w1) * (dm(bf.k0, bw.k0 + 1) - dm(bf.k0, bw.k0));
        const double d1 = bf.w1 * (dm(bf.k0 + 1, bw.k0 + 1) - dm(bf.k0 + 1, bw.k0));
        out.grad.data[i] = -scale * (d0 + d1);
    }
    return out;
}

LossGrad dice_loss(const Volume& fixed_label, const Volume& warped_label) {
    check_label_pair(fixed_label, warped_label, "dice");
    const Dims3 d = fixed_label.dims;
    const double inter = sum_by_slice(fixed_label.data * warped_label.data, d);
    const double sum_f = sum_by_slice(fixed_label.data, d);
    const double sum_w = sum_by_slice(warped_label.data, d);
    const double num = 2.0 * inter + kDiceSmooth;
    const double den = sum_f + sum_w + kDiceSmooth;
    LossGrad out;
    out.value = 1.0 - num / den;
    out.grad = Volume(d, fixed_label.spacing,
                      (num / (den * den)) - (2.0 / den) * fixed_label.data);
    return out;
}

LossGrad cross_entropy(const Volume& fixed_label, const Volume& warped_label) {
    check_label_pair(fixed_label, warped_label, "cross_entropy");
    const Dims3 d = fixed_label.dims;
    const double n = static_cast<double>(d.voxel_count());
    const Eigen::ArrayXd& f = fixed_label.data;
    const Eigen::ArrayXd& w = warped_label.data;
    const double lo = kProbClip, hi = 1.0 - kProbClip;
    Eigen::ArrayXd cw = w.min(hi).max(lo);
    Eigen::ArrayXd cnw = (1.0 - w).min(hi).max(lo);
    LossGrad out;
    out.value = sum_by_slice(-(f * cw.log() + (1.0 - f) * cnw.log()), d) / n;
    // Clipped voxels sit on a flat piece of the loss.
    Eigen::ArrayXd g =
        (w > lo && w < hi).select(-f / cw, Eigen::ArrayXd::Zero(w.size())) +
        ((1.0 - w) > lo && (1.0 - w) < hi).select((1.0 - f) / cnw, Eigen::ArrayXd::Zero(w.size()));
    out.grad = Volume(d, fixed_label.spacing, g / n);
    return out;
}

RegGrad gradient_l2(const VectorField& u) {
    const Dims3 d = u.dims;
    if (d.nx < 2 || d.ny < 2 || d.nz < 2) {
        fail(ErrorKind::dims_mismatch, "gradient_l2 needs dims >= 2 per axis");
    }
    const double scale = 1.0 / (9.0 * static_cast<double>(d.voxel_count()));
    RegGrad out;
    out.grad = VectorField::zeros(d, u.spacing);
    double total = 0.0;
    const int strides[3] = {1, d.nx, d.nx * d.ny};
    for (int c = 0; c < 3; ++c) {
        const Eigen::ArrayXd& comp = u.comp[c];
        Eigen::ArrayXd& g = out.grad.comp[c];
        for (int ax = 0; ax < 3; ++ax) {
            const int naxis = d[ax];
            const std::int64_t st = strides[ax];
            for (int z = 0; z < d.nz; ++z) {
                for (int y = 0; y < d.ny; ++y) {
                    for (int x = 0; x < d.nx; ++x) {
                        const int p = (ax == 0) ? x : (ax == 1 ? y : z);
                        const std::int64_t i = flat_index(d, x, y, z);
                        std::int64_t ilo, ihi;
                        double denom;
                        if (p == 0) {
                            ilo = i;
                            ihi = i + st;
                            denom = 1.0;
                        } else if (p == naxis - 1) {
                            ilo = i - st;
                            ihi = i;
                            denom = 1.0;
                        } else {
                            ilo = i - st;
                            ihi = i + st;
                            denom = 2.0;
                        }
                        const double diff = (comp[ihi] - comp[ilo]) / denom;
                        total += diff * diff;
                        const double adj = 2.0 * scale * diff / denom;
                        g[ihi] += adj;
                        g[ilo] -= adj;
                    }
                }
            }
        }
    }
    out.value = total * scale;
    return out;
}

RegGrad bending_energy(const VectorField& u) {
    const Dims3 d = u.dims;
    if (d.nx < 3 || d.ny < 3 || d.nz < 3) {
        fail(ErrorKind::dims_mismatch, "bending_energy needs dims >= 3 per axis");
    }
    const std::int64_t n_int = static_cast<std::int64_t>(d.nx - 2) * (d.ny - 2) * (d.nz - 2);
    const double scale = 1.0 / (3.0 * static_cast<double>(n_int));
    const std::int64_t sx = 1, sy = d.nx, sz = static_cast<std::int64_t>(d.nx) * d.ny;
    RegGrad out;
    out.grad = VectorField::zeros(d, u.spacing);
    double total = 0.0;
    const std::int64_t strides[3] = {sx, sy, sz};
    for (int c = 0; c < 3; ++c) {
        const Eigen::ArrayXd& f = u.comp[c];
        Eigen::ArrayXd& g = out.grad.comp[c];
        for (int z = 1; z < d.nz - 1; ++z) {
            for (int y = 1; y < d.ny - 1; ++y) {
                for (int x = 1; x < d.nx - 1; ++x) {
                    const std::int64_t i = flat_index(d, x, y, z);
                    // Pure second differences, weight 1.
                    for (int ax = 0; ax < 3; ++ax) {
                        const std::int64_t st = strides[ax];
                        const double dd = f[i + st] - 2.0 * f[i] + f[i - st];
                        total += dd * dd;
                        const double adj = 2.0 * scale * dd;
                        g[i + st] += adj;
                        g[i] -= 2.0 * adj;
                        g[i - st] += adj;
                    }
                    // Mixed second differences, weight 2.
                    for (int a = 0; a < 3; ++a) {
                        for (int b = a + 1; b < 3; ++b) {
                            const std::int64_t sa = strides[a], sb = strides[b];
                            const double dd =
                                (f[i + sa + sb] - f[i + sa - sb] - f[i - sa + sb] +
                                 f[i - sa - sb]) /
                                4.0;
                            total += 2.0 * dd * dd;
                            const double adj = 4.0 * scale * dd / 4.0;
                            g[i + sa + sb] += adj;
                            g[i + sa - sb] -= adj;
                            g[i - sa + sb] -= adj;
                            g[i - sa - sb] += adj;
                        }
                    }
                }
            }
        }
    }
    out.value = total * scale;
    return out;
}

LossGrad similarity_eval(const SimilaritySpec& spec, const Volume& fixed,
                         const Volume& warped) {
    switch (spec.kind) {
        case Similarity::ssd: return ssd(fixed, warped);
        case Similarity::gncc: return gncc(fixed, warped);
        case Similarity::lncc: return lncc(fixed, warped, spec.window);
        case Similarity::mi: return mi(fixed, warped, spec.bins);
    }
    fail(ErrorKind::config_invalid, "unknown similarity kind");
}

LossGrad label_eval(LabelLoss kind, const Volume& fixed_label, const Volume& warped_label) {
    return kind == LabelLoss::dice ? dice_loss(fixed_label, warped_label)
                                   : cross_entropy(fixed_label, warped_label);
}

RegGrad regularizer_eval(RegKind kind, const VectorField& u) {
    return kind == RegKind::gradient_l2 ? gradient_l2(u) : bending_energy(u);
}

double ssd_value(const Volume& f, const Volume& w) { return ssd(f, w).value; }
double gncc_value(const Volume& f, const Volume& w) { return gncc(f, w).value; }
double lncc_value(const Volume& f, const Volume& w, int window) {
    return lncc(f, w, window).value;
}
double mi_value(const Volume& f, const Volume& w, int bins) { return mi(f, w, bins).value; }
double dice_loss_value(const Volume& f, const Volume& w) { return dice_loss(f, w).value; }
double cross_entropy_value(const Volume& f, const Volume& w) {
    return cross_entropy(f, w).value;
}
double gradient_l2_value(const VectorField& u) { return gradient_l2(u).value; }
double bending_energy_value(const VectorField& u) { return bending_energy(u).value; }

ObjectiveResult total_objective(const Volume& fixed, const Volume& moving,
                                const Volume* fixed_label, const Volume* moving_label,
                                const Transform& transform,
                                const ObjectiveWeights& weights,
                                const SimilaritySpec& sim) {
    if (weights.image < 0.0 || weights.label < 0.0 || weights.reg < 0.0) {
        fail(ErrorKind::config_invalid, "objective weights must be >= 0");
    }
    if (weights.image <= 0.0 && weights.label <= 0.0) {
        fail(ErrorKind::config_invalid,
             "at least one of image/label weights must be > 0");
    }
    if (weights.label > 0.0 && (fixed_label == nullptr || moving_label == nullptr)) {
        fail(ErrorKind::missing_labels,
             "label weight is positive but labels were not provided");
    }
    require_same_dims(fixed.dims, moving.dims, "total_objective");

    const VectorField u = ddf_of(transform, fixed.dims, fixed.spacing);
    VectorField g_u = VectorField::zeros(fixed.dims, fixed.spacing);
    ObjectiveResult out;

    if (weights.image > 0.0) {
        const Volume warped = warp(moving, u);
        LossGrad lg = similarity_eval(sim, fixed, warped);
        out.report.image_term = lg.value;
        lg.grad.data *= weights.image;
        const VectorField a = warp_adjoint(moving, u, lg.grad);
        for (int c = 0; c < 3; ++c) g_u.comp[c] += a.comp[c];
    }
    if (weights.label > 0.0) {
        require_same_dims(fixed.dims, fixed_label->dims, "total_objective labels");
        require_same_dims(fixed.dims, moving_label->dims, "total_objective labels");
        // Optimization always warps labels with linear interpolation.
        const Volume warped_lbl = warp(*moving_label, u);
        LossGrad lg = label_eval(weights.label_kind, *fixed_label, warped_lbl);
        out.report.label_term = lg.value;
        lg.grad.data *= weights.label;
        const VectorField a = warp_adjoint(*moving_label, u, lg.grad);
        for (int c = 0; c < 3; ++c) g_u.comp[c] += a.comp[c];
    }
    if (weights.reg > 0.0) {
        RegGrad rg = regularizer_eval(weights.reg_kind, u);
        out.report.reg_term = rg.value;
        for (int c = 0; c < 3; ++c) g_u.comp[c] += weights.reg * rg.grad.comp[c];
    }

    out.report.total = weights.image * out.report.image_term +
                       weights.label * out.report.label_term +
                       weights.reg * out.report.reg_term;
    out.param_grad = pullback_params(transform, g_u);
    return out;
}

} // namespace defreg

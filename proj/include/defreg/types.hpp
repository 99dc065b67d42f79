#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <string>

#include "defreg/errors.hpp"

namespace defreg {

// All internal arithmetic is double precision; files store float32 (see io).
using Scalar = double;

// A point in continuous voxel coordinates of a specific grid. May lie
// outside [0, n-1]; sampling clamps per axis.
using Point3 = Eigen::Vector3d;

struct Dims3 {
    int nx = 0;
    int ny = 0;
    int nz = 0;

    std::int64_t voxel_count() const {
        return static_cast<std::int64_t>(nx) * ny * nz;
    }

    int operator[](int axis) const {
        return axis == 0 ? nx : (axis == 1 ? ny : nz);
    }

    bool operator==(const Dims3&) const = default;

    std::string str() const {
        return std::to_string(nx) + "x" + std::to_string(ny) + "x" +
               std::to_string(nz);
    }
};

inline std::int64_t flat_index(const Dims3& d, int x, int y, int z) {
    return x + static_cast<std::int64_t>(d.nx) * (y + static_cast<std::int64_t>(d.ny) * z);
}

inline void require_same_dims(const Dims3& a, const Dims3& b, const char* where) {
    if (!(a == b)) {
        fail(ErrorKind::dims_mismatch,
             std::string(where) + ": grids differ, " + a.str() + " vs " + b.str());
    }
}

// Scalar 3-D grid with physical spacing (mm per voxel). Flat x-fastest
// storage; images and soft label masks share this type.
struct Volume {
    Dims3 dims;
    Eigen::Vector3d spacing{1.0, 1.0, 1.0};
    Eigen::ArrayXd data;

    Volume() = default;
    Volume(Dims3 d, Eigen::Vector3d sp, Eigen::ArrayXd values)
        : dims(d), spacing(std::move(sp)), data(std::move(values)) {}

    static Volume zeros(Dims3 d, Eigen::Vector3d sp = {1.0, 1.0, 1.0}) {
        return Volume(d, std::move(sp), Eigen::ArrayXd::Zero(d.voxel_count()));
    }

    Scalar at(int x, int y, int z) const { return data[flat_index(dims, x, y, z)]; }
    Scalar& at(int x, int y, int z) { return data[flat_index(dims, x, y, z)]; }
};

// Per-voxel 3-vector grid; components are in voxel units of its own grid.
// An all-zero field is the identity displacement. Stored as one plane per
// component so per-component kernels stay expression friendly.
struct VectorField {
    Dims3 dims;
    Eigen::Vector3d spacing{1.0, 1.0, 1.0};
    std::array<Eigen::ArrayXd, 3> comp;

    VectorField() = default;

    static VectorField zeros(Dims3 d, Eigen::Vector3d sp = {1.0, 1.0, 1.0}) {
        VectorField f;
        f.dims = d;
        f.spacing = std::move(sp);
        for (auto& c : f.comp) c = Eigen::ArrayXd::Zero(d.voxel_count());
        return f;
    }

    Point3 at(std::int64_t i) const { return {comp[0][i], comp[1][i], comp[2][i]}; }
    Point3 at(int x, int y, int z) const { return at(flat_index(dims, x, y, z)); }

    void set(std::int64_t i, const Point3& v) {
        comp[0][i] = v.x();
        comp[1][i] = v.y();
        comp[2][i] = v.z();
    }
};

// Construction invariants: size matches dims, every value finite.
void validate(const Volume& vol, const char* where);
void validate(const VectorField& field, const char* where);

// Label volumes additionally require values in [0, 1].
void validate_label_range(const Volume& vol, const char* where);

} // namespace defreg

#pragma once

#include <functional>
#include <vector>

namespace defreg::parallel {

// Process-wide worker count for voxel loops. Set once by the CLI before any
// kernel runs; defaults to 1. Results never depend on it: reductions are
// accumulated per z-slice in ascending slice order.
void set_threads(int n);
int threads();

// Runs fn(z) for z in [0, nz), split into contiguous chunks across workers.
void for_each_slice(int nz, const std::function<void(int)>& fn);

// Evaluates fn(z) for every slice, then sums the per-slice values in
// ascending z order. Deterministic for any worker count.
double sum_slices(int nz, const std::function<double(int)>& fn);

} // namespace defreg::parallel

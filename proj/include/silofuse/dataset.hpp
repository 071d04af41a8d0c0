#pragma once

#include <cstdint>
#include <string>

#include "silofuse/matrix.hpp"
#include "silofuse/table.hpp"

namespace silofuse {

// Built-in desk-scale generators standing in for public benchmark datasets:
// everything is seeded and offline.

// 3 continuous + 2 categorical columns driven by a latent class and a shared
// continuous factor, so cross-column associations are strong by
// construction. The acceptance fixture.
Table make_correlated_fixture(int64_t rows, uint64_t seed);

// 6 continuous + 4 categorical variant wide enough for 8-way partitioning
// (the robustness grid).
Table make_correlated_wide_fixture(int64_t rows, uint64_t seed);

// Plain independent Gaussian columns (continuous only).
Table make_gaussian_table(int64_t rows, int64_t columns, uint64_t seed);

// Two-component 2-D Gaussian mixture, returned as a latent matrix.
Matrix make_mixture_latents(int64_t rows, uint64_t seed);

// Independent per-column resampling (with replacement) of the source:
// marginals preserved, associations destroyed.
Table make_marginal_synthetic(const Table& source, uint64_t seed);

// Independent within-column row shuffles: same cells per column, associations
// destroyed.
Table shuffle_columns_independently(const Table& source, uint64_t seed);

// Named lookup used by the CLI config ("correlated" | "gaussian").
Table make_builtin_dataset(const std::string& name, int64_t rows, uint64_t seed);

}  // namespace silofuse

#pragma once

#include <functional>

#include "perco/params.hpp"
#include "perco/sigma.hpp"

namespace perco {

// Translation-invariant symmetric kernel evaluated at a displacement z != 0.
using KernelFn = std::function<double(const Pt& z)>;

// J(z) = c * |z|^-(d+alpha), sup norm. Throws on z = 0.
double kernel_J(const ModelParams& pr, const Pt& z);

KernelFn power_law_kernel(const ModelParams& pr);

// c * L^-(d+alpha)n for pairs whose smallest common block has level n;
// zero on the diagonal and when no stored block joins the points.
double kernel_H_sigma(const ModelParams& pr, const SigmaDecomposition& sg,
                      const Pt& x, const Pt& y);

// Remainder J - H_sigma; never negative (throws past rounding tolerance).
double kernel_R_sigma(const ModelParams& pr, const SigmaDecomposition& sg,
                      const Pt& x, const Pt& y,
                      const KernelFn* kernel = nullptr);

// Contribution of one block's layer: nonzero only when both points lie in B
// and B's level is exactly their joining level. Level-0 blocks carry no layer.
double kernel_H_block(const ModelParams& pr, const SigmaDecomposition& sg,
                      const Block& b, const Pt& x, const Pt& y);

// Rate seen by the cluster of B: full J unless the pair joins strictly above
// B (inside an ancestor), in which case only the remainder survives.
// Siblings share this kernel, and restricting to the parent adds exactly the
// parent's layer.
double kernel_J_restricted(const ModelParams& pr, const SigmaDecomposition& sg,
                           const Block& b, const Pt& x, const Pt& y,
                           const KernelFn* kernel = nullptr);

}  // namespace perco

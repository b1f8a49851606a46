#pragma once

#include <cstdint>

#include "gls/imaging.hpp"
#include "gls/instance.hpp"
#include "gls/modeling.hpp"

namespace gls {

struct GenOptions {
  int n = 10;
  int k = 3;
  // Guarantee at least one positive diagonal group so the aggregate system
  // is nonsingular.
  bool ensure_anchor = false;
};

// Deterministic random instance: a mix of path, sparse-Laplacian, diagonal
// and single-edge groups with sparse fixed potentials.
Instance gen_random_instance(std::uint64_t seed, const GenOptions& opt = {});

// Total-variation instance of a noisy synthetic image (noise sigma 0.25),
// with the plain-norm fidelity group appended so the file is self-contained.
Instance gen_tv_instance(std::uint64_t seed, int size, double lambda, TvMode mode);

// Deterministic connected graph with integer edge values in [1, max_value].
WeightedGraph gen_random_graph(std::uint64_t seed, int n, double edge_prob, int max_value);

}  // namespace gls

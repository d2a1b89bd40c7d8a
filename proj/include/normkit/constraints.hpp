#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "normkit/mat.hpp"

namespace normkit {

enum class NormMethod { BN, BW, GN, GW };

std::string to_string(NormMethod m);
NormMethod norm_method_from_string(const std::string& s);

struct ConstraintReport {
  NormMethod method = NormMethod::BN;
  std::size_t d = 0, m = 0, g = 1;
  long long zeta_batch = 0;                 // zeta(phi; X)
  std::optional<long long> zeta_dataset;    // zeta(phi; D) when N given
  long long chi = 0;                        // md, number of output variables
  bool feasible = false;                    // zeta_batch <= chi
};

/// Closed-form constraint numbers:
///   BN -> 2d, BW -> d(d+3)/2, GN -> 2gm, GW -> mg(g+3)/2,
/// and the dataset-level counts when N is given (N must be divisible by m
/// for the batch-dimension methods).
ConstraintReport constraint_count(NormMethod method, std::size_t d, std::size_t m,
                                  std::size_t g, std::optional<long long> n_dataset = {});

struct FeasibilityBound {
  std::string description;   // e.g. "m >= (d+3)/2"
  double threshold = 0.0;    // numeric bound on m (BN/BW) or g (GN/GW)
  bool bound_is_on_m = true; // false: bound constrains g
  /// GW only: the practical stability bound g <= sqrt(d).
  std::optional<double> practical_threshold;
};

/// The binding inequality from the feasibility condition zeta <= md.
FeasibilityBound feasibility_bound(NormMethod method, std::size_t d);

/// Numerical certificate for the constraint counts: rank of the Jacobian
/// of the constraint system at a feasible point (built constructively by
/// normalizing a random input), via one-sided Jacobi SVD with threshold
/// 1e-8 * sigma_max, maximized over `trials` random points.
///
/// Throws InfeasibleError when the configuration violates the feasibility
/// range, or when the exact constraint set is empty (whitening methods
/// additionally need m >= d+1 / c >= g+1; the counting bound alone does
/// not guarantee a feasible point).
std::size_t constraint_rank_oracle(NormMethod method, std::size_t d, std::size_t m,
                                   std::size_t g, int trials, std::uint64_t seed);

/// True when an exactly-constrained output exists for the configuration
/// (stricter than the counting bound for BW/GW).
bool constraint_set_nonempty(NormMethod method, std::size_t d, std::size_t m, std::size_t g);

}  // namespace normkit

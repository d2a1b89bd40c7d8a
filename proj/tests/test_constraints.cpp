#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "normkit/constraints.hpp"
#include "normkit/errors.hpp"

using namespace normkit;

TEST_CASE("closed-form constraint numbers match Table entries") {
  CHECK(constraint_count(NormMethod::BN, 4, 16, 1).zeta_batch == 8);     // 2d
  CHECK(constraint_count(NormMethod::BW, 4, 16, 1).zeta_batch == 14);    // d(d+3)/2
  CHECK(constraint_count(NormMethod::GN, 8, 3, 2).zeta_batch == 12);     // 2gm
  CHECK(constraint_count(NormMethod::GW, 8, 3, 2).zeta_batch == 15);     // mg(g+3)/2
}

TEST_CASE("dataset-level constraint numbers") {
  CHECK(*constraint_count(NormMethod::BN, 4, 16, 1, 1600).zeta_dataset == 2 * 1600 * 4 / 16);
  CHECK(*constraint_count(NormMethod::BW, 4, 16, 1, 1600).zeta_dataset == 1600 / 16 * 14);
  CHECK(*constraint_count(NormMethod::GN, 8, 16, 2, 1600).zeta_dataset == 2 * 2 * 1600);
  CHECK(*constraint_count(NormMethod::GW, 8, 16, 2, 1600).zeta_dataset == 1600 * 5);
  CHECK_THROWS_AS(constraint_count(NormMethod::BN, 4, 16, 1, 1601), std::invalid_argument);
}

TEST_CASE("feasibility flag follows zeta <= md") {
  CHECK(constraint_count(NormMethod::BN, 4, 2, 1).feasible);
  CHECK_FALSE(constraint_count(NormMethod::BN, 4, 1, 1).feasible);
  CHECK(constraint_count(NormMethod::BW, 4, 4, 1).feasible);   // counting bound only
  CHECK_FALSE(constraint_count(NormMethod::BW, 4, 3, 1).feasible);
}

TEST_CASE("feasibility bounds") {
  CHECK(feasibility_bound(NormMethod::BN, 7).description == "m >= 2");
  CHECK(feasibility_bound(NormMethod::BW, 5).threshold == doctest::Approx(4.0));
  CHECK(feasibility_bound(NormMethod::GN, 8).threshold == doctest::Approx(4.0));
  // GW, d=9 -> g <= 3
  const FeasibilityBound gw9 = feasibility_bound(NormMethod::GW, 9);
  CHECK(gw9.threshold == doctest::Approx(3.0));
  CHECK(*gw9.practical_threshold == doctest::Approx(3.0));
  // BN any d -> m >= 2
  CHECK(feasibility_bound(NormMethod::BN, 1000).threshold == 2.0);
}

TEST_CASE("constraint_set_nonempty is stricter than the counting bound for whitening") {
  CHECK(constraint_set_nonempty(NormMethod::BW, 3, 8, 1));
  CHECK(constraint_set_nonempty(NormMethod::BW, 3, 4, 1));
  CHECK_FALSE(constraint_set_nonempty(NormMethod::BW, 4, 4, 1));   // m = d: empty
  CHECK_FALSE(constraint_set_nonempty(NormMethod::BW, 8, 8, 1));
  CHECK(constraint_set_nonempty(NormMethod::GW, 8, 4, 2));         // c=4 >= g+1
  CHECK_FALSE(constraint_set_nonempty(NormMethod::GW, 16, 4, 4));  // c=4 = g: empty
}

TEST_CASE("rank oracle equals the closed form on the spec examples") {
  CHECK(constraint_rank_oracle(NormMethod::BN, 3, 5, 1, 5, 42) == 6);
  CHECK(constraint_rank_oracle(NormMethod::BW, 3, 8, 1, 5, 42) == 9);
  CHECK(constraint_rank_oracle(NormMethod::GW, 8, 4, 2, 5, 42) == 20);
}

TEST_CASE("rank oracle rejects infeasible configurations") {
  CHECK_THROWS_AS(constraint_rank_oracle(NormMethod::BN, 4, 1, 1, 5, 1), InfeasibleError);
  CHECK_THROWS_AS(constraint_rank_oracle(NormMethod::BW, 4, 3, 1, 5, 1), InfeasibleError);
  // counting bound holds but the constraint set is empty
  CHECK_THROWS_WITH_AS(constraint_rank_oracle(NormMethod::BW, 4, 4, 1, 5, 1),
                       doctest::Contains("empty"), InfeasibleError);
}

TEST_CASE("zeta monotonicity") {
  // GW zeta strictly increasing in g (d fixed, m fixed)
  long long prev = 0;
  for (std::size_t g : {1u, 2u, 4u, 8u}) {
    const long long z = constraint_count(NormMethod::GW, 8, 4, g).zeta_batch;
    CHECK(z > prev);
    prev = z;
  }
  // BW zeta independent of m
  CHECK(constraint_count(NormMethod::BW, 6, 2, 1).zeta_batch ==
        constraint_count(NormMethod::BW, 6, 64, 1).zeta_batch);
}

TEST_CASE("feasibility bound is exactly where zeta <= md flips") {
  for (std::size_t d : {2u, 3u, 4u, 6u, 8u}) {
    // BW: bound on m
    const double thr = feasibility_bound(NormMethod::BW, d).threshold;
    for (std::size_t m = 1; m <= 16; ++m) {
      const bool counted = constraint_count(NormMethod::BW, d, m, 1).feasible;
      CHECK(counted == (static_cast<double>(m) >= thr));
    }
    // GW: bound on g
    const double gthr = feasibility_bound(NormMethod::GW, d).threshold;
    for (std::size_t g = 1; g <= d; ++g) {
      if (d % g != 0) continue;
      const bool counted = constraint_count(NormMethod::GW, d, 4, g).feasible;
      CHECK(counted == (static_cast<double>(g) <= gthr));
    }
  }
}

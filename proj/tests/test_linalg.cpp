#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "dsfem/assembly.hpp"
#include "dsfem/solve.hpp"
#include "dsfem/sparse.hpp"

using namespace dsfem;

namespace {

SparseMatrix identity(int n) {
  std::vector<Triplet> t;
  for (int i = 0; i < n; ++i) t.push_back({i, i, 1.0});
  return csr_from_triplets(n, n, std::move(t));
}

// Random symmetric diagonally dominant band matrix: well conditioned and
// positive definite by Gershgorin.
SparseMatrix random_spd_band(int n, int bandwidth, std::mt19937& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<std::vector<double>> dense(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j <= std::min(n - 1, i + bandwidth); ++j)
      dense[i][j] = dense[j][i] = dist(rng);
  for (int i = 0; i < n; ++i) {
    double offsum = 0.0;
    for (int j = 0; j < n; ++j)
      if (j != i) offsum += std::abs(dense[i][j]);
    dense[i][i] = offsum + 1.0 + std::abs(dist(rng));
  }
  std::vector<Triplet> t;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (dense[i][j] != 0.0) t.push_back({i, j, dense[i][j]});
  return csr_from_triplets(n, n, std::move(t));
}

CoefVec random_vec(int n, std::mt19937& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  CoefVec v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

double rel_residual(const SparseMatrix& A, const CoefVec& x, const CoefVec& b) {
  CoefVec r = matvec(A, x);
  for (size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
  double bn = norm2(b);
  return bn > 0.0 ? norm2(r) / bn : norm2(r);
}

}  // namespace

TEST_SUITE_BEGIN("linalg");

TEST_CASE("matvec basics") {
  std::mt19937 rng(31);
  SparseMatrix I = identity(7);
  CoefVec x = random_vec(7, rng);
  CoefVec y = matvec(I, x);
  for (int i = 0; i < 7; ++i) CHECK(y[i] == x[i]);

  SparseMatrix Z = csr_from_triplets(4, 4, {});
  CoefVec z = matvec(Z, CoefVec(4, 1.0));
  for (double v : z) CHECK(v == 0.0);

  // P1 mass matrix on one unit cell: row sums are 1/2.
  FESpace space = build_space(build_interval_mesh(0, 1, 1), 1);
  SparseMatrix M = assemble_mass(space);
  CoefVec r = matvec(M, CoefVec(2, 1.0));
  CHECK(r[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(r[1] == doctest::Approx(0.5).epsilon(1e-14));

  CHECK_THROWS_AS(matvec(M, CoefVec(3, 1.0)), std::invalid_argument);
}

TEST_CASE("csr construction invariants") {
  SparseMatrix A = csr_from_triplets(2, 2, {{0, 1, 2.0}, {0, 1, 3.0}, {1, 0, 1.0}, {0, 0, 4.0}});
  CHECK(A.at(0, 1) == 5.0);  // duplicate summed
  CHECK(A.at(0, 0) == 4.0);
  CHECK(A.at(1, 1) == 0.0);
  CHECK_THROWS_AS(csr_from_triplets(2, 2, {{0, 5, 1.0}}), std::invalid_argument);
}

TEST_CASE("solve on trivial systems") {
  std::mt19937 rng(32);
  SparseMatrix I = identity(9);
  CoefVec b = random_vec(9, rng);
  for (SolveMethod method : {SolveMethod::Direct, SolveMethod::ConjugateGradient}) {
    SolveConfig cfg;
    cfg.method = method;
    CoefVec x = solve(I, b, cfg);
    for (int i = 0; i < 9; ++i) CHECK(x[i] == doctest::Approx(b[i]).epsilon(1e-13));

    CoefVec zero = solve(I, CoefVec(9, 0.0), cfg);
    for (double v : zero) CHECK(v == 0.0);
  }
}

TEST_CASE("solve reaches the declared tolerance on random SPD systems") {
  std::mt19937 rng(33);
  std::uniform_int_distribution<int> size_dist(3, 200);
  std::uniform_int_distribution<int> band_dist(1, 10);
  for (int trial = 0; trial < 100; ++trial) {
    int n = size_dist(rng);
    SparseMatrix A = random_spd_band(n, band_dist(rng), rng);
    CoefVec b = random_vec(n, rng);
    SolveConfig cfg;
    cfg.method = trial % 2 == 0 ? SolveMethod::Direct : SolveMethod::ConjugateGradient;
    CoefVec x = solve(A, b, cfg);
    CHECK(rel_residual(A, x, b) <= 1e-12);
  }
}

TEST_CASE("direct and CG agree on an assembled operator") {
  FESpace space = build_space(build_unit_square_tri_mesh(4), 2);
  SparseMatrix A = assemble_combined(space, 1.0);
  std::mt19937 rng(34);
  CoefVec b = random_vec(space.n_dofs, rng);
  SolveConfig direct;
  SolveConfig cg;
  cg.method = SolveMethod::ConjugateGradient;
  CoefVec xd = solve(A, b, direct);
  CoefVec xc = solve(A, b, cg);
  CHECK(rel_residual(A, xd, b) <= 1e-12);
  double scale = norm2(xd);
  for (int i = 0; i < space.n_dofs; ++i) CHECK(std::abs(xd[i] - xc[i]) <= 1e-8 * scale);
}

TEST_CASE("solver failure paths") {
  // Singular: a zero row.
  SparseMatrix S = csr_from_triplets(3, 3, {{0, 0, 1.0}, {2, 2, 1.0}});
  CHECK_THROWS_AS(solve(S, CoefVec(3, 1.0)), SolveFailure);

  // CG starved of iterations carries the residual in the failure.
  std::mt19937 rng(35);
  SparseMatrix A = random_spd_band(50, 3, rng);
  CoefVec b = random_vec(50, rng);
  SolveConfig cfg;
  cfg.method = SolveMethod::ConjugateGradient;
  cfg.max_iters = 1;
  try {
    solve(A, b, cfg);
    FAIL("expected SolveFailure");
  } catch (const SolveFailure& e) {
    CHECK(e.residual > 0.0);
    CHECK(e.iters == 1);
  }

  // CG on an indefinite matrix is rejected.
  SparseMatrix Ind = csr_from_triplets(2, 2, {{0, 0, 1.0}, {1, 1, -1.0}});
  CoefVec b2{1.0, 1.0};
  CHECK_THROWS_AS(solve(Ind, b2, cfg), SolveFailure);

  CHECK_THROWS_AS(solve(A, CoefVec(3, 0.0)), std::invalid_argument);
}

TEST_CASE("rcm reduces the bandwidth of a shuffled band matrix") {
  std::mt19937 rng(36);
  const int n = 60;
  SparseMatrix band = random_spd_band(n, 2, rng);
  // Shuffle rows/columns.
  std::vector<int> shuffle(n);
  std::iota(shuffle.begin(), shuffle.end(), 0);
  std::shuffle(shuffle.begin(), shuffle.end(), rng);
  std::vector<Triplet> t;
  auto offsets = band.row_offsets();
  auto cols = band.col_indices();
  auto vals = band.values();
  for (int r = 0; r < n; ++r)
    for (int k = offsets[r]; k < offsets[r + 1]; ++k)
      t.push_back({shuffle[r], shuffle[cols[k]], vals[k]});
  SparseMatrix shuffled = csr_from_triplets(n, n, std::move(t));

  auto bandwidth_under = [&](const std::vector<int>& order) {
    std::vector<int> inv(n);
    for (int k = 0; k < n; ++k) inv[order[k]] = k;
    int bw = 0;
    auto off = shuffled.row_offsets();
    auto cc = shuffled.col_indices();
    for (int r = 0; r < n; ++r)
      for (int k = off[r]; k < off[r + 1]; ++k) bw = std::max(bw, std::abs(inv[r] - inv[cc[k]]));
    return bw;
  };
  std::vector<int> natural(n);
  std::iota(natural.begin(), natural.end(), 0);
  CHECK(bandwidth_under(rcm_ordering(shuffled)) < bandwidth_under(natural));
  CHECK(bandwidth_under(rcm_ordering(shuffled)) <= 8);

  // And the solve still works through the permutation.
  CoefVec b = random_vec(n, rng);
  CHECK(rel_residual(shuffled, solve(shuffled, b), b) <= 1e-12);
}

TEST_CASE("direct solver handles a nonsymmetric band system") {
  // Banded LU with partial pivoting is not restricted to SPD input.
  std::mt19937 rng(37);
  const int n = 80;
  std::vector<Triplet> t;
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int i = 0; i < n; ++i) {
    t.push_back({i, i, 4.0 + dist(rng)});
    if (i + 1 < n) {
      t.push_back({i, i + 1, dist(rng)});
      t.push_back({i + 1, i, dist(rng)});
    }
    if (i + 2 < n) t.push_back({i, i + 2, dist(rng)});
  }
  SparseMatrix A = csr_from_triplets(n, n, std::move(t));
  CoefVec b = random_vec(n, rng);
  CHECK(rel_residual(A, solve(A, b), b) <= 1e-12);
}

TEST_SUITE_END();

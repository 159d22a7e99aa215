#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "oamtomo/error.hpp"
#include "oamtomo/tomography.hpp"
#include "test_support.hpp"

using namespace oamtomo;
using oamtomo::testing::bell_rho;
using oamtomo::testing::random_density;

namespace {

MeasurementSetting ms(const char* s) { return MeasurementSetting::parse(s); }

CholeskyParams random_params(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  CholeskyParams p{};
  for (double& x : p) x = n(rng);
  return p;
}

// Noisy probability set: exact predictions plus Gaussian noise, computational
// quadruple renormalized.
ProbabilitySet noisy(const DensityMatrix& rho, double amp, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, amp);
  ProbabilitySet p = predicted_probabilities(rho);
  for (double& v : p.values) v += n(rng);
  const double s = p[0] + p[1] + p[2] + p[3];
  for (std::size_t i = 0; i < 4; ++i) p[i] /= s;
  return p;
}

}  // namespace

TEST_CASE("canonical_settings order") {
  const auto& s = canonical_settings();
  CHECK(s.size() == 16);
  CHECK(s[0].name() == "HH");
  CHECK(s[13].name() == "LR");
  const char* expected[] = {"HH", "HV", "VH", "VV", "HD", "HL", "VD", "VL",
                            "DH", "LH", "DV", "LV", "DD", "LR", "RA", "AR"};
  for (std::size_t i = 0; i < 16; ++i) {
    CHECK(s[i].name() == expected[i]);
    CHECK(canonical_index(s[i]) == i);
  }
  CHECK_THROWS_AS(canonical_index(ms("RR")), Error);
}

TEST_CASE("predicted_probabilities examples") {
  const auto p = predicted_probabilities(bell_rho(BellState::PhiPlus));
  CHECK(p.at(ms("HH")) == doctest::Approx(0.5));
  CHECK(p.at(ms("VV")) == doctest::Approx(0.5));
  CHECK(std::abs(p.at(ms("HV"))) < 1e-16);
  CHECK(std::abs(p.at(ms("VH"))) < 1e-16);
  CHECK(p.at(ms("DD")) == doctest::Approx(0.5));
  CHECK(p.at(ms("HD")) == doctest::Approx(0.25));
}

TEST_CASE("linear_inversion examples") {
  const auto rho = linear_inversion(predicted_probabilities(bell_rho(BellState::PhiPlus)));
  Matrix4 expected;
  expected(0, 0) = expected(3, 3) = expected(0, 3) = expected(3, 0) = 0.5;
  CHECK(max_abs_diff(rho.matrix(), expected) < 1e-10);

  ProbabilitySet flat;
  flat.values.fill(0.25);
  CHECK(max_abs_diff(linear_inversion(flat).matrix(), Matrix4::identity() * 0.25) < 1e-12);
}

TEST_CASE("linear_inversion round trip over random states") {
  std::mt19937_64 rng(101);
  for (int i = 0; i < 1000; ++i) {
    const auto rho = random_density(rng, 1 + i % 4);
    CHECK(max_abs_diff(linear_inversion(predicted_probabilities(rho)).matrix(), rho.matrix()) < 1e-9);
  }
}

TEST_CASE("linear_inversion satisfies the simple relations for arbitrary data") {
  std::mt19937_64 rng(103);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    ProbabilitySet p;
    for (double& v : p.values) v = u(rng);
    const double s = p[0] + p[1] + p[2] + p[3];
    for (std::size_t k = 0; k < 4; ++k) p[k] /= s;
    const auto rho = linear_inversion(p);
    auto r = [&](int a, int b) { return rho(static_cast<std::size_t>(a - 1), static_cast<std::size_t>(b - 1)); };
    auto P = [&](const char* name) { return p.at(ms(name)); };
    const double tol = 1e-12;
    CHECK(std::abs(r(1, 1).real() - P("HH")) < tol);
    CHECK(std::abs(r(2, 2).real() - P("HV")) < tol);
    CHECK(std::abs(r(3, 3).real() - P("VH")) < tol);
    CHECK(std::abs(r(4, 4).real() - P("VV")) < tol);
    const double h = 0.5 * (r(1, 1).real() + r(2, 2).real());
    const double v = 0.5 * (r(3, 3).real() + r(4, 4).real());
    const double hs = 0.5 * (r(1, 1).real() + r(3, 3).real());
    const double vs = 0.5 * (r(2, 2).real() + r(4, 4).real());
    CHECK(std::abs(r(2, 1).real() - (P("HD") - h)) < tol);
    CHECK(std::abs(r(2, 1).imag() - (P("HL") - h)) < tol);
    CHECK(std::abs(r(4, 3).real() - (P("VD") - v)) < tol);
    CHECK(std::abs(r(4, 3).imag() - (P("VL") - v)) < tol);
    CHECK(std::abs(r(3, 1).real() - (P("DH") - hs)) < tol);
    CHECK(std::abs(r(3, 1).imag() - (P("LH") - hs)) < tol);
    CHECK(std::abs(r(4, 2).real() - (P("DV") - vs)) < tol);
    CHECK(std::abs(r(4, 2).imag() - (P("LV") - vs)) < tol);
  }
}

TEST_CASE("linear_inversion with explicit setting lists") {
  std::mt19937_64 rng(107);
  const auto rho = random_density(rng);
  std::vector<MeasurementSetting> settings(canonical_settings().begin(), canonical_settings().end());
  // Over-determined: add the remaining product settings.
  for (const char* extra : {"AA", "RR", "DA", "RL"}) settings.push_back(ms(extra));
  std::vector<double> probs;
  for (const auto& s : settings) probs.push_back(projection_probability(rho, s));
  CHECK(max_abs_diff(linear_inversion(settings, probs).matrix(), rho.matrix()) < 1e-9);

  // Computational settings only cannot fix the coherences.
  std::vector<MeasurementSetting> poor;
  for (int i = 0; i < 4; ++i)
    for (const auto& s : std::vector<MeasurementSetting>(canonical_settings().begin(), canonical_settings().begin() + 4))
      poor.push_back(s);
  std::vector<double> poor_p(poor.size(), 0.25);
  CHECK_THROWS_WITH_AS(linear_inversion(poor, poor_p), doctest::Contains("SingularSystem"), Error);
}

TEST_CASE("mle_cost examples") {
  std::mt19937_64 rng(109);
  const auto rho = random_density(rng);
  ProbabilitySet p = predicted_probabilities(rho);
  const SigmaSet s = SigmaSet::uniform(0.01);
  CHECK(mle_cost(rho, p, s) < 1e-20);

  ProbabilitySet bumped = p;
  bumped[6] += 0.01;
  CHECK(std::abs(mle_cost(rho, bumped, s) - 0.5) < 1e-9);

  const auto other = random_density(rng);
  const double c1 = mle_cost(other, p, s);
  const double c2 = mle_cost(other, p, SigmaSet::uniform(0.02));
  CHECK(c2 == doctest::Approx(c1 / 4.0).epsilon(1e-12));
  CHECK(c1 >= 0.0);
}

TEST_CASE("sigma floor") {
  SigmaSet s = SigmaSet::uniform(0.0);
  s[3] = 0.5;
  const auto f = s.floored();
  CHECK(f[0] == SigmaSet::kFloor);
  CHECK(f[3] == 0.5);
}

TEST_CASE("parametrize examples") {
  CholeskyParams p{};
  p[0] = p[1] = p[2] = p[3] = 1.0;
  CHECK(max_abs_diff(parametrize(p).matrix(), Matrix4::identity() * 0.25) < 1e-15);

  CholeskyParams hh{};
  hh[0] = 1.0;
  CHECK(max_abs_diff(parametrize(hh).matrix(), Matrix4::diagonal({1.0, 0.0, 0.0, 0.0})) < 1e-15);

  CHECK_THROWS_WITH_AS(parametrize(CholeskyParams{}), doctest::Contains("DegenerateParameters"), Error);
}

TEST_CASE("parametrize is always physical") {
  std::mt19937_64 rng(113);
  for (int i = 0; i < 10000; ++i) {
    const auto rho = parametrize(random_params(rng));
    CHECK(min_eigenvalue(rho) >= -1e-12);
    CHECK(std::abs(rho.matrix().trace().real() - 1.0) < 1e-12);
    CHECK(is_hermitian(rho.matrix(), 1e-15));
  }
}

TEST_CASE("params_from_density inverts parametrize") {
  std::mt19937_64 rng(127);
  for (int i = 0; i < 200; ++i) {
    const auto rho = random_density(rng, 1 + i % 4);
    const auto back = parametrize(params_from_density(rho));
    CHECK(max_abs_diff(back.matrix(), rho.matrix()) < 1e-8);
  }
  const auto phi = bell_rho(BellState::PhiMinus);
  CHECK(max_abs_diff(parametrize(params_from_density(phi)).matrix(), phi.matrix()) < 1e-8);
}

TEST_CASE("analytic gradient matches central finite differences") {
  std::mt19937_64 rng(131);
  std::uniform_real_distribution<double> u(0.002, 0.05);
  for (int point = 0; point < 100; ++point) {
    const auto truth = random_density(rng);
    const ProbabilitySet probs = noisy(truth, 0.03, rng);
    SigmaSet sig;
    for (double& s : sig.values) s = u(rng);
    const CholeskyParams x = random_params(rng);
    CholeskyParams g{};
    const double c = mle_cost_and_gradient(x, probs, sig, &g);
    CHECK(c == doctest::Approx(mle_cost(parametrize(x), probs, sig)).epsilon(1e-12));
    double gnorm = 0.0;
    for (double v : g) gnorm = std::max(gnorm, std::abs(v));
    for (std::size_t k = 0; k < 16; ++k) {
      const double h = 1e-6;
      CholeskyParams xp = x, xm = x;
      xp[k] += h;
      xm[k] -= h;
      const double fd = (mle_cost_and_gradient(xp, probs, sig, nullptr) -
                         mle_cost_and_gradient(xm, probs, sig, nullptr)) /
                        (2.0 * h);
      const double rel = std::abs(fd - g[k]) / std::max(std::abs(g[k]), 1e-3 * gnorm);
      CHECK(rel < 1e-4);
    }
  }
}

TEST_CASE("nearest_physical clips negative eigenvalues") {
  const auto bad = DensityMatrix::from_matrix(Matrix4::diagonal({0.7, 0.4, -0.1, 0.0}));
  const auto fixed = nearest_physical(bad);
  CHECK(max_abs_diff(fixed.matrix(), Matrix4::diagonal({0.7 / 1.1, 0.4 / 1.1, 0.0, 0.0})) < 1e-12);
  const auto ok = bell_rho(BellState::PsiPlus);
  CHECK(max_abs_diff(nearest_physical(ok).matrix(), ok.matrix()) < 1e-12);
}

TEST_CASE("mle_reconstruct on noiseless data") {
  for (BellState b : kAllBellStates) {
    const auto target = bell_rho(b);
    const auto r = mle_reconstruct(predicted_probabilities(target), SigmaSet::uniform(0.01));
    CHECK(fidelity(r.rho, target) > 0.9999);
    CHECK(is_physical(r.rho, 1e-10));
  }
  ProbabilitySet flat;
  flat.values.fill(0.25);
  const auto r = mle_reconstruct(flat, SigmaSet::uniform(0.01));
  CHECK(max_abs_diff(r.rho.matrix(), Matrix4::identity() * 0.25) < 1e-6);

  MLEConfig mixed_start;
  mixed_start.initial_state_policy = InitialStatePolicy::MaximallyMixed;
  const auto target = bell_rho(BellState::PsiMinus);
  const auto r2 = mle_reconstruct(predicted_probabilities(target), SigmaSet::uniform(0.01), mixed_start);
  CHECK(fidelity(r2.rho, target) > 0.9999);
}

TEST_CASE("mle_reconstruct is physical, monotone and deterministic under noise") {
  std::mt19937_64 rng(137);
  for (int i = 0; i < 30; ++i) {
    const auto truth = random_density(rng, 1 + i % 4);
    const ProbabilitySet probs = noisy(truth, 0.05, rng);
    const SigmaSet sig = SigmaSet::uniform(0.02);
    const auto r = mle_reconstruct(probs, sig);
    CHECK(is_physical(r.rho, 1e-10));
    CHECK(std::abs(r.rho.matrix().trace().real() - 1.0) < 1e-10);
    CHECK(r.cost <= r.initial_cost);
    CHECK(r.cost == doctest::Approx(mle_cost(r.rho, probs, sig)).epsilon(1e-12));
    const auto again = mle_reconstruct(probs, sig);
    CHECK(max_abs_diff(again.rho.matrix(), r.rho.matrix()) == 0.0);
    CHECK(again.iterations == r.iterations);
  }
}

TEST_CASE("mle_reconstruct rejects invalid configuration") {
  ProbabilitySet flat;
  flat.values.fill(0.25);
  MLEConfig c;
  c.max_iterations = 0;
  CHECK_THROWS_AS(mle_reconstruct(flat, SigmaSet::uniform(0.01), c), Error);
  c = {};
  c.gradient_tolerance = 0.0;
  CHECK_THROWS_AS(mle_reconstruct(flat, SigmaSet::uniform(0.01), c), Error);
  c = {};
  c.step_shrink_factor = 1.0;
  CHECK_THROWS_AS(mle_reconstruct(flat, SigmaSet::uniform(0.01), c), Error);
}

TEST_CASE("mle_reconstruct reports non-convergence without throwing") {
  std::mt19937_64 rng(139);
  const ProbabilitySet probs = noisy(random_density(rng), 0.05, rng);
  MLEConfig c;
  c.max_iterations = 1;
  const auto r = mle_reconstruct(probs, SigmaSet::uniform(0.01), c);
  CHECK_FALSE(r.converged);
  CHECK(r.iterations <= 1);
  CHECK(is_physical(r.rho, 1e-10));
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "qprep/analysis.hpp"
#include "qprep/experiment.hpp"

using namespace qprep;

namespace {

// A synthetic model: each detector is a single distinct measurement bit, one
// observable on the last bit. Convenient for feeding hand-built blocks.
DetectorModel toy_model(size_t dets) {
  DetectorModel dm;
  dm.rounds = 1;
  for (size_t i = 0; i < dets; ++i)
    dm.detectors.push_back({DetKind::Round0, 0, static_cast<int>(i), {static_cast<int>(i)}});
  dm.observables.push_back({"L", {static_cast<int>(dets)}});
  dm.build_incidence(dets + 1);
  return dm;
}

}  // namespace

TEST_CASE("decay fit recovers exact synthetic curves to 1e-9") {
  for (double eps : {0.05, 0.25, 0.45}) {
    for (double k0 : {0.0, 0.7}) {
      CAPTURE(eps);
      CAPTURE(k0);
      std::vector<double> ks, fs;
      for (int k = 1; k <= 8; ++k) {
        ks.push_back(k);
        fs.push_back(0.5 * (1 + std::pow(1 - 2 * eps, k - k0)));
      }
      DecayFit fit = fit_error_per_round(ks, fs);
      CHECK(std::abs(fit.eps - eps) < 1e-9);
      CHECK(std::abs(fit.k0 - k0) < 1e-7);
    }
  }
}

TEST_CASE("constant unit fidelity fits to zero error per round") {
  std::vector<double> ks = {1, 2, 3, 4};
  std::vector<double> fs = {1, 1, 1, 1};
  DecayFit fit = fit_error_per_round(ks, fs);
  CHECK(fit.eps == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("fit input validation") {
  CHECK_THROWS_AS(fit_error_per_round({1, 2}, {0.9, 0.8}), std::invalid_argument);
  // All points at or below 1/2 leave nothing to fit.
  CHECK_THROWS_AS(fit_error_per_round({1, 2, 3}, {0.5, 0.5, 0.5}), std::runtime_error);
}

TEST_CASE("post-selection bookkeeping on synthetic blocks") {
  DetectorModel dm = toy_model(2);
  ShotAnalyzer::Options opt;
  opt.mode = PostSelectMode::PrepRound;
  ShotAnalyzer an(dm, opt);

  MeasFlipTable mt;
  mt.resize(3, 1);
  // 64 shots; fire detector 0 on shots 0..15, observable flips on 0..7 and 32..39.
  mt.row(0)[0] = 0xffffull;
  mt.row(2)[0] = 0xffull | (0xffull << 32);
  an.add_block(mt, 64);

  auto ps = an.post_selection();
  CHECK(ps.total == 64);
  CHECK(ps.retained == 48);
  CHECK(ps.errors_raw == 16);
  CHECK(ps.errors_retained == 8);
  CHECK(ps.retained_fraction() == doctest::Approx(0.75));
  CHECK(ps.eps_raw() == doctest::Approx(0.25));
  CHECK(ps.eps_det() == doctest::Approx(8.0 / 48));
  CHECK(an.def_of(0) == doctest::Approx(0.25));
  CHECK(an.def_of(1) == 0.0);
}

TEST_CASE("empty retained set signals distinctly") {
  DetectorModel dm = toy_model(1);
  ShotAnalyzer an(dm, {});
  MeasFlipTable mt;
  mt.resize(2, 1);
  mt.row(0)[0] = ~0ull;  // every shot fires
  an.add_block(mt, 64);
  CHECK_THROWS_AS(an.post_selection().eps_det(), std::runtime_error);
}

TEST_CASE("independent detectors show vanishing correlation") {
  DetectorModel dm = toy_model(2);
  ShotAnalyzer::Options opt;
  opt.track_correlations = true;
  ShotAnalyzer an(dm, opt);
  std::mt19937_64 rng(3);
  MeasFlipTable mt;
  const int blocks = 400;
  for (int b = 0; b < blocks; ++b) {
    mt.resize(3, 4);
    for (size_t w = 0; w < 4; ++w) {
      // ~6% firing rate each, independently
      mt.row(0)[w] = rng() & rng() & rng() & rng();
      mt.row(1)[w] = rng() & rng() & rng() & rng();
    }
    an.add_block(mt, 256);
  }
  // 3 sigma of the p_ij estimator at n ~ 1e5 independent shots is ~ 1e-3.
  CHECK(std::abs(an.correlation(0, 1)) < 3e-3);
}

TEST_CASE("a planted pairwise error shows up as correlation at its rate") {
  DetectorModel dm = toy_model(2);
  ShotAnalyzer::Options opt;
  opt.track_correlations = true;
  ShotAnalyzer an(dm, opt);
  std::mt19937_64 rng(9);
  auto bernoulli_word = [&](double p) {
    uint64_t w = 0;
    for (int b = 0; b < 64; ++b)
      if (std::uniform_real_distribution<>(0, 1)(rng) < p) w |= 1ull << b;
    return w;
  };
  MeasFlipTable mt;
  const double p_pair = 0.05, p_solo = 0.02;
  for (int b = 0; b < 300; ++b) {
    mt.resize(3, 4);
    for (size_t w = 0; w < 4; ++w) {
      uint64_t shared = bernoulli_word(p_pair);
      mt.row(0)[w] = shared ^ bernoulli_word(p_solo);
      mt.row(1)[w] = shared ^ bernoulli_word(p_solo);
    }
    an.add_block(mt, 256);
  }
  CHECK(an.correlation(0, 1) == doctest::Approx(p_pair).epsilon(0.15));
}

TEST_CASE("tomography on ideal cardinal estimates") {
  BasisEstimate bx{1, 0, 1000}, by{1, 0, 1000}, bz{1, 0, 1000};
  SUBCASE("|0> against theta=0") {
    bx.ideal_sign = 1; bx.flips = 500;  // <X> = 0
    by.ideal_sign = 1; by.flips = 500;
    bz.ideal_sign = 1; bz.flips = 0;    // <Z> = +1
    auto t = tomography(bx, by, bz, 0.0, 0.0);
    CHECK(t.fidelity_lin == doctest::Approx(1.0));
    CHECK(t.ez == doctest::Approx(1.0));
    CHECK(t.rho_ml[0][0][0] == doctest::Approx(1.0));
  }
  SUBCASE("Bloch vector outside the ball is clipped for the ML estimate") {
    bx.flips = 0; by.flips = 400; bz.flips = 100;
    auto t = tomography(bx, by, bz, kPi / 2, 0.0);
    double norm = std::sqrt(t.ex * t.ex + t.ey * t.ey + t.ez * t.ez);
    CHECK(norm > 1.0);
    CHECK(t.fidelity_ml <= t.fidelity_lin + 1e-12);
    double tr = t.rho_ml[0][0][0] + t.rho_ml[1][1][0];
    CHECK(tr == doctest::Approx(1.0));
  }
}

TEST_CASE("insufficient shots signal") {
  BasisEstimate empty{1, 0, 0};
  CHECK_THROWS_AS(empty.expectation(), std::runtime_error);
}

TEST_CASE("merge is associative over blocks") {
  DetectorModel dm = toy_model(2);
  ShotAnalyzer whole(dm, {});
  ShotAnalyzer part1(dm, {}), part2(dm, {});
  std::mt19937_64 rng(11);
  for (int b = 0; b < 10; ++b) {
    MeasFlipTable mt;
    mt.resize(3, 2);
    for (size_t m = 0; m < 3; ++m)
      for (size_t w = 0; w < 2; ++w) mt.row(m)[w] = rng() & rng() & rng();
    whole.add_block(mt, 128);
    (b < 5 ? part1 : part2).add_block(mt, 128);
  }
  part1.merge(part2);
  CHECK(whole.post_selection().retained == part1.post_selection().retained);
  CHECK(whole.post_selection().errors_raw == part1.post_selection().errors_raw);
  CHECK(whole.detector_fires() == part1.detector_fires());
}

TEST_CASE("an injected inter-round data error peaks on the adjacent stabilizer pair") {
  // Plant an X on a fixed data qubit between rounds 1 and 2 at 8%; its two
  // adjacent Z-stabilizers fire together in the round-2 comparison, so that
  // pair dominates the correlation matrix.
  ExperimentConfig cfg;
  cfg.state = "ZERO";
  cfg.basis = Basis::Z;
  cfg.rounds = 3;
  cfg.shots = 1 << 18;
  cfg.seed = 41;
  Pipeline p = Pipeline::build(cfg);
  const uint32_t victim = 1;  // data (0,1): inside Z1 and no other Z-stab? (0,1) in Z1 only
  // pick a qubit with two adjacent Z stabilizers: the center (1,1) sits in Z1 and Z4
  const uint32_t q = p.layout.center();
  (void)victim;

  // Injection site: the first instruction of round 2 acts after round 1's
  // measurements; propagate manually per shot by editing flip tables.
  ShotAnalyzer::Options opt;
  opt.track_correlations = true;
  ShotAnalyzer an(p.dm, opt);
  FaultEffect eff{};
  {
    size_t site = 0;
    int meas_seen = 0;
    for (size_t i = 0; i < p.circuit.instructions.size(); ++i) {
      if (p.circuit.instructions[i].op == Op::Measure) ++meas_seen;
      if (meas_seen == 8) { site = i; break; }
    }
    PauliString fault;
    fault.set(q, Pauli::X);
    eff = propagate_fault(p.circuit, site, fault, false);
  }
  FrameSampler sampler(p.noisy, 16);
  MeasFlipTable mt;
  Prng inj(99, 0);
  const uint64_t blocks = cfg.shots / sampler.shots_per_block();
  for (uint64_t b = 0; b < blocks; ++b) {
    sampler.sample_block(cfg.seed, b, mt);
    for (size_t w = 0; w < mt.words; ++w) {
      uint64_t hit = inj.next() & inj.next() & inj.next() & ~inj.next();  // ~5.9%
      for (size_t m = 0; m < mt.num_meas; ++m)
        if (eff.meas_flips[m]) mt.row(m)[w] ^= hit;
    }
    an.add_block(mt, sampler.shots_per_block());
  }
  // Expected pair: the two detectors flipped by the injected fault.
  std::vector<int> dets;
  uint32_t obs = 0;
  fault_signature(p.dm, eff, dets, obs);
  REQUIRE(dets.size() == 2);
  double planted = an.correlation(static_cast<size_t>(dets[0]), static_cast<size_t>(dets[1]));
  CHECK(planted == doctest::Approx(1.0 / 16).epsilon(0.15));  // injection rate
  // It dominates every other off-diagonal pair.
  for (size_t i = 0; i < p.dm.detectors.size(); ++i)
    for (size_t j = i + 1; j < p.dm.detectors.size(); ++j) {
      if (int(i) == dets[0] && int(j) == dets[1]) continue;
      CHECK(an.correlation(i, j) < planted);
    }
}

TEST_CASE("weight-4 stabilizers show higher detection fractions than weight-2") {
  ExperimentConfig cfg;
  cfg.state = "ZERO";
  cfg.basis = Basis::Z;
  cfg.rounds = 4;
  cfg.noise = NoiseParams::uniform_rate(0.002);
  cfg.shots = 1 << 17;
  Pipeline p = Pipeline::build(cfg);
  ShotAnalyzer an(p.dm, {});
  run_sampling(p, cfg, {&an});
  // Compare the round-2 time detectors of Z stabilizers by weight.
  double w4 = 0, w2 = 0;
  int n4 = 0, n2 = 0;
  for (size_t d = 0; d < p.dm.detectors.size(); ++d) {
    const auto& det = p.dm.detectors[d];
    if (det.kind != DetKind::Time || det.round != 2) continue;
    const auto& stab = p.layout.stabilizers[static_cast<size_t>(det.stab)];
    if (stab.kind != StabKind::Z) continue;
    if (stab.support.size() == 4) { w4 += an.def_of(d); ++n4; }
    else { w2 += an.def_of(d); ++n2; }
  }
  REQUIRE(n4 > 0);
  REQUIRE(n2 > 0);
  CHECK(w4 / n4 > w2 / n2);
}

TEST_CASE("tomography fidelity is consistent with the post-selected error rate") {
  // |+i>_L at p=0.001: F from three independently seeded basis runs equals
  // 1 - eps_det of the Y run within statistics.
  BasisEstimate est[3];
  double eps_det_y = 0, se_y = 0;
  for (Basis basis : {Basis::X, Basis::Y, Basis::Z}) {
    ExperimentConfig cfg;
    cfg.state = "PLUS_I";
    cfg.basis = basis;
    cfg.noise = NoiseParams::uniform_rate(0.001);
    cfg.shots = 1 << 18;
    cfg.seed = 50 + static_cast<int>(basis);
    Pipeline p = Pipeline::build(cfg);
    ShotAnalyzer an(p.dm, {});
    run_sampling(p, cfg, {&an});
    auto ps = an.post_selection();
    est[static_cast<int>(basis)] = {p.reference_observable_sign(), ps.errors_retained, ps.retained};
    if (basis == Basis::Y) {
      eps_det_y = ps.eps_det();
      se_y = ps.se_det();
    }
  }
  auto tomo = tomography(est[0], est[1], est[2], kPi / 2, kPi / 2);
  double sigma = std::sqrt(se_y * se_y + 0.25 * est[1].se() * est[1].se());
  CHECK(std::abs(tomo.fidelity_lin - (1 - eps_det_y)) < 3 * sigma + 1e-12);
}

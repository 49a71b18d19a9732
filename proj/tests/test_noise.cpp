#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "qprep/frame.hpp"
#include "qprep/detectors.hpp"
#include "qprep/noise.hpp"

using namespace qprep;

TEST_CASE("channel placement: one channel per noise site, none on Z rotations") {
  auto L = build_layout(3);
  Circuit c = build_prep_circuit(L, kPi / 2, kPi / 2, GateSet::Cnot, MagicPrepKind::Equatorial);
  append_logical_measurement(c, L, Basis::Y, true);
  c.finalize(L);
  NoisyCircuit nc = apply_noise(c, NoiseParams::uniform_rate(0.001));

  size_t noisy_sites = 0;
  for (const auto& ins : c.instructions) noisy_sites += ins.noise_site();
  CHECK(nc.channels.size() == noisy_sites);
  for (const auto& ch : nc.channels) {
    CHECK(c.instructions[ch.instr_index].op != Op::ZRot);
    CHECK(c.instructions[ch.instr_index].op != Op::Tick);
    CHECK(ch.p == 0.001);
  }

  // Exact site census for the d=3 CNOT preparation circuit:
  // 17 resets + 8 |+> preps + 1 magic gate + 24 CNOTs + 8 + 9 measurements.
  int by_kind[4] = {0, 0, 0, 0};
  for (const auto& ch : nc.channels) by_kind[static_cast<int>(ch.kind)]++;
  CHECK(by_kind[static_cast<int>(ChannelKind::Depolarize1)] == 1);
  CHECK(by_kind[static_cast<int>(ChannelKind::Depolarize2)] == 24);
  CHECK(by_kind[static_cast<int>(ChannelKind::InitFlip)] == 25);
  CHECK(by_kind[static_cast<int>(ChannelKind::MeasFlip)] == 17);
}

TEST_CASE("uniform overrides individual rates") {
  NoiseParams n;
  n.p1 = 0.5;
  n.uniform = 0.001;
  NoiseParams r = n.resolved();
  CHECK(r.p1 == 0.001);
  CHECK(r.p2 == 0.001);
  CHECK(r.p_init == 0.001);
  CHECK(r.p_meas == 0.001);
}

TEST_CASE("out-of-range probabilities are rejected") {
  NoiseParams n;
  n.p2 = 1.5;
  CHECK_THROWS_AS(n.resolved(), std::invalid_argument);
  NoiseParams m;
  m.uniform = -0.1;
  CHECK_THROWS_AS(m.resolved(), std::invalid_argument);
}

TEST_CASE("term decomposition: 3 terms for 1q, 15 for 2q, single flips otherwise") {
  auto L = build_layout(3);
  Circuit c = build_prep_circuit(L, kPi / 2, kPi / 2, GateSet::Cz, MagicPrepKind::Equatorial);
  c.finalize(L);
  NoisyCircuit nc = apply_noise(c, NoiseParams::uniform_rate(0.15));
  for (size_t ci = 0; ci < nc.channels.size(); ++ci) {
    auto terms = channel_terms(nc, ci);
    double total = 0;
    for (const auto& t : terms) total += t.prob;
    switch (nc.channels[ci].kind) {
      case ChannelKind::Depolarize1: CHECK(terms.size() == 3); break;
      case ChannelKind::Depolarize2: CHECK(terms.size() == 15); break;
      default: CHECK(terms.size() == 1);
    }
    CHECK(total == doctest::Approx(0.15));
  }
}

TEST_CASE("Monte Carlo channel frequencies match nominal rates within 5 sigma") {
  // Isolate p1: the only 1q site is the magic sqrt(X); a third of its faults
  // (the Y term) leave the equatorial state invariant, so the logical-Y
  // parity flips at exactly 2p/3.
  auto L = build_layout(3);
  Circuit c = build_prep_circuit(L, kPi / 2, kPi / 2, GateSet::Cnot, MagicPrepKind::Equatorial);
  append_logical_measurement(c, L, Basis::Y, true);
  c.finalize(L);
  const double p = 0.01;
  NoiseParams only1;
  only1.p1 = p;
  NoisyCircuit nc1 = apply_noise(c, only1);
  DetectorModel dm = build_detector_model(c, L);
  const auto& obs = dm.observables.at(0).meas;

  FrameSampler sampler(nc1, 16);
  MeasFlipTable mt;
  uint64_t flips = 0, shots = 0;
  std::vector<uint64_t> parity;
  for (uint64_t b = 0; b < 1200; ++b) {  // ~1.2M site draws
    sampler.sample_block(7, b, mt);
    parity.assign(mt.words, 0);
    for (int m : obs)
      for (size_t w = 0; w < mt.words; ++w) parity[w] ^= mt.row(static_cast<size_t>(m))[w];
    for (uint64_t w : parity) flips += std::popcount(w);
    shots += sampler.shots_per_block();
  }
  double expect = p * 2.0 / 3.0;
  double sigma = std::sqrt(expect * (1 - expect) / double(shots));
  double observed = double(flips) / double(shots);
  CHECK(std::abs(observed - expect) < 5 * sigma);
}

TEST_CASE("zero noise sampling never flips a detector or the observable") {
  // Individual measurement bits are gauge-random, but every detector parity
  // and the logical observable are deterministic and must sit at the
  // reference value in all shots.
  for (Basis basis : {Basis::Z, Basis::Y}) {
    auto L = build_layout(3);
    double theta = basis == Basis::Z ? 0.0 : kPi / 2;
    double phi = basis == Basis::Z ? 0.0 : kPi / 2;
    Circuit c = build_prep_circuit(L, theta, phi, GateSet::Cnot, magic_prep_kind_for(theta));
    append_syndrome_rounds(c, L, 1);
    append_logical_measurement(c, L, basis, true);
    c.finalize(L);
    NoisyCircuit nc = apply_noise(c, NoiseParams{});
    DetectorModel dm = build_detector_model(c, L);
    FrameSampler sampler(nc, 4);
    MeasFlipTable mt;
    sampler.sample_block(99, 0, mt);
    std::vector<uint64_t> parity(mt.words, 0);
    for (const auto& det : dm.detectors) {
      parity.assign(mt.words, 0);
      for (int m : det.meas)
        for (size_t w = 0; w < mt.words; ++w) parity[w] ^= mt.row(static_cast<size_t>(m))[w];
      for (uint64_t w : parity) CHECK(w == 0);
    }
    parity.assign(mt.words, 0);
    for (int m : dm.observables.at(0).meas)
      for (size_t w = 0; w < mt.words; ++w) parity[w] ^= mt.row(static_cast<size_t>(m))[w];
    for (uint64_t w : parity) CHECK(w == 0);
  }
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>

#include "qprep/detectors.hpp"

using namespace qprep;

namespace {

Circuit build_full(const SurfaceCodeLayout& L, int extra_rounds, Basis basis, bool extra_qubits,
                   bool with_final = true) {
  Circuit c = build_prep_circuit(L, kPi / 2, kPi / 2, GateSet::Cnot, MagicPrepKind::Equatorial);
  append_syndrome_rounds(c, L, extra_rounds);
  if (with_final) append_logical_measurement(c, L, basis, extra_qubits);
  c.finalize(L);
  return c;
}

}  // namespace

TEST_CASE("prep-only circuit has exactly the deterministic detectors") {
  auto L = build_layout(3);
  Circuit c = build_full(L, 0, Basis::Y, true, /*with_final=*/false);
  DetectorModel dm = build_detector_model(c, L);
  CHECK(dm.detectors.size() == 4);
  for (const auto& det : dm.detectors) {
    CHECK(det.kind == DetKind::Round0);
    CHECK(L.stabilizers[static_cast<size_t>(det.stab)].deterministic);
    CHECK(det.meas.size() == 1);
  }
}

TEST_CASE("detector census: prep + 2 rounds + Z readout at distance 3") {
  auto L = build_layout(3);
  Circuit c = build_full(L, 2, Basis::Z, true);
  DetectorModel dm = build_detector_model(c, L);
  int round0 = 0, time = 0, final = 0;
  for (const auto& det : dm.detectors) {
    if (det.kind == DetKind::Round0) ++round0;
    if (det.kind == DetKind::Time) ++time;
    if (det.kind == DetKind::FinalRecon) ++final;
  }
  CHECK(round0 == 4);
  CHECK(time == 8 + 8);
  CHECK(final == 4);  // all Z stabilizers reconstruct from the Z readout
  for (const auto& det : dm.detectors)
    if (det.kind == DetKind::FinalRecon)
      CHECK(L.stabilizers[static_cast<size_t>(det.stab)].kind == StabKind::Z);
}

TEST_CASE("Y readout reconstructs only the deterministic stabilizers, and none without extras") {
  auto L = build_layout(3);
  {
    Circuit c = build_full(L, 1, Basis::Y, true);
    DetectorModel dm = build_detector_model(c, L);
    std::set<int> final_stabs;
    for (const auto& det : dm.detectors)
      if (det.kind == DetKind::FinalRecon) final_stabs.insert(det.stab);
    std::set<int> want(L.deterministic_stabs.begin(), L.deterministic_stabs.end());
    CHECK(final_stabs == want);
  }
  {
    Circuit c = build_full(L, 1, Basis::Y, false);
    DetectorModel dm = build_detector_model(c, L);
    for (const auto& det : dm.detectors) CHECK(det.kind != DetKind::FinalRecon);
    CHECK(dm.observables.at(0).meas.size() == 5);  // center + two arms
  }
}

TEST_CASE("post-selection scopes nest") {
  auto L = build_layout(3);
  Circuit c = build_full(L, 3, Basis::Y, true);
  DetectorModel dm = build_detector_model(c, L);
  auto prep = post_selection_scope(dm, PostSelectMode::PrepRound);
  auto two = post_selection_scope(dm, PostSelectMode::TwoRounds);
  std::set<int> prep_set(prep.begin(), prep.end());
  for (int d : prep) CHECK(std::find(two.begin(), two.end(), d) != two.end());
  CHECK(two.size() == prep.size() + L.stabilizers.size());  // + round-1/2 comparisons
  // Post-selection conditions on syndrome measurements only; the readout
  // reconstruction never enters the scope.
  Circuit c1 = build_full(L, 0, Basis::Y, true);
  DetectorModel dm1 = build_detector_model(c1, L);
  auto scope1 = post_selection_scope(dm1, PostSelectMode::PrepRound);
  CHECK(scope1.size() == 4);
  for (int d : scope1) CHECK(dm1.detectors[static_cast<size_t>(d)].kind == DetKind::Round0);
}

TEST_CASE("every attached fault reproduces its recorded signature") {
  auto L = build_layout(3);
  Circuit c = build_full(L, 1, Basis::Y, true);
  NoisyCircuit nc = apply_noise(c, NoiseParams::uniform_rate(0.001));
  DetectorModel dm = build_detector_model(c, L);
  attach_faults(dm, nc);
  CHECK(!dm.faults.empty());

  std::set<std::pair<std::vector<int>, uint32_t>> signatures;
  for (const auto& f : dm.faults) signatures.insert({f.dets, f.obs});
  CHECK(signatures.size() == dm.faults.size());  // merging deduplicated

  size_t checked = 0;
  for (size_t ci = 0; ci < nc.channels.size(); ++ci) {
    const Channel& ch = nc.channels[ci];
    bool before = ch.kind == ChannelKind::MeasFlip;
    for (const auto& term : channel_terms(nc, ci)) {
      FaultEffect eff = propagate_fault(c, ch.instr_index, term.pauli, before);
      std::vector<int> dets;
      uint32_t obs = 0;
      fault_signature(dm, eff, dets, obs);
      if (dets.empty() && obs == 0) continue;
      CHECK(signatures.count({dets, obs}) == 1);
      ++checked;
    }
  }
  CHECK(checked > 100);
}

TEST_CASE("sampled fault signatures at distance 5") {
  auto L = build_layout(5);
  Circuit c = build_full(L, 1, Basis::Y, true);
  NoisyCircuit nc = apply_noise(c, NoiseParams::uniform_rate(0.001));
  DetectorModel dm = build_detector_model(c, L);
  attach_faults(dm, nc);
  std::set<std::pair<std::vector<int>, uint32_t>> signatures;
  for (const auto& f : dm.faults) signatures.insert({f.dets, f.obs});
  size_t stride = 0;
  for (size_t ci = 0; ci < nc.channels.size(); ci += 7) {
    const Channel& ch = nc.channels[ci];
    bool before = ch.kind == ChannelKind::MeasFlip;
    for (const auto& term : channel_terms(nc, ci)) {
      FaultEffect eff = propagate_fault(c, ch.instr_index, term.pauli, before);
      std::vector<int> dets;
      uint32_t obs = 0;
      fault_signature(dm, eff, dets, obs);
      if (dets.empty() && obs == 0) continue;
      CHECK(signatures.count({dets, obs}) == 1);
      ++stride;
    }
  }
  CHECK(stride > 50);
}

TEST_CASE("mismatched layout is rejected") {
  auto L3 = build_layout(3);
  auto L5 = build_layout(5);
  Circuit c = build_full(L3, 0, Basis::Y, true);
  CHECK_THROWS_AS(build_detector_model(c, L5), std::invalid_argument);
}

TEST_CASE("detector model export lists detectors, observables and faults") {
  auto L = build_layout(3);
  Circuit c = build_full(L, 0, Basis::Y, true);
  NoisyCircuit nc = apply_noise(c, NoiseParams::uniform_rate(0.001));
  DetectorModel dm = build_detector_model(c, L);
  attach_faults(dm, nc);
  std::string text = export_detector_model(dm, L);
  CHECK(text.find("detector D0 round0") != std::string::npos);
  CHECK(text.find("observable LY") != std::string::npos);
  CHECK(text.find("fault p=") != std::string::npos);
}

TEST_CASE("sampled detection rates match the first-order model prediction") {
  // XOR of independent fault mechanisms: rate = (1 - prod(1 - 2 p_f)) / 2.
  auto L = build_layout(3);
  Circuit c = build_full(L, 0, Basis::Y, true);
  NoisyCircuit nc = apply_noise(c, NoiseParams::uniform_rate(0.001));
  DetectorModel dm = build_detector_model(c, L);
  attach_faults(dm, nc);

  std::vector<double> prod(dm.detectors.size(), 1.0);
  for (const auto& f : dm.faults)
    for (int d : f.dets) prod[static_cast<size_t>(d)] *= 1 - 2 * f.p;

  FrameSampler sampler(nc, 16);
  MeasFlipTable mt;
  const uint64_t blocks = 1000;  // ~1e6 shots
  std::vector<uint64_t> fires(dm.detectors.size(), 0);
  uint64_t shots = 0;
  std::vector<uint64_t> parity;
  for (uint64_t b = 0; b < blocks; ++b) {
    sampler.sample_block(77, b, mt);
    shots += sampler.shots_per_block();
    for (size_t d = 0; d < dm.detectors.size(); ++d) {
      parity.assign(mt.words, 0);
      for (int m : dm.detectors[d].meas)
        for (size_t w = 0; w < mt.words; ++w) parity[w] ^= mt.row(static_cast<size_t>(m))[w];
      for (uint64_t w : parity) fires[d] += std::popcount(w);
    }
  }
  for (size_t d = 0; d < dm.detectors.size(); ++d) {
    double predicted = 0.5 * (1 - prod[d]);
    double observed = double(fires[d]) / double(shots);
    double sigma = std::sqrt(predicted * (1 - predicted) / double(shots));
    CAPTURE(d);
    CHECK(std::abs(observed - predicted) < 3.5 * sigma + 1e-6);
  }
}

TEST_CASE("no single bulk-extraction fault is silent and logical") {
  // Distance preservation of the zigzag schedule: with full detector
  // coverage, every single fault in rounds >= 2 of a memory-style circuit
  // either fires a detector or leaves the observable alone.
  auto L = build_layout(3);
  Circuit c = build_prep_circuit(L, 0.0, 0.0, GateSet::Cnot, MagicPrepKind::General);
  append_syndrome_rounds(c, L, 2);
  append_logical_measurement(c, L, Basis::Z, true);
  c.finalize(L);
  NoisyCircuit nc = apply_noise(c, NoiseParams::uniform_rate(0.001));
  DetectorModel dm = build_detector_model(c, L);

  // First instruction of round 2 = the ancilla re-preparation after the
  // first round's measurements.
  size_t round2_start = 0;
  int meas_seen = 0;
  for (size_t i = 0; i < c.instructions.size(); ++i) {
    if (c.instructions[i].op == Op::Measure) ++meas_seen;
    if (meas_seen == 8) { round2_start = i + 1; break; }
  }
  for (size_t ci = 0; ci < nc.channels.size(); ++ci) {
    const Channel& ch = nc.channels[ci];
    if (ch.instr_index < round2_start) continue;
    bool before = ch.kind == ChannelKind::MeasFlip;
    for (const auto& term : channel_terms(nc, ci)) {
      FaultEffect eff = propagate_fault(c, ch.instr_index, term.pauli, before);
      std::vector<int> dets;
      uint32_t obs = 0;
      fault_signature(dm, eff, dets, obs);
      if (obs) CHECK(!dets.empty());
    }
  }
}

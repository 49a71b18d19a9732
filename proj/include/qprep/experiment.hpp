#pragma once

#include <fstream>
#include <functional>
#include <optional>
#include <thread>

#include "json.hpp"
#include "qprep/analysis.hpp"
#include "qprep/faultenum.hpp"
#include "qprep/frame.hpp"
#include "qprep/matching.hpp"
#include "qprep/tableau.hpp"

namespace qprep {

struct NamedState {
  const char* name;
  double theta, phi;
};

inline const std::vector<NamedState>& named_states() {
  static const std::vector<NamedState> states = {
      {"ZERO", 0.0, 0.0},
      {"ONE", kPi, 0.0},
      {"PLUS", kPi / 2, 0.0},
      {"MINUS", kPi / 2, kPi},
      {"PLUS_I", kPi / 2, kPi / 2},
      {"MINUS_I", kPi / 2, 3 * kPi / 2},
      {"A_PI4", kPi / 2, kPi / 4},
      {"H", kPi / 4, 0.0},
      {"T", std::acos(1.0 / std::sqrt(3.0)), kPi / 4},
  };
  return states;
}

inline std::pair<double, double> named_state_angles(const std::string& name) {
  for (const auto& s : named_states())
    if (name == s.name) return {s.theta, s.phi};
  throw std::invalid_argument("unknown state name: " + name);
}

// True when the target is one of the six cardinal states, i.e. the whole
// circuit stays inside the stabilizer formalism and can be sampled.
inline bool stabilizer_state(double theta, double phi) {
  auto cardinal = [](double a) {
    double q = a / (kPi / 2);
    return std::abs(q - std::lround(q)) < 1e-9;
  };
  if (!cardinal(theta)) return false;
  int k = static_cast<int>(std::lround(theta / (kPi / 2))) & 3;
  if (k == 0 || k == 2) return true;  // poles: phi irrelevant
  return cardinal(phi);
}

struct ExperimentConfig {
  int distance = 3;
  GateSet gate_set = GateSet::Cnot;
  std::string state = "PLUS_I";  // named state; empty = explicit angles
  double theta = kPi / 2;
  double phi = kPi / 2;
  NoiseParams noise;
  int rounds = 1;  // syndrome rounds including the preparation round
  Basis basis = Basis::Y;
  bool extra_qubits = true;
  PostSelectMode ps_mode = PostSelectMode::PrepRound;
  uint64_t shots = 100000;
  uint64_t seed = 1;
  bool decode = false;
  bool correlations = false;
  bool ideal_readout = false;  // drop measurement-flip noise on the final data readout
  int workers = 1;

  void resolve_state() {
    if (!state.empty()) {
      auto [t, p] = named_state_angles(state);
      theta = t;
      phi = p;
    }
  }

  void validate() const {
    if (distance < 3 || distance % 2 == 0)
      throw std::invalid_argument("distance: must be an odd integer >= 3");
    if (rounds < 1) throw std::invalid_argument("rounds: must be >= 1");
    if (shots < 1) throw std::invalid_argument("shots: must be >= 1");
    if (workers < 1) throw std::invalid_argument("workers: must be >= 1");
    noise.resolved();  // range check
  }
};

inline void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  j = nlohmann::json{
      {"distance", c.distance},
      {"gate_set", gate_set_name(c.gate_set)},
      {"state", c.state},
      {"theta", c.theta},
      {"phi", c.phi},
      {"p1", c.noise.p1},
      {"p2", c.noise.p2},
      {"p_init", c.noise.p_init},
      {"p_meas", c.noise.p_meas},
      {"rounds", c.rounds},
      {"basis", basis_name(c.basis)},
      {"extra_qubits", c.extra_qubits},
      {"post_selection", c.ps_mode == PostSelectMode::PrepRound ? "PREP_ROUND" : "TWO_ROUNDS"},
      {"shots", c.shots},
      {"seed", c.seed},
      {"decode", c.decode},
      {"correlations", c.correlations},
      {"ideal_readout", c.ideal_readout},
      {"workers", c.workers},
  };
  if (c.noise.uniform) j["p_uniform"] = *c.noise.uniform;
}

inline void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  c.distance = j.value("distance", 3);
  std::string gs = j.value("gate_set", "CNOT");
  if (gs != "CNOT" && gs != "CZ") throw std::invalid_argument("gate_set: must be CNOT or CZ");
  c.gate_set = gs == "CZ" ? GateSet::Cz : GateSet::Cnot;
  c.state = j.value("state", std::string{});
  c.theta = j.value("theta", 0.0);
  c.phi = j.value("phi", 0.0);
  c.noise.p1 = j.value("p1", 0.0);
  c.noise.p2 = j.value("p2", 0.0);
  c.noise.p_init = j.value("p_init", 0.0);
  c.noise.p_meas = j.value("p_meas", 0.0);
  if (j.contains("p_uniform")) c.noise.uniform = j["p_uniform"].get<double>();
  c.rounds = j.value("rounds", 1);
  std::string b = j.value("basis", "Y");
  if (b != "X" && b != "Y" && b != "Z") throw std::invalid_argument("basis: must be X, Y or Z");
  c.basis = b == "X" ? Basis::X : (b == "Y" ? Basis::Y : Basis::Z);
  c.extra_qubits = j.value("extra_qubits", true);
  std::string ps = j.value("post_selection", "PREP_ROUND");
  if (ps != "PREP_ROUND" && ps != "TWO_ROUNDS")
    throw std::invalid_argument("post_selection: must be PREP_ROUND or TWO_ROUNDS");
  c.ps_mode = ps == "TWO_ROUNDS" ? PostSelectMode::TwoRounds : PostSelectMode::PrepRound;
  c.shots = j.value("shots", uint64_t{100000});
  c.seed = j.value("seed", uint64_t{1});
  c.decode = j.value("decode", false);
  c.correlations = j.value("correlations", false);
  c.ideal_readout = j.value("ideal_readout", false);
  c.workers = j.value("workers", 1);
  c.resolve_state();
}

// Everything needed to sample and analyze one experiment.
struct Pipeline {
  SurfaceCodeLayout layout;
  Circuit circuit;
  NoisyCircuit noisy;
  Reference ref;
  DetectorModel dm;
  std::optional<MatchingGraph> graph;

  static Pipeline build(ExperimentConfig cfg) {
    cfg.resolve_state();
    cfg.validate();
    Pipeline p;
    p.layout = build_layout(cfg.distance);
    p.circuit = build_prep_circuit(p.layout, cfg.theta, cfg.phi, cfg.gate_set,
                                   magic_prep_kind_for(cfg.theta));
    append_syndrome_rounds(p.circuit, p.layout, cfg.rounds - 1);
    append_logical_measurement(p.circuit, p.layout, cfg.basis, cfg.extra_qubits);
    p.circuit.finalize(p.layout);
    p.noisy = apply_noise(p.circuit, cfg.noise);
    if (cfg.ideal_readout) {
      for (auto& ch : p.noisy.channels) {
        const auto& ins = p.circuit.instructions[ch.instr_index];
        if (ch.kind == ChannelKind::MeasFlip && p.layout.is_data(ins.q0)) ch.p = 0.0;
      }
    }
    if (!stabilizer_state(cfg.theta, cfg.phi))
      throw std::invalid_argument(
          "sampling requires a cardinal (stabilizer) magic state; "
          "use the coefficient prediction for generic magic states");
    p.ref = reference_run(p.circuit);
    p.dm = build_detector_model(p.circuit, p.layout);
    attach_faults(p.dm, p.noisy);
    if (cfg.decode) p.graph.emplace(p.dm);
    return p;
  }

  // The measured logical observable as an operator (for expectation checks).
  PauliString observable_operator() const {
    PauliString obs;
    const auto& L = layout;
    switch (circuit.meta.final_basis) {
      case Basis::X:
        for (uint32_t q : L.logical_x) obs.set(q, Pauli::X);
        break;
      case Basis::Z:
        for (uint32_t q : L.logical_z) obs.set(q, Pauli::Z);
        break;
      case Basis::Y:
        obs.set(L.center(), Pauli::Y);
        for (uint32_t q : L.logical_x)
          if (q != L.center()) obs.set(q, Pauli::X);
        for (uint32_t q : L.logical_z)
          if (q != L.center()) obs.set(q, Pauli::Z);
        break;
    }
    return obs;
  }

  // Noiseless expectation of the measured observable right before readout:
  // +1/-1 when deterministic, 0 when random.
  int ideal_observable_expectation() const {
    Tableau t(circuit.num_qubits);
    for (const auto& ins : circuit.instructions) {
      if (ins.op == Op::Measure && layout.is_data(ins.q0)) break;
      apply_instruction(t, ins, false);
    }
    return t.expectation(observable_operator());
  }

  // Sign of the observable in the reference sample; equals the ideal
  // expectation when the observable is deterministic and fixes the sign
  // convention of flip-based estimators otherwise.
  int reference_observable_sign() const {
    int parity = 0;
    for (int m : dm.observables.at(0).meas) parity ^= ref.bits[static_cast<size_t>(m)];
    return parity ? -1 : 1;
  }
};

// Runs the sampler over all shot blocks, feeding each worker's analyzer and
// merging in block order. The per-block RNG stream makes the result
// independent of the worker count.
inline void run_sampling(const Pipeline& p, const ExperimentConfig& cfg,
                         std::vector<ShotAnalyzer*> analyzers,
                         const std::function<void(const MeasFlipTable&, size_t)>& block_hook = {}) {
  const size_t words = 16;  // 1024 shots per block
  FrameSampler sampler(p.noisy, words);
  const size_t per_block = sampler.shots_per_block();
  const uint64_t blocks = (cfg.shots + per_block - 1) / per_block;

  if (cfg.workers <= 1 || block_hook) {
    MeasFlipTable table;
    FrameSampler local(p.noisy, words);
    for (uint64_t b = 0; b < blocks; ++b) {
      local.sample_block(cfg.seed, b, table);
      size_t valid = static_cast<size_t>(std::min<uint64_t>(per_block, cfg.shots - b * per_block));
      for (auto* a : analyzers) a->add_block(table, valid);
      if (block_hook) block_hook(table, valid);
    }
    return;
  }

  // Contiguous block ranges per worker; analyzers merge associatively.
  int workers = cfg.workers;
  std::vector<std::vector<ShotAnalyzer>> partials(static_cast<size_t>(workers));
  std::vector<std::thread> threads;
  uint64_t chunk = (blocks + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    for (auto* a : analyzers) partials[static_cast<size_t>(w)].push_back(a->clone_empty());
    threads.emplace_back([&, w]() {
      MeasFlipTable table;
      FrameSampler local(p.noisy, words);
      uint64_t lo = static_cast<uint64_t>(w) * chunk;
      uint64_t hi = std::min(blocks, lo + chunk);
      for (uint64_t b = lo; b < hi; ++b) {
        local.sample_block(cfg.seed, b, table);
        size_t valid = static_cast<size_t>(std::min<uint64_t>(per_block, cfg.shots - b * per_block));
        for (size_t i = 0; i < analyzers.size(); ++i)
          partials[static_cast<size_t>(w)][i].add_block(table, valid);
      }
    });
  }
  for (auto& t : threads) t.join();
  for (int w = 0; w < workers; ++w)
    for (size_t i = 0; i < analyzers.size(); ++i)
      analyzers[i]->merge(partials[static_cast<size_t>(w)][i]);
}

// ---- Record files -----------------------------------------------------------
// Header line: JSON object with the full configuration; then one shot per
// line as a 0/1 string in measurement-ordinal order.

inline void write_record_header(std::ostream& out, const ExperimentConfig& cfg,
                                const Pipeline& p) {
  nlohmann::json j = cfg;
  j["num_measurements"] = p.circuit.num_measurements();
  out << j.dump() << "\n";
}

inline void append_record_block(std::ostream& out, const Pipeline& p, const MeasFlipTable& mt,
                                size_t valid) {
  const size_t nm = p.circuit.num_measurements();
  std::string line(nm, '0');
  for (size_t s = 0; s < valid; ++s) {
    size_t w = s / 64;
    uint64_t m = 1ull << (s % 64);
    for (size_t i = 0; i < nm; ++i) {
      bool bit = (mt.row(i)[w] & m) != 0;
      line[i] = (bit ^ p.ref.bits[i]) ? '1' : '0';
    }
    out << line << "\n";
  }
}

struct RecordFile {
  ExperimentConfig config;
  std::vector<MeasFlipTable> blocks;  // flips relative to the rebuilt reference
  std::vector<size_t> valid;          // live shots per block
  uint64_t shots = 0;
};

inline RecordFile read_record_file(const std::string& path, const Pipeline*& pipeline_out,
                                   std::optional<Pipeline>& storage) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open record file: " + path);
  std::string header;
  if (!std::getline(in, header)) throw std::runtime_error("empty record file");
  RecordFile rf;
  nlohmann::json j = nlohmann::json::parse(header);
  rf.config = j.get<ExperimentConfig>();
  storage.emplace(Pipeline::build(rf.config));
  pipeline_out = &*storage;
  const Pipeline& p = *pipeline_out;
  size_t nm = p.circuit.num_measurements();
  if (j.contains("num_measurements") && j["num_measurements"].get<size_t>() != nm)
    throw std::runtime_error("record file does not match rebuilt circuit");

  const size_t words = 16;
  const size_t per_block = words * 64;
  std::string line;
  MeasFlipTable current;
  current.resize(nm, words);
  size_t in_block = 0;
  while (std::getline(in, line)) {
    if (line.size() < nm) {
      if (line.empty()) continue;
      throw std::runtime_error("short record line");
    }
    size_t s = in_block;
    for (size_t i = 0; i < nm; ++i) {
      bool bit = line[i] == '1';
      if (bit ^ p.ref.bits[i]) current.row(i)[s / 64] |= 1ull << (s % 64);
    }
    ++in_block;
    ++rf.shots;
    if (in_block == per_block) {
      rf.blocks.push_back(std::move(current));
      rf.valid.push_back(in_block);
      current = MeasFlipTable{};
      current.resize(nm, words);
      in_block = 0;
    }
  }
  if (in_block) {
    rf.blocks.push_back(std::move(current));
    rf.valid.push_back(in_block);
  }
  return rf;
}

}  // namespace qprep

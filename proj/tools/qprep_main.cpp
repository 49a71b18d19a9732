// qprep: simulation and analysis driver for arbitrary logical state
// preparation on the rotated surface code.
//
// Subcommands: run, sweep, enumerate, analyze, fit.
// Exit codes: 0 success, 1 validation error, 2 golden-value mismatch.

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "qprep/experiment.hpp"

using namespace qprep;
using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string state;
  double theta = -1, phi = -1;
  double p1 = -1, p2 = -1, p_init = -1, p_meas = -1, p_uniform = -1;
  int distance = 0;
  std::string gate_set, basis, post_selection;
  int rounds = 0;
  int extra_qubits = -1;
  int64_t shots = -1;
  int64_t seed = -1;
  int workers = 0;
  bool decode = false;
  bool correlations = false;
  bool ideal_readout = false;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path, "JSON config file; flags override its keys");
  cmd->add_option("--distance", o.distance, "code distance (odd, >= 3)");
  cmd->add_option("--gate-set", o.gate_set, "CNOT or CZ");
  cmd->add_option("--state", o.state, "named state: ZERO ONE PLUS MINUS PLUS_I MINUS_I A_PI4 H T");
  cmd->add_option("--theta", o.theta, "polar angle (radians)");
  cmd->add_option("--phi", o.phi, "azimuthal angle (radians)");
  cmd->add_option("--p1", o.p1, "single-qubit depolarizing rate");
  cmd->add_option("--p2", o.p2, "two-qubit depolarizing rate");
  cmd->add_option("--p-init", o.p_init, "reset flip rate");
  cmd->add_option("--p-meas", o.p_meas, "measurement flip rate");
  cmd->add_option("--p-uniform", o.p_uniform, "uniform rate overriding the four above");
  cmd->add_option("--rounds", o.rounds, "syndrome rounds including the preparation round");
  cmd->add_option("--basis", o.basis, "logical readout basis: X, Y or Z");
  cmd->add_option("--extra-qubits", o.extra_qubits,
                  "include non-arm data qubits in Y-readout reconstruction (0/1)");
  cmd->add_option("--post-selection", o.post_selection, "PREP_ROUND or TWO_ROUNDS");
  cmd->add_option("--shots", o.shots, "number of Monte Carlo shots");
  cmd->add_option("--seed", o.seed, "sampler seed");
  cmd->add_option("--workers", o.workers, "worker thread count");
  cmd->add_flag("--decode", o.decode, "run the matching decoder on every shot");
  cmd->add_flag("--correlations", o.correlations, "accumulate the detector correlation matrix");
  cmd->add_flag("--ideal-readout", o.ideal_readout,
                "treat the final data readout as noiseless (preparation-error metric)");
}

ExperimentConfig merge_config(const CommonOpts& o) {
  ExperimentConfig cfg;
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    if (!in) throw std::invalid_argument("config: cannot open " + o.config_path);
    json j = json::parse(in);
    cfg = j.get<ExperimentConfig>();
  }
  if (o.distance) cfg.distance = o.distance;
  if (!o.gate_set.empty()) {
    if (o.gate_set != "CNOT" && o.gate_set != "CZ")
      throw std::invalid_argument("gate-set: must be CNOT or CZ");
    cfg.gate_set = o.gate_set == "CZ" ? GateSet::Cz : GateSet::Cnot;
  }
  if (!o.state.empty()) cfg.state = o.state;
  if (o.theta >= 0) { cfg.theta = o.theta; cfg.state.clear(); }
  if (o.phi >= 0) { cfg.phi = o.phi; if (o.theta >= 0) cfg.state.clear(); }
  if (o.p1 >= 0) cfg.noise.p1 = o.p1;
  if (o.p2 >= 0) cfg.noise.p2 = o.p2;
  if (o.p_init >= 0) cfg.noise.p_init = o.p_init;
  if (o.p_meas >= 0) cfg.noise.p_meas = o.p_meas;
  if (o.p_uniform >= 0) cfg.noise.uniform = o.p_uniform;
  if (o.rounds) cfg.rounds = o.rounds;
  if (!o.basis.empty()) {
    if (o.basis != "X" && o.basis != "Y" && o.basis != "Z")
      throw std::invalid_argument("basis: must be X, Y or Z");
    cfg.basis = o.basis == "X" ? Basis::X : (o.basis == "Y" ? Basis::Y : Basis::Z);
  }
  if (o.extra_qubits >= 0) cfg.extra_qubits = o.extra_qubits != 0;
  if (!o.post_selection.empty()) {
    if (o.post_selection != "PREP_ROUND" && o.post_selection != "TWO_ROUNDS")
      throw std::invalid_argument("post-selection: must be PREP_ROUND or TWO_ROUNDS");
    cfg.ps_mode = o.post_selection == "TWO_ROUNDS" ? PostSelectMode::TwoRounds
                                                   : PostSelectMode::PrepRound;
  }
  if (o.shots >= 0) cfg.shots = static_cast<uint64_t>(o.shots);
  if (o.seed >= 0) cfg.seed = static_cast<uint64_t>(o.seed);
  if (o.workers) cfg.workers = o.workers;
  if (o.decode) cfg.decode = true;
  if (o.correlations) cfg.correlations = true;
  if (o.ideal_readout) cfg.ideal_readout = true;
  cfg.resolve_state();
  cfg.validate();
  return cfg;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

MagicType magic_type_of(const ExperimentConfig& cfg) {
  if (cfg.state == "T") return MagicType::TType;
  if (cfg.state == "H" || cfg.state == "A_PI4") return MagicType::HType;
  return std::abs(cfg.theta - kPi / 2) < 1e-9 ? MagicType::HType : MagicType::TType;
}

ordered_json def_table_json(const ShotAnalyzer& an, const DetectorModel& dm,
                            const SurfaceCodeLayout& L) {
  ordered_json rows = ordered_json::array();
  for (size_t d = 0; d < dm.detectors.size(); ++d) {
    const auto& det = dm.detectors[d];
    ordered_json r;
    r["stabilizer"] = L.stab_name(det.stab);
    r["round"] = det.round;
    r["kind"] = det.kind == DetKind::Round0 ? "round0"
                : det.kind == DetKind::Time ? "time"
                                            : "final_reconstructed";
    r["fraction"] = an.def_of(d);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string def_csv(const ShotAnalyzer& an, const DetectorModel& dm, const SurfaceCodeLayout& L) {
  // rows: stabilizers; columns: rounds 0..R-1 plus the reconstructed final
  // round (flagged in the header).
  std::ostringstream out;
  out << "stabilizer";
  for (int r = 0; r < dm.rounds; ++r) out << ",round" << r;
  out << ",final_reconstructed\n";
  for (size_t s = 0; s < L.stabilizers.size(); ++s) {
    out << L.stab_name(static_cast<int>(s));
    std::vector<std::string> cells(static_cast<size_t>(dm.rounds) + 1);
    for (size_t d = 0; d < dm.detectors.size(); ++d) {
      const auto& det = dm.detectors[d];
      if (det.stab != static_cast<int>(s)) continue;
      size_t col = det.kind == DetKind::FinalRecon ? static_cast<size_t>(dm.rounds)
                                                   : static_cast<size_t>(det.round);
      cells[col] = std::to_string(an.def_of(d));
    }
    for (const auto& c : cells) out << "," << c;
    out << "\n";
  }
  return out.str();
}

std::string corr_csv(const ShotAnalyzer& an, const DetectorModel& dm, const SurfaceCodeLayout& L) {
  std::ostringstream out;
  auto label = [&](size_t d) {
    const auto& det = dm.detectors[d];
    std::string kind = det.kind == DetKind::FinalRecon ? "F" : "r" + std::to_string(det.round);
    return L.stab_name(det.stab) + "@" + kind;
  };
  out << "node";
  for (size_t j = 0; j < dm.detectors.size(); ++j) out << "," << label(j);
  out << "\n";
  for (size_t i = 0; i < dm.detectors.size(); ++i) {
    out << label(i);
    for (size_t j = 0; j < dm.detectors.size(); ++j) {
      out << ",";
      if (i == j) { out << 0; continue; }
      try {
        out << an.correlation(i, j);
      } catch (const std::runtime_error&) {
        out << "nan";
      }
    }
    out << "\n";
  }
  return out.str();
}

ordered_json distillation_constants() {
  // Reference lines for plots: distillation thresholds for the two magic
  // state families and the most demanding 15-to-1 error-rate threshold.
  ordered_json j;
  j["h_type_fidelity_threshold"] = 0.859;
  j["t_type_fidelity_threshold"] = 0.827;
  j["error_rate_threshold_15to1"] = 0.141;
  return j;
}

int cmd_run(const CommonOpts& o, const std::string& emit_circuit, const std::string& circuit_file,
            const std::string& record_out, const std::string& report_out,
            const std::string& def_csv_path, const std::string& corr_csv_path,
            const std::string& dem_out, const std::string& layout_out) {
  ExperimentConfig cfg = merge_config(o);

  ordered_json report;
  report["config"] = json(cfg);

  if (!stabilizer_state(cfg.theta, cfg.phi)) {
    // Generic magic states cannot be Monte Carlo sampled in the stabilizer
    // engines; report the exact first-order prediction instead.
    MagicType type = magic_type_of(cfg);
    auto L = build_layout(cfg.distance);
    int rounds = cfg.ps_mode == PostSelectMode::TwoRounds ? 2 : 1;
    auto rep = enumerate_coefficients(L, cfg.gate_set, type, rounds);
    std::cerr << "note: state is not a stabilizer state; sampling skipped.\n"
              << "      Reporting the exact first-order coefficient prediction instead.\n";
    ordered_json pred;
    pred["magic_type"] = magic_type_name(type);
    pred["post_rounds"] = rounds;
    pred["a"] = rep.a.str();
    pred["b"] = rep.b.str();
    pred["c"] = rep.c.str();
    pred["p_logical_first_order"] = predict_first_order(rep, cfg.noise);
    report["first_order_prediction"] = pred;
    report["distillation_reference"] = distillation_constants();
    std::string dump = report.dump(2) + "\n";
    if (!report_out.empty()) write_text(report_out, dump);
    else std::cout << dump;
    return 0;
  }

  Pipeline p = [&]() {
    if (circuit_file.empty()) return Pipeline::build(cfg);
    // Consume a circuit text file instead of building.
    std::ifstream in(circuit_file);
    if (!in) throw std::invalid_argument("circuit-file: cannot open " + circuit_file);
    std::stringstream ss;
    ss << in.rdbuf();
    Pipeline pp;
    pp.circuit = parse_circuit(ss.str());
    pp.layout = build_layout(pp.circuit.meta.distance);
    pp.circuit.finalize(pp.layout);
    pp.noisy = apply_noise(pp.circuit, cfg.noise);
    pp.ref = reference_run(pp.circuit);
    pp.dm = build_detector_model(pp.circuit, pp.layout);
    attach_faults(pp.dm, pp.noisy);
    if (cfg.decode) pp.graph.emplace(pp.dm);
    return pp;
  }();

  if (!emit_circuit.empty()) write_text(emit_circuit, serialize_circuit(p.circuit));
  if (!layout_out.empty()) write_text(layout_out, export_layout(p.layout));
  if (!dem_out.empty()) write_text(dem_out, export_detector_model(p.dm, p.layout));

  ShotAnalyzer::Options opt;
  opt.mode = cfg.ps_mode;
  opt.track_correlations = cfg.correlations;
  if (cfg.decode) opt.decoder = &*p.graph;
  ShotAnalyzer an(p.dm, opt);

  std::ofstream record;
  std::function<void(const MeasFlipTable&, size_t)> hook;
  if (!record_out.empty()) {
    record.open(record_out);
    if (!record) throw std::runtime_error("cannot write " + record_out);
    write_record_header(record, cfg, p);
    hook = [&](const MeasFlipTable& mt, size_t valid) { append_record_block(record, p, mt, valid); };
  }
  run_sampling(p, cfg, {&an}, hook);

  auto ps = an.post_selection();
  ordered_json psj;
  psj["mode"] = cfg.ps_mode == PostSelectMode::TwoRounds ? "TWO_ROUNDS" : "PREP_ROUND";
  psj["total_shots"] = ps.total;
  psj["retained"] = ps.retained;
  psj["retained_fraction"] = ps.retained_fraction();
  psj["eps_raw"] = ps.eps_raw();
  psj["eps_raw_se"] = ps.se_raw();
  if (ps.retained) {
    psj["eps_det"] = ps.eps_det();
    psj["eps_det_se"] = ps.se_det();
  }
  report["observable"] = p.dm.observables.empty() ? "" : p.dm.observables[0].name;
  report["ideal_expectation"] = p.ideal_observable_expectation();
  report["post_selection"] = psj;
  if (cfg.decode) {
    ordered_json dj;
    dj["eps_corrected"] = an.eps_corrected();
    dj["decoded_shots"] = an.decoded_shots();
    dj["decoder"] = "exact MWPM, edge weight -ln(p/(1-p))";
    report["decode"] = dj;
  }
  report["def"] = def_table_json(an, p.dm, p.layout);
  report["distillation_reference"] = distillation_constants();

  if (!def_csv_path.empty()) write_text(def_csv_path, def_csv(an, p.dm, p.layout));
  if (!corr_csv_path.empty()) {
    if (!cfg.correlations) throw std::invalid_argument("corr-csv requires --correlations");
    write_text(corr_csv_path, corr_csv(an, p.dm, p.layout));
  }

  std::string dump = report.dump(2) + "\n";
  if (!report_out.empty()) write_text(report_out, dump);
  else std::cout << dump;
  if (!record_out.empty()) std::cerr << "records written to " << record_out << "\n";
  return 0;
}

int cmd_sweep(const CommonOpts& o, const std::string& distances, const std::string& rates,
              const std::string& report_out, const std::string& csv_prefix) {
  ExperimentConfig base = merge_config(o);
  std::vector<int> ds;
  std::vector<double> ps;
  {
    std::stringstream sd(distances);
    std::string tok;
    while (std::getline(sd, tok, ',')) ds.push_back(std::stoi(tok));
    std::stringstream sp(rates);
    while (std::getline(sp, tok, ',')) ps.push_back(std::stod(tok));
  }
  if (ds.empty() || ps.empty()) throw std::invalid_argument("sweep: empty distance or rate grid");

  ordered_json cells = ordered_json::array();
  std::ostringstream eps_raw_csv, eps_det_csv, ratio_csv, retained_csv;
  for (auto* s : {&eps_raw_csv, &eps_det_csv, &ratio_csv, &retained_csv}) {
    (*s) << "distance";
    for (double p : ps) (*s) << "," << p;
    (*s) << "\n";
  }
  for (int d : ds) {
    eps_raw_csv << d;
    eps_det_csv << d;
    ratio_csv << d;
    retained_csv << d;
    for (double p : ps) {
      ExperimentConfig cfg = base;
      cfg.distance = d;
      cfg.noise = NoiseParams::uniform_rate(p);
      cfg.validate();
      Pipeline pipe = Pipeline::build(cfg);
      ShotAnalyzer::Options opt;
      opt.mode = cfg.ps_mode;
      ShotAnalyzer an(pipe.dm, opt);
      run_sampling(pipe, cfg, {&an});
      auto res = an.post_selection();
      double eps_det = res.retained ? res.eps_det() : std::nan("");
      double ratio = eps_det > 0 ? res.eps_raw() / eps_det : std::nan("");
      ordered_json cell;
      cell["distance"] = d;
      cell["rate"] = p;
      cell["eps_raw"] = res.eps_raw();
      cell["eps_det"] = eps_det;
      cell["ratio"] = ratio;
      cell["retained_fraction"] = res.retained_fraction();
      cell["shots"] = res.total;
      cells.push_back(std::move(cell));
      eps_raw_csv << "," << res.eps_raw();
      eps_det_csv << "," << eps_det;
      ratio_csv << "," << ratio;
      retained_csv << "," << res.retained_fraction();
      std::cerr << "swept d=" << d << " p=" << p << "\n";
    }
    eps_raw_csv << "\n";
    eps_det_csv << "\n";
    ratio_csv << "\n";
    retained_csv << "\n";
  }
  ordered_json report;
  report["config"] = json(base);
  report["cells"] = cells;
  report["distillation_reference"] = distillation_constants();
  if (!csv_prefix.empty()) {
    write_text(csv_prefix + "_eps_raw.csv", eps_raw_csv.str());
    write_text(csv_prefix + "_eps_det.csv", eps_det_csv.str());
    write_text(csv_prefix + "_ratio.csv", ratio_csv.str());
    write_text(csv_prefix + "_retained.csv", retained_csv.str());
  }
  std::string dump = report.dump(2) + "\n";
  if (!report_out.empty()) write_text(report_out, dump);
  else std::cout << dump;
  return 0;
}

int cmd_enumerate(const std::string& distances, const std::string& gate_sets,
                  const std::string& types, const std::string& rounds_list,
                  const std::string& report_out, bool with_ledger) {
  std::vector<int> ds;
  {
    std::stringstream sd(distances);
    std::string tok;
    while (std::getline(sd, tok, ',')) ds.push_back(std::stoi(tok));
  }
  std::vector<GateSet> gss;
  {
    std::stringstream ss(gate_sets);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (tok == "CNOT") gss.push_back(GateSet::Cnot);
      else if (tok == "CZ") gss.push_back(GateSet::Cz);
      else throw std::invalid_argument("gate-sets: must list CNOT and/or CZ");
    }
  }
  std::vector<MagicType> mts;
  {
    std::stringstream ss(types);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (tok == "H") mts.push_back(MagicType::HType);
      else if (tok == "T") mts.push_back(MagicType::TType);
      else throw std::invalid_argument("types: must list H and/or T");
    }
  }
  std::vector<int> rss;
  {
    std::stringstream ss(rounds_list);
    std::string tok;
    while (std::getline(ss, tok, ',')) rss.push_back(std::stoi(tok));
  }

  bool mismatch = false;
  ordered_json rows = ordered_json::array();
  for (int d : ds) {
    auto L = build_layout(d);
    for (GateSet gs : gss) {
      for (int r : rss) {
        for (MagicType mt : mts) {
          auto rep = enumerate_coefficients(L, gs, mt, r, with_ledger);
          Rational ea = table_a(gs, mt, d, r), eb = table_b(d, r), ec = table_c();
          bool ok = rep.a == ea && rep.b == eb && rep.c == ec;
          mismatch |= !ok;
          ordered_json row;
          row["distance"] = d;
          row["gate_set"] = gate_set_name(gs);
          row["type"] = magic_type_name(mt);
          row["rounds"] = r;
          row["a"] = rep.a.str();
          row["b"] = rep.b.str();
          row["c"] = rep.c.str();
          row["expected_a"] = ea.str();
          row["expected_b"] = eb.str();
          row["expected_c"] = ec.str();
          row["match"] = ok;
          row["terms"] = {{"detected", rep.detected},
                          {"logical", rep.logical},
                          {"harmless", rep.harmless}};
          if (with_ledger) {
            ordered_json ledger = ordered_json::array();
            for (const auto& e : rep.ledger) {
              ordered_json le;
              le["site"] = e.site;
              le["class"] = e.cls == FaultClass::Detected ? "DETECTED"
                            : e.cls == FaultClass::Logical ? "LOGICAL"
                                                           : "HARMLESS";
              if (e.cls == FaultClass::Logical) le["weight"] = e.weight.str();
              ledger.push_back(std::move(le));
            }
            row["ledger"] = std::move(ledger);
          }
          rows.push_back(std::move(row));
          std::cout << "d=" << d << " " << gate_set_name(gs) << " rounds=" << r << " "
                    << magic_type_name(mt) << "-type: a=" << rep.a.str() << " b=" << rep.b.str()
                    << " c=" << rep.c.str() << (ok ? "" : "  MISMATCH") << "\n";
        }
      }
    }
  }
  if (!report_out.empty()) {
    ordered_json report;
    report["rows"] = rows;
    report["all_match"] = !mismatch;
    write_text(report_out, report.dump(2) + "\n");
  }
  if (mismatch) {
    std::cerr << "enumerate: coefficient mismatch against golden table values\n";
    return 2;
  }
  return 0;
}

int cmd_analyze(const std::string& record_path, const std::string& report_out,
                const std::string& def_csv_path, const std::string& corr_csv_path, bool decode,
                bool correlations, const std::string& post_selection) {
  const Pipeline* p = nullptr;
  std::optional<Pipeline> storage;
  RecordFile rf = read_record_file(record_path, p, storage);

  ExperimentConfig cfg = rf.config;
  if (!post_selection.empty())
    cfg.ps_mode = post_selection == "TWO_ROUNDS" ? PostSelectMode::TwoRounds
                                                 : PostSelectMode::PrepRound;
  std::optional<MatchingGraph> graph;
  ShotAnalyzer::Options opt;
  opt.mode = cfg.ps_mode;
  opt.track_correlations = correlations || !corr_csv_path.empty();
  if (decode) {
    graph.emplace(p->dm);
    opt.decoder = &*graph;
  }
  ShotAnalyzer an(p->dm, opt);
  for (size_t b = 0; b < rf.blocks.size(); ++b) an.add_block(rf.blocks[b], rf.valid[b]);

  auto ps = an.post_selection();
  ordered_json report;
  report["config"] = json(cfg);
  report["shots"] = rf.shots;
  report["retained_fraction"] = ps.retained_fraction();
  report["eps_raw"] = ps.eps_raw();
  if (ps.retained) report["eps_det"] = ps.eps_det();
  if (decode) report["eps_corrected"] = an.eps_corrected();
  report["def"] = def_table_json(an, p->dm, p->layout);
  if (!def_csv_path.empty()) write_text(def_csv_path, def_csv(an, p->dm, p->layout));
  if (!corr_csv_path.empty()) write_text(corr_csv_path, corr_csv(an, p->dm, p->layout));
  std::string dump = report.dump(2) + "\n";
  if (!report_out.empty()) write_text(report_out, dump);
  else std::cout << dump;
  return 0;
}

int cmd_fit(const std::string& input, const std::string& report_out) {
  std::ifstream in(input);
  if (!in) throw std::invalid_argument("fit: cannot open " + input);
  std::vector<double> ks, fs;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || std::isalpha(line[0])) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    double k, f;
    if (ls >> k >> f) {
      ks.push_back(k);
      fs.push_back(f);
    }
  }
  DecayFit fit = fit_error_per_round(ks, fs);
  ordered_json report;
  report["points"] = ks.size();
  report["eps_per_round"] = fit.eps;
  report["k0"] = fit.k0;
  report["eps_se"] = std::sqrt(std::max(0.0, fit.cov[0][0]));
  report["covariance"] = {{fit.cov[0][0], fit.cov[0][1]}, {fit.cov[1][0], fit.cov[1][1]}};
  std::string dump = report.dump(2) + "\n";
  if (!report_out.empty()) write_text(report_out, dump);
  else std::cout << dump;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rotated-surface-code logical state preparation toolkit"};
  app.require_subcommand(1);

  CommonOpts run_opts, sweep_opts;
  std::string emit_circuit, circuit_file, record_out, report_out, def_csv_path, corr_csv_path;
  std::string dem_out, layout_out;

  CLI::App* run = app.add_subcommand("run", "sample one experiment and analyze it");
  add_common(run, run_opts);
  run->add_option("--emit-circuit", emit_circuit, "write the built circuit as text");
  run->add_option("--circuit-file", circuit_file, "consume a circuit text file instead of building");
  run->add_option("--record-out", record_out, "write a shot record file");
  run->add_option("--report-out", report_out, "write the JSON report (default: stdout)");
  run->add_option("--def-csv", def_csv_path, "write detection event fractions as CSV");
  run->add_option("--corr-csv", corr_csv_path, "write the correlation matrix as CSV");
  run->add_option("--dem-out", dem_out, "write the detector error model as text");
  run->add_option("--layout-out", layout_out, "write the layout description as text");

  std::string distances = "3", rates = "0.001", sweep_report, sweep_csv;
  CLI::App* sweep = app.add_subcommand("sweep", "grid over distances and uniform error rates");
  add_common(sweep, sweep_opts);
  sweep->add_option("--distances", distances, "comma-separated odd distances");
  sweep->add_option("--error-rates", rates, "comma-separated uniform rates");
  sweep->add_option("--report-out", sweep_report, "write the JSON report");
  sweep->add_option("--csv-out", sweep_csv, "prefix for heatmap CSV files");

  std::string enum_d = "3,5,7,9", enum_gs = "CNOT,CZ", enum_t = "H,T", enum_r = "1,2";
  std::string enum_report;
  bool enum_ledger = false;
  CLI::App* enumerate = app.add_subcommand("enumerate", "exact first-order coefficient tables");
  enumerate->add_option("--distances", enum_d, "comma-separated odd distances");
  enumerate->add_option("--gate-sets", enum_gs, "CNOT,CZ");
  enumerate->add_option("--types", enum_t, "H,T");
  enumerate->add_option("--rounds", enum_r, "post-selection rounds, from 1,2");
  enumerate->add_option("--report-out", enum_report, "write the JSON table");
  enumerate->add_flag("--ledger", enum_ledger, "include the per-fault classification ledger");

  std::string analyze_record, analyze_report, analyze_def, analyze_corr, analyze_ps;
  bool analyze_decode = false, analyze_correlations = false;
  CLI::App* analyze = app.add_subcommand("analyze", "re-analyze a shot record file");
  analyze->add_option("--record", analyze_record, "record file path")->required();
  analyze->add_option("--report-out", analyze_report, "write the JSON report");
  analyze->add_option("--def-csv", analyze_def, "write detection event fractions as CSV");
  analyze->add_option("--corr-csv", analyze_corr, "write the correlation matrix as CSV");
  analyze->add_option("--post-selection", analyze_ps, "override the post-selection mode");
  analyze->add_flag("--decode", analyze_decode, "run the matching decoder");
  analyze->add_flag("--correlations", analyze_correlations, "accumulate correlations");

  std::string fit_input, fit_report;
  CLI::App* fit = app.add_subcommand("fit", "fit the logical error per round from (k, F) pairs");
  fit->add_option("--input", fit_input, "CSV/whitespace file of round, fidelity pairs")->required();
  fit->add_option("--report-out", fit_report, "write the JSON fit result");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed())
      return cmd_run(run_opts, emit_circuit, circuit_file, record_out, report_out, def_csv_path,
                     corr_csv_path, dem_out, layout_out);
    if (sweep->parsed()) return cmd_sweep(sweep_opts, distances, rates, sweep_report, sweep_csv);
    if (enumerate->parsed())
      return cmd_enumerate(enum_d, enum_gs, enum_t, enum_r, enum_report, enum_ledger);
    if (analyze->parsed())
      return cmd_analyze(analyze_record, analyze_report, analyze_def, analyze_corr, analyze_decode,
                         analyze_correlations, analyze_ps);
    if (fit->parsed()) return cmd_fit(fit_input, fit_report);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

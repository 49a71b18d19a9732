#pragma once

#include <bit>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qprep/detectors.hpp"
#include "qprep/matching.hpp"

namespace qprep {

struct PostSelectionResult {
  PostSelectMode mode;
  uint64_t total = 0;
  uint64_t retained = 0;
  uint64_t errors_raw = 0;       // observable flips over all shots
  uint64_t errors_retained = 0;  // observable flips among retained shots
  double retained_fraction() const { return total ? double(retained) / double(total) : 0.0; }
  double eps_raw() const { return total ? double(errors_raw) / double(total) : 0.0; }
  double eps_det() const {
    if (!retained) throw std::runtime_error("post-selection retained no shots");
    return double(errors_retained) / double(retained);
  }
  // Binomial standard errors.
  double se_raw() const { return binom_se(errors_raw, total); }
  double se_det() const { return binom_se(errors_retained, retained); }
  static double binom_se(uint64_t k, uint64_t n) {
    if (!n) return 0.0;
    double p = double(k) / double(n);
    return std::sqrt(p * (1 - p) / double(n));
  }
};

// Streaming shot analysis over bit-packed measurement-flip blocks. All
// accumulators are associative, so partial results from block ranges merge.
class ShotAnalyzer {
 public:
  struct Options {
    PostSelectMode mode = PostSelectMode::PrepRound;
    bool track_correlations = false;
    const MatchingGraph* decoder = nullptr;  // decode every shot when set
    bool keep_corrected_bits = false;        // stash per-shot corrected errors
  };

  ShotAnalyzer(const DetectorModel& dm, Options opt)
      : dm_(dm), opt_(opt), scope_(post_selection_scope(dm, opt.mode)) {
    det_fires_.assign(dm.detectors.size(), 0);
    if (opt_.track_correlations) {
      pair_counts_.assign(dm.detectors.size() * dm.detectors.size(), 0);
    }
  }

  ShotAnalyzer clone_empty() const { return ShotAnalyzer(dm_, opt_); }

  // Associative merge of partial results; corrected-error bytes concatenate
  // in merge order, so merge workers in block order.
  void merge(const ShotAnalyzer& o) {
    total_ += o.total_;
    retained_ += o.retained_;
    errors_raw_ += o.errors_raw_;
    errors_retained_ += o.errors_retained_;
    decoded_ += o.decoded_;
    decode_errors_ += o.decode_errors_;
    for (size_t i = 0; i < det_fires_.size(); ++i) det_fires_[i] += o.det_fires_[i];
    for (size_t i = 0; i < pair_counts_.size(); ++i) pair_counts_[i] += o.pair_counts_[i];
    corrected_bits_.insert(corrected_bits_.end(), o.corrected_bits_.begin(),
                           o.corrected_bits_.end());
  }

  // `valid` caps the number of live shots in the block (last block may be
  // partial). Detector bits are derived from measurement flip parities.
  void add_block(const MeasFlipTable& mt, size_t valid) {
    size_t words = mt.words;
    size_t det_count = dm_.detectors.size();
    det_bits_.assign(det_count * words, 0);
    for (size_t d = 0; d < det_count; ++d) {
      uint64_t* row = det_bits_.data() + d * words;
      for (int m : dm_.detectors[d].meas) {
        const uint64_t* src = mt.row(static_cast<size_t>(m));
        for (size_t w = 0; w < words; ++w) row[w] ^= src[w];
      }
    }
    obs_bits_.assign(words, 0);
    if (!dm_.observables.empty()) {
      for (int m : dm_.observables[0].meas) {
        const uint64_t* src = mt.row(static_cast<size_t>(m));
        for (size_t w = 0; w < words; ++w) obs_bits_[w] ^= src[w];
      }
    }
    scope_bits_.assign(words, 0);
    for (int d : scope_) {
      const uint64_t* row = det_bits_.data() + static_cast<size_t>(d) * words;
      for (size_t w = 0; w < words; ++w) scope_bits_[w] |= row[w];
    }

    std::vector<uint64_t> mask(words, ~0ull);
    size_t full_words = valid / 64;
    for (size_t w = full_words; w < words; ++w) mask[w] = 0;
    if (valid % 64 && full_words < words) mask[full_words] = (1ull << (valid % 64)) - 1;

    total_ += valid;
    for (size_t d = 0; d < det_count; ++d) {
      const uint64_t* row = det_bits_.data() + d * words;
      for (size_t w = 0; w < words; ++w) det_fires_[d] += std::popcount(row[w] & mask[w]);
    }
    for (size_t w = 0; w < words; ++w) {
      uint64_t retained = ~scope_bits_[w] & mask[w];
      retained_ += std::popcount(retained);
      errors_raw_ += std::popcount(obs_bits_[w] & mask[w]);
      errors_retained_ += std::popcount(obs_bits_[w] & retained);
    }
    if (opt_.track_correlations) {
      for (size_t i = 0; i < det_count; ++i) {
        const uint64_t* ri = det_bits_.data() + i * words;
        for (size_t j = i + 1; j < det_count; ++j) {
          const uint64_t* rj = det_bits_.data() + j * words;
          uint64_t c = 0;
          for (size_t w = 0; w < words; ++w) c += std::popcount(ri[w] & rj[w] & mask[w]);
          pair_counts_[i * det_count + j] += c;
        }
      }
    }
    if (opt_.decoder) decode_block(words, mask);
  }

  PostSelectionResult post_selection() const {
    return {opt_.mode, total_, retained_, errors_raw_, errors_retained_};
  }

  uint64_t total() const { return total_; }
  uint64_t decode_errors() const { return decode_errors_; }
  uint64_t decoded_shots() const { return decoded_; }
  double eps_corrected() const { return decoded_ ? double(decode_errors_) / double(decoded_) : 0.0; }
  const std::vector<uint64_t>& detector_fires() const { return det_fires_; }
  const std::vector<uint8_t>& corrected_error_bytes() const { return corrected_bits_; }

  double def_of(size_t det) const { return total_ ? double(det_fires_[det]) / double(total_) : 0.0; }

  // Two-point correlation p_ij from detector bit statistics, clipped at 0.
  double correlation(size_t i, size_t j) const {
    if (!opt_.track_correlations) throw std::logic_error("correlations not tracked");
    if (i == j) return 0.0;
    if (i > j) std::swap(i, j);
    double n = static_cast<double>(total_);
    double xi = det_fires_[i] / n;
    double xj = det_fires_[j] / n;
    double xij = pair_counts_[i * dm_.detectors.size() + j] / n;
    double den = 1 - 2 * xi - 2 * xj + 4 * xij;
    if (std::abs(den) < 1e-12) throw std::runtime_error("degenerate correlation denominator");
    double rad = 1 - 4 * (xij - xi * xj) / den;
    if (rad < 0) rad = 0;
    double p = 0.5 - 0.5 * std::sqrt(rad);
    return p > 0 ? p : 0.0;
  }

 private:
  void decode_block(size_t words, const std::vector<uint64_t>& mask) {
    size_t det_count = dm_.detectors.size();
    std::vector<int> fired;
    for (size_t w = 0; w < words; ++w) {
      uint64_t live = mask[w];
      while (live) {
        int bit = std::countr_zero(live);
        live &= live - 1;
        uint64_t m = 1ull << bit;
        fired.clear();
        for (size_t d = 0; d < det_count; ++d)
          if (det_bits_[d * words + w] & m) fired.push_back(static_cast<int>(d));
        uint32_t predicted = fired.empty() ? 0 : opt_.decoder->decode(fired).obs;
        bool raw_err = obs_bits_[w] & m;
        bool corrected = raw_err ^ (predicted & 1u);
        ++decoded_;
        decode_errors_ += corrected;
        if (opt_.keep_corrected_bits) corrected_bits_.push_back(corrected);
      }
    }
  }

  const DetectorModel& dm_;
  Options opt_;
  std::vector<int> scope_;

  uint64_t total_ = 0, retained_ = 0, errors_raw_ = 0, errors_retained_ = 0;
  uint64_t decoded_ = 0, decode_errors_ = 0;
  std::vector<uint64_t> det_fires_;
  std::vector<uint64_t> pair_counts_;
  std::vector<uint8_t> corrected_bits_;

  // scratch
  std::vector<uint64_t> det_bits_, obs_bits_, scope_bits_;
};

// ---- Logical tomography ----------------------------------------------------

struct BasisEstimate {
  int ideal_sign = 1;       // noiseless observable value (+1/-1)
  uint64_t flips = 0;       // observable flips among retained shots
  uint64_t retained = 0;
  double expectation() const {
    if (!retained) throw std::runtime_error("tomography: no retained shots");
    return ideal_sign * (1.0 - 2.0 * double(flips) / double(retained));
  }
  double se() const {
    double e = 1.0 - 2.0 * double(flips) / double(retained);
    return std::sqrt(std::max(0.0, 1.0 - e * e) / double(retained));
  }
};

struct LogicalTomography {
  double ex, ey, ez;        // Bloch vector estimate (linear inversion)
  double se_x, se_y, se_z;
  double fidelity_lin;      // <psi| rho_lin |psi>
  double fidelity_ml;       // after projection to the physical set
  double rho_ml[2][2][2];   // [row][col][re/im]
};

// Maximum-likelihood estimate by eigenvalue truncation: for a qubit this
// clips the Bloch vector to the unit ball.
inline LogicalTomography tomography(const BasisEstimate& bx, const BasisEstimate& by,
                                    const BasisEstimate& bz, double theta, double phi) {
  LogicalTomography t{};
  t.ex = bx.expectation();
  t.ey = by.expectation();
  t.ez = bz.expectation();
  t.se_x = bx.se();
  t.se_y = by.se();
  t.se_z = bz.se();
  double nx = std::sin(theta) * std::cos(phi);
  double ny = std::sin(theta) * std::sin(phi);
  double nz = std::cos(theta);
  t.fidelity_lin = 0.5 * (1 + nx * t.ex + ny * t.ey + nz * t.ez);
  double norm = std::sqrt(t.ex * t.ex + t.ey * t.ey + t.ez * t.ez);
  double sx = t.ex, sy = t.ey, sz = t.ez;
  if (norm > 1.0) { sx /= norm; sy /= norm; sz /= norm; }
  t.fidelity_ml = 0.5 * (1 + nx * sx + ny * sy + nz * sz);
  t.rho_ml[0][0][0] = 0.5 * (1 + sz); t.rho_ml[0][0][1] = 0;
  t.rho_ml[1][1][0] = 0.5 * (1 - sz); t.rho_ml[1][1][1] = 0;
  t.rho_ml[0][1][0] = 0.5 * sx; t.rho_ml[0][1][1] = -0.5 * sy;
  t.rho_ml[1][0][0] = 0.5 * sx; t.rho_ml[1][0][1] = 0.5 * sy;
  return t;
}

// ---- Logical error per round fit -------------------------------------------

struct DecayFit {
  double eps = 0.0;
  double k0 = 0.0;
  double cov[2][2] = {{0, 0}, {0, 0}};  // (eps, k0) covariance
  int iterations = 0;
};

// Fits F(k) = (1 + (1 - 2 eps)^(k - k0)) / 2 by linear regression on
// ln(2F - 1) followed by Gauss-Newton refinement of the least-squares
// problem in the original coordinates.
inline DecayFit fit_error_per_round(const std::vector<double>& rounds,
                                    const std::vector<double>& fidelities) {
  if (rounds.size() != fidelities.size() || rounds.size() < 3)
    throw std::invalid_argument("fit needs at least 3 points");

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (size_t i = 0; i < rounds.size(); ++i) {
    double v = 2 * fidelities[i] - 1;
    if (v <= 1e-12) continue;
    double y = std::log(v);
    sx += rounds[i]; sy += y; sxx += rounds[i] * rounds[i]; sxy += rounds[i] * y;
    ++n;
  }
  if (n < 2) throw std::runtime_error("fit: too few points above F = 1/2");
  double det = n * sxx - sx * sx;
  double slope = (n * sxy - sx * sy) / det;
  double intercept = (sy * sxx - sx * sxy) / det;

  // Parameters: a = ln(1 - 2 eps), b = k0.
  double a = slope;
  double b = std::abs(slope) > 1e-15 ? -intercept / slope : 0.0;

  // Gauss-Newton on r_i = F(k_i) - F_i.
  DecayFit fit;
  const double lambda = 0.0;
  for (int it = 0; it < 200; ++it) {
    double jtj[2][2] = {{lambda, 0}, {0, lambda}};
    double jtr[2] = {0, 0};
    double ss = 0;
    for (size_t i = 0; i < rounds.size(); ++i) {
      double k = rounds[i];
      double e = std::exp(a * (k - b));
      double r = 0.5 * (1 + e) - fidelities[i];
      double da = 0.5 * e * (k - b);
      double db = -0.5 * e * a;
      jtj[0][0] += da * da; jtj[0][1] += da * db;
      jtj[1][0] += db * da; jtj[1][1] += db * db;
      jtr[0] += da * r; jtr[1] += db * r;
      ss += r * r;
    }
    double d = jtj[0][0] * jtj[1][1] - jtj[0][1] * jtj[1][0];
    if (std::abs(d) < 1e-30) break;
    double step_a = (jtj[1][1] * jtr[0] - jtj[0][1] * jtr[1]) / d;
    double step_b = (-jtj[1][0] * jtr[0] + jtj[0][0] * jtr[1]) / d;
    a -= step_a;
    b -= step_b;
    fit.iterations = it + 1;
    if (std::abs(step_a) < 1e-14 && std::abs(step_b) < 1e-14) break;
  }
  if (!(a < 1e-9)) a = std::min(a, 0.0);  // decay, not growth
  fit.eps = 0.5 * (1 - std::exp(a));
  fit.k0 = b;

  // Covariance of (a, b) from residual variance, mapped to (eps, k0).
  double jtj[2][2] = {{0, 0}, {0, 0}};
  double ss = 0;
  for (size_t i = 0; i < rounds.size(); ++i) {
    double k = rounds[i];
    double e = std::exp(a * (k - b));
    double r = 0.5 * (1 + e) - fidelities[i];
    double da = 0.5 * e * (k - b);
    double db = -0.5 * e * a;
    jtj[0][0] += da * da; jtj[0][1] += da * db;
    jtj[1][0] += db * da; jtj[1][1] += db * db;
    ss += r * r;
  }
  double dof = std::max<double>(1.0, double(rounds.size()) - 2.0);
  double sigma2 = ss / dof;
  double d = jtj[0][0] * jtj[1][1] - jtj[0][1] * jtj[1][0];
  if (std::abs(d) > 1e-30) {
    double inv[2][2] = {{jtj[1][1] / d, -jtj[0][1] / d}, {-jtj[1][0] / d, jtj[0][0] / d}};
    double deda = 0.5 * std::exp(a);  // |d eps / d a|
    fit.cov[0][0] = sigma2 * inv[0][0] * deda * deda;
    fit.cov[0][1] = sigma2 * inv[0][1] * deda;
    fit.cov[1][0] = sigma2 * inv[1][0] * deda;
    fit.cov[1][1] = sigma2 * inv[1][1];
  }
  return fit;
}

}  // namespace qprep

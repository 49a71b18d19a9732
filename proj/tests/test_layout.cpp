#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>

#include "qprep/layout.hpp"
#include "qprep/pauli.hpp"

using namespace qprep;

namespace {

PauliString stab_operator(const StabilizerSpec& s) {
  PauliString p;
  for (uint32_t q : s.support) p.set(q, s.kind == StabKind::X ? Pauli::X : Pauli::Z);
  return p;
}

PauliString logical_operator(const std::vector<uint32_t>& qs, Pauli kind) {
  PauliString p;
  for (uint32_t q : qs) p.set(q, kind);
  return p;
}

}  // namespace

TEST_CASE("distance-3 geometry matches the 17-qubit code") {
  auto L = build_layout(3);
  CHECK(L.num_data == 9);
  CHECK(L.num_qubits == 17);
  CHECK(L.center() == 4);

  int nx = 0, nz = 0;
  for (const auto& s : L.stabilizers) (s.kind == StabKind::X ? nx : nz)++;
  CHECK(nx == 4);
  CHECK(nz == 4);

  // Supports in the figure labeling (0-indexed data ids, row-major).
  auto support = [&](const std::string& name) -> std::vector<uint32_t> {
    for (size_t i = 0; i < L.stabilizers.size(); ++i)
      if (L.stab_name(static_cast<int>(i)) == name) return L.stabilizers[i].support;
    FAIL("missing stabilizer ", name);
    return {};
  };
  CHECK(support("Z1") == std::vector<uint32_t>{0, 1, 3, 4});
  CHECK(support("Z2") == std::vector<uint32_t>{2, 5});
  CHECK(support("Z3") == std::vector<uint32_t>{3, 6});
  CHECK(support("Z4") == std::vector<uint32_t>{4, 5, 7, 8});
  CHECK(support("X1") == std::vector<uint32_t>{0, 1});
  CHECK(support("X2") == std::vector<uint32_t>{1, 2, 4, 5});
  CHECK(support("X3") == std::vector<uint32_t>{3, 4, 6, 7});
  CHECK(support("X4") == std::vector<uint32_t>{7, 8});
}

TEST_CASE("deterministic set at distance 3 is X1, Z2, Z3, X4") {
  auto L = build_layout(3);
  std::set<std::string> det;
  for (int i : L.deterministic_stabs) det.insert(L.stab_name(i));
  CHECK(det == std::set<std::string>{"X1", "X4", "Z2", "Z3"});
}

TEST_CASE("region partition reproduces the distance-3 product state") {
  auto L = build_layout(3);
  auto prep = initial_product_state(L);
  // |+>|+>|0>|0>|psi>|0>|0>|+>|+> over row-major data qubits
  std::vector<PrepKind> want = {PrepKind::Plus, PrepKind::Plus, PrepKind::Zero,
                                PrepKind::Zero, PrepKind::Magic, PrepKind::Zero,
                                PrepKind::Zero, PrepKind::Plus, PrepKind::Plus};
  CHECK(prep == want);
}

TEST_CASE("counting rules for general distance") {
  for (int d : {3, 5, 7, 9}) {
    CAPTURE(d);
    auto L = build_layout(d);
    CHECK(L.num_data == uint32_t(d * d));
    int nx = 0, nz = 0, det_x = 0, det_z = 0;
    for (const auto& s : L.stabilizers) {
      (s.kind == StabKind::X ? nx : nz)++;
      if (s.deterministic) (s.kind == StabKind::X ? det_x : det_z)++;
      CHECK((s.support.size() == 2 || s.support.size() == 4));
    }
    CHECK(nx == (d * d - 1) / 2);
    CHECK(nz == (d * d - 1) / 2);
    CHECK(det_x == (d * d - 1) / 4);
    CHECK(det_z == (d * d - 1) / 4);

    // Regions are balanced and the magic state sits alone in the center.
    int counts[5] = {0, 0, 0, 0, 0};
    for (auto r : L.region) counts[static_cast<int>(r)]++;
    CHECK(counts[0] == 1);
    for (int r = 1; r <= 4; ++r) CHECK(counts[r] == (d * d - 1) / 4);
  }
}

TEST_CASE("stabilizer group commutes; logicals anticommute with each other only") {
  for (int d : {3, 5, 7, 9}) {
    CAPTURE(d);
    auto L = build_layout(d);
    auto lx = logical_operator(L.logical_x, Pauli::X);
    auto lz = logical_operator(L.logical_z, Pauli::Z);
    CHECK(L.logical_x.size() == size_t(d));
    CHECK(L.logical_z.size() == size_t(d));
    CHECK_FALSE(lx.commutes_with(lz));
    for (size_t i = 0; i < L.stabilizers.size(); ++i) {
      auto si = stab_operator(L.stabilizers[i]);
      CHECK(si.commutes_with(lx));
      CHECK(si.commutes_with(lz));
      for (size_t j = i + 1; j < L.stabilizers.size(); ++j) {
        auto sj = stab_operator(L.stabilizers[j]);
        CHECK(si.commutes_with(sj));
      }
    }
  }
}

TEST_CASE("logical strings cross exactly at the center") {
  for (int d : {3, 5, 7}) {
    auto L = build_layout(d);
    std::set<uint32_t> xs(L.logical_x.begin(), L.logical_x.end());
    std::set<uint32_t> zs(L.logical_z.begin(), L.logical_z.end());
    std::vector<uint32_t> inter;
    std::set_intersection(xs.begin(), xs.end(), zs.begin(), zs.end(), std::back_inserter(inter));
    CHECK(inter == std::vector<uint32_t>{L.center()});
  }
}

TEST_CASE("deterministic stabilizers never touch the center; arms live in the right regions") {
  for (int d : {3, 5, 7, 9}) {
    auto L = build_layout(d);
    for (int i : L.deterministic_stabs) {
      for (uint32_t q : L.stabilizers[static_cast<size_t>(i)].support) CHECK(q != L.center());
    }
    for (uint32_t q : L.logical_x)
      if (q != L.center()) CHECK(L.prepared_plus(q));
    for (uint32_t q : L.logical_z)
      if (q != L.center()) CHECK_FALSE(L.prepared_plus(q));
    // Every non-magic data qubit is covered by a deterministic stabilizer of
    // its region's kind, which is what makes preparation errors detectable.
    for (uint32_t q = 0; q < L.num_data; ++q) {
      if (q == L.center()) continue;
      bool covered = false;
      for (int i : L.deterministic_stabs) {
        const auto& s = L.stabilizers[static_cast<size_t>(i)];
        if (std::find(s.support.begin(), s.support.end(), q) != s.support.end()) covered = true;
      }
      CAPTURE(d); CAPTURE(q);
      CHECK(covered);
    }
  }
}

TEST_CASE("layout export golden snapshot at distance 3") {
  auto L = build_layout(3);
  std::string text = export_layout(L);
  CHECK(text.find("layout distance=3") == 0);
  CHECK(text.find("D4 (1,1) region=C") != std::string::npos);
  CHECK(text.find("X1 ancilla=13 plaq=(-1,0) support=[D0 D1] deterministic") != std::string::npos);
  CHECK(text.find("Z3 ancilla=11 plaq=(1,-1) support=[D3 D6] deterministic") != std::string::npos);
  CHECK(text.find("logical_x = [D1 D4 D7]") != std::string::npos);
  CHECK(text.find("logical_z = [D3 D4 D5]") != std::string::npos);
}

TEST_CASE("invalid distances are rejected") {
  CHECK_THROWS_AS(build_layout(2), std::invalid_argument);
  CHECK_THROWS_AS(build_layout(4), std::invalid_argument);
  CHECK_THROWS_AS(build_layout(1), std::invalid_argument);
  CHECK_THROWS_AS(build_layout(-3), std::invalid_argument);
}

#include "ccvec/compare.hpp"

#include <cmath>

#include "ccvec/errors.hpp"
#include "doctest.h"
#include "support/fd_check.hpp"

using namespace ccvec;

namespace {

ComparisonParams zeroed_params(ParamStore& store, int width, int slices) {
  Rng rng(1);
  ComparisonParams p = make_comparison_params(store, rng, "c.", width, slices);
  init_zero(*p.ntn_tensor);
  init_zero(*p.ntn_bias);
  init_zero(*p.ff_w);
  init_zero(*p.ff_b);
  return p;
}

}  // namespace

TEST_CASE("compare_ntn with zero parameters is the zero vector") {
  ParamStore store;
  ComparisonParams p = zeroed_params(store, 2, 3);
  Graph g;
  Val out = compare_ntn(g, p, g.constant({1.0, -1.0}), g.constant({0.5, 0.25}));
  CHECK(g.value(out) == std::vector<double>{0.0, 0.0, 0.0});
}

TEST_CASE("compare_ntn identity slice on aligned unit vectors") {
  ParamStore store;
  ComparisonParams p = zeroed_params(store, 2, 1);
  p.ntn_tensor->value = {1.0, 0.0, 0.0, 1.0};  // identity bilinear form
  Graph g;
  Val out = compare_ntn(g, p, g.constant({1.0, 0.0}), g.constant({1.0, 0.0}));
  CHECK(g.value(out) == std::vector<double>{1.0});
}

TEST_CASE("compare_ntn output length is the slice count") {
  ParamStore store;
  Rng rng(5);
  ComparisonParams p = make_comparison_params(store, rng, "c.", 4, 3);
  Graph g;
  Val out = compare_ntn(g, p, g.constant({0.1, 0.2, 0.3, 0.4}),
                        g.constant({-0.1, 0.5, 0.2, 0.0}));
  CHECK(g.width(out) == 3);
}

TEST_CASE("compare_ffnn examples") {
  SUBCASE("zero parameters give a zero vector") {
    ParamStore store;
    ComparisonParams p = zeroed_params(store, 2, 1);
    Graph g;
    Val out = compare_ffnn(g, p, g.constant({3.0, -1.0}), g.constant({2.0, 5.0}));
    CHECK(g.value(out) == std::vector<double>{0.0, 0.0});
  }
  SUBCASE("width-1 toy sums the concatenated inputs") {
    ParamStore store;
    ComparisonParams p = zeroed_params(store, 1, 1);
    p.ff_w->value = {1.0, 1.0};
    Graph g;
    // concatenation order is added then removed
    Val out = compare_ffnn(g, p, g.constant({3.0}), g.constant({2.0}));
    CHECK(g.value(out) == std::vector<double>{5.0});
  }
  SUBCASE("a strongly negative bias clamps to zero") {
    ParamStore store;
    ComparisonParams p = zeroed_params(store, 1, 1);
    p.ff_b->value = {-10.0};
    Graph g;
    Val out = compare_ffnn(g, p, g.constant({0.3}), g.constant({0.2}));
    CHECK(g.value(out) == std::vector<double>{0.0});
  }
}

TEST_CASE("compare_ffnn concatenation order is added first") {
  ParamStore store;
  ComparisonParams p = zeroed_params(store, 1, 1);
  p.ff_w->value = {1.0, 0.0};  // reads only the first concatenated slot
  Graph g;
  Val out = compare_ffnn(g, p, g.constant({7.0}), g.constant({2.0}));
  CHECK(g.value(out) == std::vector<double>{2.0});  // the added side
}

TEST_CASE("compare_similarity examples") {
  Graph g;
  SUBCASE("identical nonzero vectors") {
    Val out = compare_similarity(g, g.constant({1.0, 2.0}), g.constant({1.0, 2.0}));
    CHECK(g.value(out)[0] == doctest::Approx(0.0));
    CHECK(g.value(out)[1] == doctest::Approx(1.0));
  }
  SUBCASE("orthogonal unit vectors") {
    Val out = compare_similarity(g, g.constant({1.0, 0.0}), g.constant({0.0, 1.0}));
    CHECK(g.value(out)[0] == doctest::Approx(std::sqrt(2.0)));
    CHECK(g.value(out)[1] == doctest::Approx(0.0));
  }
  SUBCASE("zero added side uses the cosine convention") {
    Val out = compare_similarity(g, g.constant({3.0, 4.0}), g.constant({0.0, 0.0}));
    CHECK(g.value(out)[0] == doctest::Approx(5.0));
    CHECK(g.value(out)[1] == 0.0);
  }
}

TEST_CASE("compare_subtract and compare_multiply examples") {
  Graph g;
  CHECK(g.value(compare_subtract(g, g.constant({1.0, 2.0}), g.constant({0.5, 1.0}))) ==
        std::vector<double>{0.5, 1.0});
  CHECK(g.value(compare_subtract(g, g.constant({1.0, 2.0}), g.constant({1.0, 2.0}))) ==
        std::vector<double>{0.0, 0.0});
  CHECK(g.value(compare_multiply(g, g.constant({1.0, 2.0}), g.constant({3.0, 4.0}))) ==
        std::vector<double>{3.0, 8.0});
  CHECK(g.value(compare_multiply(g, g.constant({1.0, 2.0}), g.constant({0.0, 0.0}))) ==
        std::vector<double>{0.0, 0.0});
  CHECK(g.value(compare_multiply(g, g.constant({1.0, 2.0}), g.constant({1.0, 1.0}))) ==
        std::vector<double>{1.0, 2.0});
}

TEST_CASE("comparison algebraic properties hold on random vectors") {
  Rng rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> a(4), b(4);
    for (int i = 0; i < 4; ++i) {
      a[static_cast<size_t>(i)] = rng.uniform(-2.0, 2.0);
      b[static_cast<size_t>(i)] = rng.uniform(-2.0, 2.0);
    }
    Graph g;
    Val va = g.constant(a), vb = g.constant(b);
    // antisymmetry of subtraction
    const std::vector<double>& ab = g.value(compare_subtract(g, va, vb));
    const std::vector<double>& ba = g.value(compare_subtract(g, vb, va));
    for (size_t i = 0; i < 4; ++i) CHECK(ab[i] == doctest::Approx(-ba[i]));
    // symmetry of multiplication
    CHECK(g.value(compare_multiply(g, va, vb)) == g.value(compare_multiply(g, vb, va)));
    // self-comparison
    const std::vector<double>& self = g.value(compare_similarity(g, va, va));
    CHECK(self[0] == doctest::Approx(0.0));
    CHECK(self[1] == doctest::Approx(1.0));
  }
}

TEST_CASE("file_embedding widths across all masks") {
  int n = 4, z = 4;
  ParamStore store;
  Rng rng(85);
  ComparisonParams params = make_comparison_params(store, rng, "c.", n, z);

  SUBCASE("everything enabled: z + n + 2 + n + n") {
    ComparisonMask mask;
    CHECK(file_embedding_width(mask, n, z) == 18);
    Graph g;
    Val out = file_embedding(g, params, mask, g.constant({0.1, 0.2, 0.3, 0.4}),
                             g.constant({0.4, 0.3, 0.2, 0.1}));
    CHECK(g.width(out) == 18);
  }
  SUBCASE("similarity dropped") {
    ComparisonMask mask = mask_from_disabled("sim");
    CHECK(file_embedding_width(mask, n, z) == 16);
  }
  SUBCASE("bypass concatenates the sides") {
    ComparisonMask mask;
    mask.bypass = true;
    CHECK(file_embedding_width(mask, n, z) == 8);
    Graph g;
    Val out = file_embedding(g, params, mask, g.constant({1.0, 2.0, 3.0, 4.0}),
                             g.constant({5.0, 6.0, 7.0, 8.0}));
    CHECK(g.value(out) == std::vector<double>{1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0});
  }
  SUBCASE("every subset obeys the dimension formula") {
    for (int bits = 0; bits < 32; ++bits) {
      ComparisonMask mask;
      mask.ntn = bits & 1;
      mask.ffnn = bits & 2;
      mask.similarity = bits & 4;
      mask.subtract = bits & 8;
      mask.multiply = bits & 16;
      int expected = (mask.ntn ? z : 0) + (mask.ffnn ? n : 0) + (mask.similarity ? 2 : 0) +
                     (mask.subtract ? n : 0) + (mask.multiply ? n : 0);
      if (!mask.any_enabled()) {
        CHECK_THROWS_AS(file_embedding_width(mask, n, z), ConfigError);
        continue;
      }
      CHECK(file_embedding_width(mask, n, z) == expected);
      Graph g;
      Val out = file_embedding(g, params, mask, g.constant({0.1, -0.2, 0.3, 0.4}),
                               g.constant({0.2, 0.5, -0.1, 0.3}));
      CHECK(g.width(out) == static_cast<size_t>(expected));
    }
  }
}

TEST_CASE("mask flag grammar round-trips") {
  ComparisonMask mask = mask_from_disabled("nt, mul");
  CHECK(!mask.ntn);
  CHECK(mask.ffnn);
  CHECK(!mask.multiply);
  CHECK(mask_to_string(mask) == "nn,sim,sub");
  CHECK_THROWS_AS(mask_from_disabled("bogus"), ConfigError);
  CHECK(mask_to_string(ComparisonMask{}) == "nt,nn,sim,sub,mul");
}

TEST_CASE("comparison gradients match finite differences") {
  ParamStore store;
  Rng rng(91);
  ComparisonParams params = make_comparison_params(store, rng, "c.", 3, 2);
  ParamTensor& er = testsupport::filled(store, "er", {3}, {0.4, -0.6, 0.2});
  ParamTensor& ea = testsupport::filled(store, "ea", {3}, {-0.1, 0.5, 0.7});
  ComparisonMask mask;  // everything on

  std::vector<double> probe;
  {
    Rng pr(92);
    for (int i = 0; i < file_embedding_width(mask, 3, 2); ++i) {
      probe.push_back(pr.uniform(-1.0, 1.0));
    }
  }
  auto loss_of = [&]() {
    Graph g(false);
    Val out = file_embedding(g, params, mask, g.param(er), g.param(ea));
    return g.value(g.dot(out, g.constant(probe)))[0];
  };
  auto backward = [&]() {
    Graph g;
    Val out = file_embedding(g, params, mask, g.param(er), g.param(ea));
    g.backward(g.dot(out, g.constant(probe)));
  };
  testsupport::check_gradients(store, loss_of, backward, 1e-5);
}

TEST_CASE("comparison width mismatches raise shape errors") {
  ParamStore store;
  Rng rng(95);
  ComparisonParams params = make_comparison_params(store, rng, "c.", 4, 2);
  Graph g;
  Val narrow = g.constant({1.0, 2.0});
  Val wide = g.constant({1.0, 2.0, 3.0, 4.0});
  CHECK_THROWS_AS(compare_ntn(g, params, narrow, wide), ShapeError);
  CHECK_THROWS_AS(compare_ffnn(g, params, wide, narrow), ShapeError);
  CHECK_THROWS_AS(compare_subtract(g, narrow, wide), ShapeError);
}

#include <cmath>
#include <random>

#include "doctest.h"
#include "pathcal/control_core.hpp"

using namespace pathcal;

namespace {

ResolvedMarkers small_markers() {
  ResolvedMarkers m;
  m.continuation = {1, 2};
  m.revision = {{3, 1.0}, {4, 1.5}};
  m.alternative = {5};
  return m;
}

LogitRow random_row(std::mt19937_64& gen, std::size_t n) {
  std::uniform_real_distribution<double> d(-5.0, 5.0);
  LogitRow row(n);
  for (auto& v : row) v = d(gen);
  return row;
}

SessionState session_at(std::size_t count, std::vector<TokenId> end_tag = {}) {
  SessionState s(std::move(end_tag));
  for (std::size_t i = 0; i < count; ++i) s.observe(0);
  return s;
}

}  // namespace

TEST_CASE("gate hand values") {
  CHECK(competition_gate(0.1, 0.375, 1e-3) == doctest::Approx(0.15 / 0.226625).epsilon(1e-12));
  CHECK(competition_gate(0.0, 0.5, 1e-3) == 0.0);
  CHECK(competition_gate(0.5, 0.5, 1e-3) == doctest::Approx(1.0 / 1.001));
}

TEST_CASE("strength hand values") {
  PathCalConfig cfg;
  BranchScores s{0.1, 0.375, 0.0, 0.375};
  CHECK(intervention_strength(s, cfg) == doctest::Approx(6.0 * 0.15 / 0.226625));
  // gap term below saturation: b - c + gamma = 0.1, half of tau
  BranchScores t{0.3, 0.35, 0.0, 0.35};
  double g = competition_gate(0.3, 0.35, 1e-3);
  CHECK(intervention_strength(t, cfg) == doctest::Approx(6.0 * g * 0.5));
  // mass floor
  BranchScores tiny{0.02, 0.02, 0.0, 0.02};
  CHECK(intervention_strength(tiny, cfg) == 0.0);
  // continuation dominates
  BranchScores cont{0.6, 0.1, 0.0, 0.1};
  CHECK(intervention_strength(cont, cfg) == 0.0);
}

TEST_CASE("branch scores weight revision and alternative") {
  std::vector<double> p = {0.1, 0.1, 0.1, 0.2, 0.2, 0.1, 0.2};
  auto s = compute_branch_scores(p, small_markers(), 1.5);
  CHECK(s.c == doctest::Approx(0.2));
  CHECK(s.r == doctest::Approx(0.2 + 1.5 * 0.2));
  CHECK(s.a == doctest::Approx(0.1));
  CHECK(s.b == doctest::Approx(0.5 + 0.15));
}

TEST_CASE("shift touches markers only, with category signs") {
  PathCalConfig cfg;
  LogitRow row(8, 0.25);
  auto out = apply_pathcal_shift(row, 2.0, small_markers(), cfg);
  CHECK(out[0] == 0.25);
  CHECK(out[1] == 0.25 + 1.0);
  CHECK(out[3] == 0.25 - 2.0);
  CHECK(out[4] == 0.25 - 3.0);
  CHECK(out[5] == 0.25 - 2.0);
  CHECK(out[6] == 0.25);
  CHECK(out[7] == 0.25);
}

TEST_CASE("property: gate and strength stay in range") {
  PathCalConfig cfg;
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  for (int i = 0; i < 20000; ++i) {
    double c = d(gen), r = d(gen), a = d(gen);
    double total = c + r + a;
    c /= total;
    r /= total;
    a /= total;
    BranchScores s{c, r, a, r + 1.5 * a};
    double g = competition_gate(s.c, s.b, cfg.eps);
    double alpha = intervention_strength(s, cfg);
    REQUIRE(g >= 0.0);
    REQUIRE(g < 1.0);
    REQUIRE(alpha >= 0.0);
    REQUIRE(alpha <= cfg.alpha_base);
  }
}

TEST_CASE("log odds move by the closed-form amount") {
  PathCalConfig cfg;
  std::mt19937_64 gen(11);
  auto m = small_markers();
  for (int i = 0; i < 50; ++i) {
    auto row = random_row(gen, 16);
    double alpha = 0.5 + i * 0.1;
    auto shifted = apply_pathcal_shift(row, alpha, m, cfg);
    for (auto [r, w] : m.revision) {
      CHECK(log_odds_delta(row, shifted, 1, r) ==
            doctest::Approx((cfg.beta_C + cfg.beta_R * w) * alpha).epsilon(1e-10));
    }
    CHECK(log_odds_delta(row, shifted, 2, 5) ==
          doctest::Approx((cfg.beta_C + cfg.beta_A) * alpha).epsilon(1e-10));
  }
}

TEST_CASE("session closes once on the full end tag") {
  SessionState s({7, 8});
  s.observe(7);
  CHECK_FALSE(s.think_closed());
  s.observe(9);
  s.observe(8);
  CHECK_FALSE(s.think_closed());
  s.observe(7);
  s.observe(8);
  CHECK(s.think_closed());
  s.observe(1);
  CHECK(s.think_closed());
  CHECK(s.generated_count() == 6);
  CHECK(s.suffix_buffer().size() == 2);

  SessionState never;
  for (int i = 0; i < 5; ++i) never.observe(7);
  CHECK_FALSE(never.think_closed());
  CHECK(observe_token(SessionState({3}), 3).think_closed());
}

TEST_CASE("step respects warmup and closure") {
  PathCalConfig cfg;
  ResolvedMarkers m = small_markers();
  LogitRow row = {0.0, 1.0, 0.2, 1.5, 1.4, 0.3, -1.0, -1.0};

  auto [early, t0] = pathcal_step(row, session_at(99), m, cfg);
  CHECK(early == row);
  CHECK_FALSE(t0.active);
  CHECK(t0.step == 99);

  auto [on, t1] = pathcal_step(row, session_at(100), m, cfg);
  CHECK(t1.active);
  CHECK(t1.alpha > 0.0);
  CHECK(on != row);
  CHECK(t1.shifts.size() == m.size());

  auto closed = session_at(150, {6});
  closed.observe(6);
  auto [after, t2] = pathcal_step(row, closed, m, cfg);
  CHECK(after == row);
  CHECK_FALSE(t2.active);
}

TEST_CASE("controller agrees with the functional step") {
  PathCalConfig cfg;
  cfg.minp = 0;
  PathCalController ctl(small_markers(), cfg);
  std::mt19937_64 gen(5);
  for (int i = 0; i < 20; ++i) {
    auto row = random_row(gen, 8);
    auto session = session_at(static_cast<std::size_t>(i));
    auto [expected, trace] = pathcal_step(row, session, ctl.markers(), cfg);
    auto got = row;
    auto t = ctl.apply(got, session);
    REQUIRE(t.has_value());
    CHECK(got == expected);
    CHECK(t->alpha == trace.alpha);
  }
}

TEST_CASE("zero alpha_base is the identity") {
  PathCalConfig cfg;
  cfg.alpha_base = 0.0;
  cfg.minp = 0;
  PathCalController ctl(small_markers(), cfg);
  std::mt19937_64 gen(9);
  auto row = random_row(gen, 8);
  auto copy = row;
  ctl.apply(copy, session_at(10));
  CHECK(copy == row);
}

TEST_CASE("trace json round trip") {
  StepTrace t;
  t.step = 123;
  t.scores = {0.1, 0.2, 0.05, 0.275};
  t.gate = 0.75;
  t.alpha = 2.5;
  t.active = true;
  t.shifts = {{1, 1.25}, {3, -2.5}};
  auto back = step_trace_from_json(to_jsonl(t));
  CHECK(back.step == 123);
  CHECK(back.scores.b == 0.275);
  CHECK(back.alpha == 2.5);
  CHECK(back.shifts == t.shifts);
  CHECK_THROWS_AS(step_trace_from_json("{\"step\":1}"), FormatError);
}

TEST_CASE("config validation") {
  PathCalConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.tau = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.eps = -1.0;
  CHECK_THROWS_AS(PathCalController(small_markers(), cfg), ConfigError);
}

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "corona/lifting.hpp"

namespace {

constexpr int kDim = 64;
constexpr int kWin = 32;

corona::ProjectionMatrix front_proj(int front) {
  std::vector<int> ones;
  for (int i = 0; i < front; ++i) ones.push_back(i);
  return corona::indicator_projection(kDim, kWin, ones, Eigen::VectorXd::Ones(kDim - kWin));
}

std::vector<double> linear_grid(double left, double right, int steps) {
  std::vector<double> g(steps);
  for (int j = 0; j < steps; ++j)
    g[j] = j == 0 ? left : j == steps - 1 ? right : left + (right - left) * j / (steps - 1);
  return g;
}

corona::ProjectionPath const_path(const corona::SubintervalInfo& sub, double left, double right,
                                  int front, int steps = 4) {
  std::vector<corona::ProjectionMatrix> ps(steps, front_proj(front));
  return corona::ProjectionPath(sub, linear_grid(left, right, steps), std::move(ps));
}

// One constant front per subinterval; grids follow the far-sample convention.
corona::LocalLifting front_lifting(const corona::BaseSpace& space,
                                   const std::vector<int>& fronts, int steps = 4) {
  auto subs = space.subintervals();
  std::vector<corona::ProjectionPath> paths;
  for (std::size_t i = 0; i < subs.size(); ++i) {
    double l = subs[i].left_infinite() ? corona::far_left_coordinate(space) : subs[i].left;
    double r = subs[i].right_infinite() ? corona::far_right_coordinate(space) : subs[i].right;
    paths.push_back(const_path(subs[i], l, r, fronts[i], steps));
  }
  return corona::LocalLifting(space, std::move(paths));
}

}  // namespace

TEST_CASE("far sample coordinates sit 10 past the outermost partition point") {
  corona::BaseSpace line(corona::SpaceKind::Line, {-1.0, 2.0});
  CHECK(corona::far_left_coordinate(line) == -11.0);
  CHECK(corona::far_right_coordinate(line) == 12.0);
  corona::BaseSpace bare(corona::SpaceKind::Line, {});
  CHECK(corona::far_left_coordinate(bare) == -10.0);
  CHECK(corona::far_right_coordinate(bare) == 10.0);
}

TEST_CASE("projection paths validate their grid and samples") {
  corona::BaseSpace itv(corona::SpaceKind::Interval, {0.5});
  auto sub = itv.subintervals()[0];

  CHECK_THROWS_AS(corona::ProjectionPath(sub, {}, {}), std::invalid_argument);
  CHECK_THROWS_AS(
      corona::ProjectionPath(sub, {0.0, 0.0}, {front_proj(5), front_proj(5)}),
      std::invalid_argument);

  SECTION("a jump inside one subinterval exceeds the gap bound") {
    CHECK_THROWS_WITH(
        corona::ProjectionPath(sub, {0.0, 0.5}, {front_proj(5), front_proj(6)}),
        Catch::Matchers::ContainsSubstring("gap exceeds 1/2"));
  }

  SECTION("homogeneity requires rank and corank at least 1") {
    std::vector<int> all;
    for (int i = 0; i < kWin; ++i) all.push_back(i);
    auto full = corona::indicator_projection(kDim, kWin, all, Eigen::VectorXd::Ones(kDim - kWin));
    CHECK_THROWS_WITH(corona::ProjectionPath(sub, {0.0}, {full}),
                      Catch::Matchers::ContainsSubstring("rank and corank"));
    auto zero = corona::indicator_projection(kDim, kWin, {}, Eigen::VectorXd::Ones(kDim - kWin));
    CHECK_THROWS_AS(corona::ProjectionPath(sub, {0.0}, {zero}), std::invalid_argument);
    CHECK_NOTHROW(corona::ProjectionPath(sub, {0.0}, {zero}, false));
  }
}

TEST_CASE("local liftings must sample partition points from both sides") {
  corona::BaseSpace itv(corona::SpaceKind::Interval, {0.5});
  auto subs = itv.subintervals();

  CHECK_NOTHROW(corona::LocalLifting(
      itv, {const_path(subs[0], 0.0, 0.5, 5), const_path(subs[1], 0.5, 1.0, 7)}));

  SECTION("wrong path count") {
    CHECK_THROWS_WITH(corona::LocalLifting(itv, {const_path(subs[0], 0.0, 1.0, 5)}),
                      Catch::Matchers::ContainsSubstring("one path per subinterval"));
  }
  SECTION("left path stops short of the partition point, error names it") {
    CHECK_THROWS_WITH(
        corona::LocalLifting(
            itv, {const_path(subs[0], 0.0, 0.49, 5), const_path(subs[1], 0.5, 1.0, 7)}),
        Catch::Matchers::ContainsSubstring("x=0.5"));
  }
  SECTION("interval grids must reach the endpoints") {
    CHECK_THROWS_WITH(
        corona::LocalLifting(
            itv, {const_path(subs[0], 0.1, 0.5, 5), const_path(subs[1], 0.5, 1.0, 7)}),
        Catch::Matchers::ContainsSubstring("endpoint"));
  }
  SECTION("infinite ends must carry the far sample") {
    corona::BaseSpace hl(corona::SpaceKind::HalfLine, {1.0});
    auto hs = hl.subintervals();
    CHECK_NOTHROW(corona::LocalLifting(
        hl, {const_path(hs[0], 0.0, 1.0, 5), const_path(hs[1], 1.0, 11.0, 5)}));
    CHECK_THROWS_WITH(
        corona::LocalLifting(
            hl, {const_path(hs[0], 0.0, 1.0, 5), const_path(hs[1], 1.0, 5.0, 5)}),
        Catch::Matchers::ContainsSubstring("far sample"));
  }
  SECTION("paths must share one tail pattern") {
    Eigen::VectorXd other = Eigen::VectorXd::Ones(kDim - kWin);
    other(3) = 0.0;
    std::vector<corona::ProjectionMatrix> ps(4, corona::indicator_projection(
                                                    kDim, kWin, {0, 1, 2, 3, 4}, other));
    corona::ProjectionPath odd(subs[1], linear_grid(0.5, 1.0, 4), std::move(ps));
    CHECK_THROWS_WITH(corona::LocalLifting(itv, {const_path(subs[0], 0.0, 0.5, 5), odd}),
                      Catch::Matchers::ContainsSubstring("window-supported"));
  }
}

TEST_CASE("same corona class ignores window-supported differences only") {
  corona::BaseSpace line(corona::SpaceKind::Line, {0.0});
  auto f = corona::as_section(front_lifting(line, {6, 6}));

  SECTION("identical sections agree") { CHECK(corona::same_corona_class(f, f)); }

  SECTION("perturbing a window entry away from the far sample is invisible") {
    auto g = f;
    g.paths[0].samples.back().entries(2, 3) += 0.25;  // at x = 0, the finite end
    g.paths[0].samples.back().entries(3, 2) += 0.25;
    CHECK(corona::same_corona_class(f, g));
    CHECK(corona::same_corona_class(g, f));
  }

  SECTION("a window difference at a far sample breaks the class") {
    auto g = f;
    g.paths[0].samples.front().entries(2, 3) += 0.25;  // at x = -10, the far sample
    CHECK_FALSE(corona::same_corona_class(f, g));
  }

  SECTION("any difference outside the window breaks the class") {
    auto g = f;
    g.paths[1].samples[1].policy = corona::TailPolicy::Declared;
    g.paths[1].samples[1].entries(kWin + 2, kWin + 5) = 1e-9;
    CHECK_FALSE(corona::same_corona_class(f, g));
  }

  SECTION("differing tails break the class") {
    auto g = f;
    for (auto& path : g.paths)
      for (auto& s : path.samples) {
        s.policy = corona::TailPolicy::Declared;
        s.tail(0) = 0.0;
        s.entries(kWin, kWin) = 0.0;
      }
    CHECK_FALSE(corona::same_corona_class(f, g));
  }

  SECTION("incompatible shapes are contract errors, not falsity") {
    auto g = f;
    g.paths[0].grid[1] += 1e-9;
    CHECK_THROWS_AS(corona::same_corona_class(f, g), std::invalid_argument);
  }
}

TEST_CASE("jump classes count front differences at partition points") {
  SECTION("constant lifting has zero jumps") {
    corona::BaseSpace itv(corona::SpaceKind::Interval, {0.3, 0.7});
    auto jd = corona::jump_classes(front_lifting(itv, {9, 9, 9}));
    REQUIRE(jd.jumps.size() == 2);
    CHECK(jd.jumps[0].is_zero());
    CHECK(jd.jumps[1].is_zero());
    CHECK_FALSE(jd.wrap.has_value());
  }

  SECTION("front steps measure as rank differences") {
    corona::BaseSpace itv(corona::SpaceKind::Interval, {0.3, 0.7});
    std::vector<int> fronts{9, 12, 10};
    auto jd = corona::jump_classes(front_lifting(itv, fronts));
    // oracle: the construction pins each window rank, so jumps count fronts
    for (int i = 1; i <= 2; ++i)
      CHECK(jd.jumps[i - 1].free_part()[0] == fronts[i] - fronts[i - 1]);
  }

  SECTION("circle wrap compares the base point from both sides") {
    corona::BaseSpace cir(corona::SpaceKind::Circle, {0.5});
    auto jd = corona::jump_classes(front_lifting(cir, {16, 14}));
    REQUIRE(jd.wrap.has_value());
    CHECK(jd.jumps[0].free_part()[0] == -2);
    CHECK(jd.wrap->free_part()[0] == 2);
  }
}

TEST_CASE("smoothing produces a continuous representative in the same class") {
  SECTION("already continuous input is returned unchanged") {
    corona::BaseSpace itv(corona::SpaceKind::Interval, {0.5});
    auto f = corona::as_section(front_lifting(itv, {8, 8}, 5));
    auto g = corona::smooth_representative(f);
    for (std::size_t i = 0; i < f.paths.size(); ++i)
      for (std::size_t j = 0; j < f.paths[i].samples.size(); ++j)
        CHECK(f.paths[i].samples[j].entries == g.paths[i].samples[j].entries);
  }

  SECTION("a single jump is spread continuously across the partition point") {
    corona::BaseSpace itv(corona::SpaceKind::Interval, {0.5});
    auto l = front_lifting(itv, {8, 9}, 9);
    auto f = corona::as_section(l);
    auto g = corona::smooth_representative(f);

    Eigen::MatrixXd left_end = g.paths[0].samples.back().entries;
    Eigen::MatrixXd right_start = g.paths[1].samples.front().entries;
    CHECK(corona::op_norm(left_end - right_start) <= 1e-10);

    // closed form: on [0, 1/2] the correction is +(x/0.5) J/2 with J the jump
    Eigen::MatrixXd jump =
        f.paths[1].samples.front().entries - f.paths[0].samples.back().entries;
    const double x = g.paths[0].grid[4];
    Eigen::MatrixXd expect = f.paths[0].samples[4].entries + (x / 0.5) * 0.5 * jump;
    CHECK(corona::op_norm(g.paths[0].samples[4].entries - expect) <= 1e-12);
    // and on [1/2, 1] it decays as (1-x)/0.5 toward the right endpoint
    const double y = g.paths[1].grid[4];
    Eigen::MatrixXd expect_r = f.paths[1].samples[4].entries - ((1.0 - y) / 0.5) * 0.5 * jump;
    CHECK(corona::op_norm(g.paths[1].samples[4].entries - expect_r) <= 1e-12);

    CHECK(corona::same_corona_class(f, g));

    SECTION("smoothing is idempotent") {
      auto h = corona::smooth_representative(g);
      for (std::size_t i = 0; i < g.paths.size(); ++i)
        for (std::size_t j = 0; j < g.paths[i].samples.size(); ++j)
          CHECK(corona::op_norm(h.paths[i].samples[j].entries -
                                g.paths[i].samples[j].entries) <= 1e-12);
    }
  }

  SECTION("corrections die off before reaching a far sample") {
    corona::BaseSpace hl(corona::SpaceKind::HalfLine, {1.0});
    auto f = corona::as_section(front_lifting(hl, {8, 10}, 12));
    auto g = corona::smooth_representative(f);
    CHECK(corona::op_norm(g.paths[0].samples.back().entries -
                          g.paths[1].samples.front().entries) <= 1e-10);
    // at the far sample x = 11 the tent anchored at x_{n+1} = 2 has run out
    CHECK(g.paths[1].samples.back().entries == f.paths[1].samples.back().entries);
    CHECK(corona::same_corona_class(f, g));
  }

  SECTION("the circle wrap jump is deliberately left in place") {
    corona::BaseSpace cir(corona::SpaceKind::Circle, {0.5});
    auto f = corona::as_section(front_lifting(cir, {16, 15}, 9));
    auto g = corona::smooth_representative(f);
    CHECK(corona::op_norm(g.paths[0].samples.back().entries -
                          g.paths[1].samples.front().entries) <= 1e-10);
    Eigen::MatrixXd wrap_gap =
        g.paths[0].samples.front().entries - g.paths[1].samples.back().entries;
    CHECK(corona::op_norm(wrap_gap) > 0.5);
  }
}

TEST_CASE("subprojection extraction transports a fixed-rank piece of the range") {
  corona::BaseSpace itv(corona::SpaceKind::Interval, {0.5});
  auto sub = itv.subintervals()[0];

  SECTION("rank zero gives the zero path") {
    auto r = corona::extract_subprojection(const_path(sub, 0.0, 0.5, 10, 5), 0);
    for (const auto& s : r.samples) CHECK(s.entries().norm() == 0.0);
  }

  SECTION("negative or oversized ranks are refused") {
    auto path = const_path(sub, 0.0, 0.5, 10, 5);
    CHECK_THROWS_WITH(corona::extract_subprojection(path, -1),
                      Catch::Matchers::ContainsSubstring("opposite side"));
    CHECK_THROWS_WITH(corona::extract_subprojection(path, 10),
                      Catch::Matchers::ContainsSubstring("too large"));
    CHECK_NOTHROW(corona::extract_subprojection(path, 9));
  }

  SECTION("extracted pieces stay inside the range with exact zero tails") {
    auto path = const_path(sub, 0.0, 0.5, 10, 6);
    auto r = corona::extract_subprojection(path, 3);
    REQUIRE(r.samples.size() == path.samples.size());
    for (std::size_t j = 0; j < r.samples.size(); ++j) {
      CHECK(r.samples[j].window_rank() == 3);
      CHECK(r.samples[j].tail().norm() == 0.0);
      CHECK(corona::op_norm(path.samples[j].entries() * r.samples[j].entries() -
                            r.samples[j].entries()) <= 1e-8);
    }
  }

  SECTION("transport follows a moving range") {
    // rotate the plane (9, 10) so the range genuinely moves along the path
    std::vector<corona::ProjectionMatrix> ps;
    std::vector<double> grid;
    const int steps = 9;
    for (int j = 0; j < steps; ++j) {
      double th = 0.4 * std::sin(M_PI * j / (steps - 1.0));
      Eigen::MatrixXd m = front_proj(10).entries();
      Eigen::MatrixXd rot = Eigen::MatrixXd::Identity(kDim, kDim);
      rot(9, 9) = std::cos(th);
      rot(9, 10) = -std::sin(th);
      rot(10, 9) = std::sin(th);
      rot(10, 10) = std::cos(th);
      m = rot * m * rot.transpose();
      for (int i = kWin; i < kDim; ++i)
        for (int c = kWin; c < kDim; ++c) m(i, c) = i == c ? 1.0 : 0.0;
      grid.push_back(0.5 * j / (steps - 1.0));
      ps.emplace_back(corona::TruncatedOperator(kDim, kWin, std::move(m),
                                                Eigen::VectorXd::Ones(kDim - kWin)),
                      1e-8, 1e-8);
    }
    corona::ProjectionPath path(sub, grid, std::move(ps));
    auto r = corona::extract_subprojection(path, 4);
    for (std::size_t j = 0; j < r.samples.size(); ++j) {
      CHECK(r.samples[j].window_rank() == 4);
      CHECK(corona::op_norm(path.samples[j].entries() * r.samples[j].entries() -
                            r.samples[j].entries()) <= 1e-8);
    }
    for (std::size_t j = 1; j < r.samples.size(); ++j)
      CHECK(corona::op_norm(r.samples[j].entries() - r.samples[j - 1].entries()) < 0.5);
  }
}

TEST_CASE("jump normalization shifts jumps to requested targets within the class") {
  auto targets = [](std::initializer_list<long long> ks,
                    std::optional<long long> wrap = std::nullopt) {
    return corona::JumpData::over_integers(std::vector<long long>(ks), wrap);
  };

  SECTION("matching targets change nothing") {
    corona::BaseSpace itv(corona::SpaceKind::Interval, {0.5});
    auto l = front_lifting(itv, {10, 12}, 5);
    auto r = corona::normalize_jumps(l, targets({2}));
    CHECK(corona::same_corona_class(corona::as_section(l), corona::as_section(r)));
    CHECK(r.paths[1].first().window_rank() == 12);
  }

  SECTION("killing a positive jump trims the later subinterval") {
    corona::BaseSpace itv(corona::SpaceKind::Interval, {0.5});
    auto l = front_lifting(itv, {10, 12}, 5);
    auto r = corona::normalize_jumps(l, targets({0}));
    auto jd = corona::jump_classes(r);
    CHECK(jd.jumps[0].is_zero());
    CHECK(r.paths[0].first().window_rank() == 10);
    CHECK(r.paths[1].first().window_rank() == 10);
    CHECK(corona::same_corona_class(corona::as_section(l), corona::as_section(r)));
  }

  SECTION("a negative correction must be realized on the other side") {
    corona::BaseSpace itv(corona::SpaceKind::Interval, {0.5});
    auto l = front_lifting(itv, {10, 12}, 5);
    CHECK_THROWS_WITH(corona::normalize_jumps(l, targets({3})),
                      Catch::Matchers::ContainsSubstring("opposite side"));
  }

  SECTION("corrections on infinite-ended subintervals violate decay") {
    corona::BaseSpace line(corona::SpaceKind::Line, {0.0, 1.0});
    auto bad = front_lifting(line, {10, 12, 11}, 5);
    // residual correction m_2 = 1 would sit on the right-infinite subinterval
    CHECK_THROWS_WITH(corona::normalize_jumps(bad, targets({0, 0})),
                      Catch::Matchers::ContainsSubstring("decay"));
    // balanced targets keep all corrections on the finite middle subinterval
    auto l = front_lifting(line, {10, 12, 10}, 5);
    auto r = corona::normalize_jumps(l, targets({0, 0}));
    auto jd = corona::jump_classes(r);
    CHECK(jd.jumps[0].is_zero());
    CHECK(jd.jumps[1].is_zero());
    CHECK(r.paths[1].first().window_rank() == 10);
    CHECK(corona::same_corona_class(corona::as_section(l), corona::as_section(r)));
  }

  SECTION("circle wrap targets must close up") {
    corona::BaseSpace cir(corona::SpaceKind::Circle, {0.5});
    auto l = front_lifting(cir, {16, 14}, 5);
    CHECK_THROWS_WITH(corona::normalize_jumps(l, targets({-3}, 2)),
                      Catch::Matchers::ContainsSubstring("close up"));
    auto r = corona::normalize_jumps(l, targets({-3}, 3));
    auto jd = corona::jump_classes(r);
    CHECK(jd.jumps[0].free_part()[0] == -3);
    CHECK(jd.wrap->free_part()[0] == 3);
  }

  SECTION("target shape mismatches are contract errors") {
    corona::BaseSpace itv(corona::SpaceKind::Interval, {0.5});
    auto l = front_lifting(itv, {10, 12}, 5);
    CHECK_THROWS_AS(corona::normalize_jumps(l, targets({0, 0})), std::invalid_argument);
    CHECK_THROWS_AS(corona::normalize_jumps(l, targets({2}, 0)), std::invalid_argument);
  }
}

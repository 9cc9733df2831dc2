#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "corona/catalog.hpp"
#include "corona/deform.hpp"

namespace {

constexpr int kDim = 64;
constexpr int kWin = 32;

corona::FamilySpec front_spec(std::vector<long long> fronts) {
  corona::FamilySpec s;
  s.family = "front";
  s.fronts = std::move(fronts);
  return s;
}

corona::LocalLifting front_lifting(const corona::BaseSpace& space,
                                   std::vector<long long> fronts) {
  return corona::instantiate(front_spec(std::move(fronts)), space).lifting;
}

corona::ProjectionMatrix slot_proj(std::vector<int> slots) {
  return corona::indicator_projection(kDim, kWin, slots, Eigen::VectorXd::Ones(kDim - kWin));
}

Eigen::MatrixXd plane_rotation(int r, int i, int j, double th) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(r, r);
  m(i, i) = std::cos(th);
  m(i, j) = -std::sin(th);
  m(j, i) = std::sin(th);
  m(j, j) = std::cos(th);
  return m;
}

}  // namespace

TEST_CASE("orthogonal geodesics interpolate special orthogonal defects") {
  SECTION("identity stays put") {
    corona::detail::OrthogonalGeodesic geo(Eigen::MatrixXd::Identity(4, 4));
    CHECK(corona::op_norm(geo.at(0.3) - Eigen::MatrixXd::Identity(4, 4)) <= 1e-12);
  }

  SECTION("a plane rotation unwinds linearly") {
    Eigen::MatrixXd g = plane_rotation(3, 0, 1, 1.2);
    corona::detail::OrthogonalGeodesic geo(g);
    CHECK(corona::op_norm(geo.at(0.0) - Eigen::MatrixXd::Identity(3, 3)) <= 1e-12);
    CHECK(corona::op_norm(geo.at(1.0) - g) <= 1e-12);
    CHECK(corona::op_norm(geo.at(0.5) - plane_rotation(3, 0, 1, 0.6)) <= 1e-12);
    for (double s : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      Eigen::MatrixXd r = geo.at(s);
      CHECK(corona::op_norm(r.transpose() * r - Eigen::MatrixXd::Identity(3, 3)) <= 1e-12);
    }
  }

  SECTION("paired reflections become half turns") {
    Eigen::MatrixXd g = Eigen::MatrixXd::Identity(3, 3);
    g(0, 0) = -1.0;
    g(2, 2) = -1.0;
    corona::detail::OrthogonalGeodesic geo(g);
    CHECK(corona::op_norm(geo.at(1.0) - g) <= 1e-10);
    Eigen::MatrixXd mid = geo.at(0.5);
    CHECK(corona::op_norm(mid.transpose() * mid - Eigen::MatrixXd::Identity(3, 3)) <= 1e-10);
  }

  SECTION("near-orthogonal input is polished first") {
    Eigen::MatrixXd g = 1.02 * plane_rotation(2, 0, 1, 0.8);
    corona::detail::OrthogonalGeodesic geo(g);
    CHECK(corona::op_norm(geo.at(1.0) - plane_rotation(2, 0, 1, 0.8)) <= 1e-10);
  }

  SECTION("determinant -1 is rejected") {
    Eigen::MatrixXd g = Eigen::MatrixXd::Identity(2, 2);
    g(0, 0) = -1.0;
    CHECK_THROWS_AS(corona::detail::OrthogonalGeodesic(g), std::logic_error);
  }

  SECTION("steps along the geodesic are small") {
    Eigen::MatrixXd g = plane_rotation(4, 1, 3, 2.5);
    corona::detail::OrthogonalGeodesic geo(g);
    const int m = 10;
    for (int j = 1; j <= m; ++j)
      CHECK(corona::op_norm(geo.at(double(j) / m) - geo.at(double(j - 1) / m)) <= 2.5 / m + 1e-9);
  }
}

TEST_CASE("completed connectors are exact partial isometries even across rank growth") {
  auto p10 = slot_proj({0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
  auto q10 = slot_proj({2, 3, 4, 5, 6, 7, 8, 9, 10, 11});
  auto id = corona::TruncatedOperator::identity(kDim, kWin);

  SECTION("identity connector between equal projections is the projection") {
    auto v = corona::detail::completed_connector(id, p10, p10);
    CHECK(corona::op_norm(v.entries - p10.entries()) <= 1e-12);
  }

  SECTION("shifted ranges still get an exact isometry") {
    auto v = corona::detail::completed_connector(id, p10, q10);
    CHECK(corona::op_norm(v.entries.transpose() * v.entries - p10.entries()) <= 1e-12);
    CHECK(corona::op_norm(v.entries * v.entries.transpose() - q10.entries()) <= 1e-12);
  }

  SECTION("a rank-deficient connector is completed, not refused") {
    // the old isometry only covers 8 of the 10 slots; polar alone would fail
    auto p8 = slot_proj({0, 1, 2, 3, 4, 5, 6, 7});
    auto v = corona::detail::completed_connector(p8.op, p10, p10);
    CHECK(corona::op_norm(v.entries.transpose() * v.entries - p10.entries()) <= 1e-12);
    CHECK(corona::op_norm(v.entries * v.entries.transpose() - p10.entries()) <= 1e-12);
    // on the supported slots it acts as the polar factor, the identity
    Eigen::MatrixXd diff = (v.entries - p10.entries()) * p8.entries();
    CHECK(corona::op_norm(diff) <= 1e-12);
  }

  SECTION("window rank mismatch is a logic error checked upstream") {
    auto p11 = slot_proj({0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
    CHECK_THROWS_AS(corona::detail::completed_connector(id, p10, p11), std::logic_error);
  }
}

TEST_CASE("path trivialization conjugates the first sample onto the whole path") {
  corona::BaseSpace itv(corona::SpaceKind::Interval, {});
  auto sub = itv.subintervals()[0];

  SECTION("constant paths get constant unitaries") {
    std::vector<corona::ProjectionMatrix> ps(5, slot_proj({0, 1, 2}));
    corona::ProjectionPath path(sub, {0.0, 0.25, 0.5, 0.75, 1.0}, std::move(ps));
    auto us = corona::trivialize_path(path);
    REQUIRE(us.size() == 5);
    CHECK(us[0].entries == Eigen::MatrixXd::Identity(kDim, kDim));
    for (const auto& u : us)
      CHECK(corona::op_norm(u.entries - Eigen::MatrixXd::Identity(kDim, kDim)) <= 1e-8);
  }

  SECTION("rotating paths are trivialized within tolerance") {
    std::vector<corona::ProjectionMatrix> ps;
    std::vector<double> grid;
    const int steps = 9;
    for (int j = 0; j < steps; ++j) {
      double th = 1.1 * j / (steps - 1.0);
      Eigen::MatrixXd rot = Eigen::MatrixXd::Identity(kDim, kDim);
      rot.topLeftCorner(kWin, kWin) = plane_rotation(kWin, 4, 5, th);
      Eigen::MatrixXd m = rot * slot_proj({0, 1, 2, 3, 4}).entries() * rot.transpose();
      for (int r = kWin; r < kDim; ++r)
        for (int c = kWin; c < kDim; ++c) m(r, c) = r == c ? 1.0 : 0.0;
      grid.push_back(double(j) / (steps - 1));
      ps.emplace_back(corona::TruncatedOperator(kDim, kWin, std::move(m),
                                                Eigen::VectorXd::Ones(kDim - kWin)),
                      1e-8, 1e-8);
    }
    corona::ProjectionPath path(sub, grid, ps);
    auto us = corona::trivialize_path(path);
    for (std::size_t j = 0; j < us.size(); ++j)
      CHECK(corona::op_norm(us[j].entries * ps[0].entries() * us[j].entries.transpose() -
                            ps[j].entries()) <= 1e-6);
  }
}

TEST_CASE("witnesses for identical liftings reproduce the projections themselves") {
  corona::BaseSpace itv(corona::SpaceKind::Interval, {0.5});
  auto l = front_lifting(itv, {10, 12});
  auto u = corona::build_mvn_witness(l, l);

  CHECK(u.report.max_domain_residual <= 1e-8);
  CHECK(u.report.max_codomain_residual <= 1e-8);
  REQUIRE(u.report.partition_mismatch.size() == 1);
  for (int i = 0; i <= 1; ++i)
    for (std::size_t j = 0; j < u.segments[i].samples.size(); ++j)
      CHECK(corona::op_norm(u.segments[i].samples[j].entries -
                            l.paths[i].samples[j].entries()) <= 1e-8);

  auto t = corona::index_data(u, l, l);
  CHECK(t == std::vector<long long>{0, 0});
}

TEST_CASE("witnesses connect rotation-decorated partners with tiny residuals") {
  corona::BaseSpace itv(corona::SpaceKind::Interval, {0.5});
  auto lp = front_lifting(itv, {10, 12});
  corona::FamilySpec comp;
  comp.family = "composite";
  comp.fronts = {10, 12};
  comp.amplitudes = {0.6, 0.4};
  auto lq = corona::instantiate(comp, itv).lifting;

  auto u = corona::build_mvn_witness(lp, lq);
  CHECK(u.report.max_domain_residual <= 1e-6);
  CHECK(u.report.max_codomain_residual <= 1e-6);

  SECTION("partition mismatches are window-supported exactly") {
    const auto& a = u.segments[1].samples.front();
    const auto& c = u.segments[0].samples.back();
    CHECK(a.tail == c.tail);
    for (int r = 0; r < kDim; ++r)
      for (int col = 0; col < kDim; ++col) {
        if (r < kWin && col < kWin) continue;
        CHECK(a.entries(r, col) == c.entries(r, col));
      }
  }

  SECTION("the measured index data vanishes for equal jump data") {
    auto t = corona::index_data(u, lp, lq);
    CHECK(t == std::vector<long long>{0, 0});
  }

  SECTION("segments are continuous between consecutive samples") {
    for (const auto& seg : u.segments)
      for (std::size_t j = 1; j < seg.samples.size(); ++j)
        CHECK(corona::op_norm(seg.samples[j].entries - seg.samples[j - 1].entries) < 1.0);
  }
}

TEST_CASE("witness construction reports genuine obstructions") {
  corona::BaseSpace itv(corona::SpaceKind::Interval, {0.5});

  SECTION("jump data mismatch names the partition point") {
    auto lp = front_lifting(itv, {10, 12});
    auto lq = front_lifting(itv, {10, 11});
    CHECK_THROWS_WITH(corona::build_mvn_witness(lp, lq),
                      Catch::Matchers::ContainsSubstring("x=0.5") &&
                          Catch::Matchers::ContainsSubstring("jump classes differ"));
  }

  SECTION("equal jumps but shifted ranks cannot pair at this truncation") {
    auto lp = front_lifting(itv, {10, 12});
    auto lq = front_lifting(itv, {9, 11});
    CHECK_THROWS_WITH(corona::build_mvn_witness(lp, lq),
                      Catch::Matchers::ContainsSubstring("window ranks differ"));
  }

  SECTION("incompatible shapes are contract errors") {
    auto lp = front_lifting(itv, {10, 12});
    corona::BaseSpace other(corona::SpaceKind::Interval, {0.25});
    CHECK_THROWS_AS(corona::build_mvn_witness(lp, front_lifting(other, {10, 12})),
                    std::invalid_argument);
    auto spec = front_spec({10, 12});
    spec.samples_per_subinterval = 12;
    CHECK_THROWS_AS(corona::build_mvn_witness(lp, corona::instantiate(spec, itv).lifting),
                    std::invalid_argument);
  }
}

TEST_CASE("the deformation pipeline realizes classify certificates as operators") {
  SECTION("interval pair with a positive witness entry") {
    corona::BaseSpace itv(corona::SpaceKind::Interval, {0.5});
    auto out = corona::deform_pipeline(front_lifting(itv, {10, 12}),
                                       front_lifting(itv, {10, 10}));
    REQUIRE(out.certificate.verdict == corona::Verdict::Equivalent);
    REQUIRE(out.witness.has_value());
    CHECK(out.measured_t == std::vector<long long>{0, 2});
    CHECK(out.common_targets == std::vector<long long>{0});
    CHECK(out.witness->report.max_domain_residual <= 1e-6);
    CHECK(out.witness->report.max_codomain_residual <= 1e-6);
  }

  SECTION("interval pairs with unequal initial ranks re-anchor the witness") {
    corona::BaseSpace itv(corona::SpaceKind::Interval, {0.5});
    auto out = corona::deform_pipeline(front_lifting(itv, {12, 13}),
                                       front_lifting(itv, {9, 10}));
    REQUIRE(out.certificate.verdict == corona::Verdict::Equivalent);
    REQUIRE(out.witness.has_value());
    // equal jumps, but the only realizable telescoping solution is t = (3, 3)
    CHECK(out.measured_t == std::vector<long long>{3, 3});
    REQUIRE(out.certificate.witness_t.has_value());
    CHECK((*out.certificate.witness_t)[0].free_part()[0] == 3);
    CHECK((*out.certificate.witness_t)[1].free_part()[0] == 3);
    CHECK(out.witness->report.max_domain_residual <= 1e-6);

    auto mixed = corona::deform_pipeline(front_lifting(itv, {10, 14}),
                                         front_lifting(itv, {13, 12}));
    REQUIRE(mixed.certificate.verdict == corona::Verdict::Equivalent);
    CHECK(mixed.measured_t == std::vector<long long>{-3, 2});
    CHECK(mixed.common_targets == std::vector<long long>{2});
  }

  SECTION("line pair with a negative witness entry in the middle") {
    corona::BaseSpace line(corona::SpaceKind::Line, {0.0, 1.0});
    auto out = corona::deform_pipeline(front_lifting(line, {10, 9, 10}),
                                       front_lifting(line, {10, 12, 10}));
    REQUIRE(out.certificate.verdict == corona::Verdict::Equivalent);
    CHECK(out.measured_t == std::vector<long long>{0, -3, 0});
  }

  SECTION("half line pairs may need a correction on the very first subinterval") {
    corona::BaseSpace hl(corona::SpaceKind::HalfLine, {1.0});
    auto out = corona::deform_pipeline(front_lifting(hl, {10, 12}),
                                       front_lifting(hl, {11, 12}));
    REQUIRE(out.certificate.verdict == corona::Verdict::Equivalent);
    CHECK(out.measured_t == std::vector<long long>{-1, 0});
  }

  SECTION("circle pair exercises the wrap reconnection") {
    corona::BaseSpace cir(corona::SpaceKind::Circle, {0.25, 0.5, 0.75});
    corona::FamilySpec w;
    w.family = "winding";
    w.winding = 3;
    auto lp = corona::instantiate(w, cir).lifting;  // fronts 16, 15, 14, 13
    auto lq = front_lifting(cir, {16, 14, 14, 13});
    auto out = corona::deform_pipeline(lp, lq);
    REQUIRE(out.certificate.verdict == corona::Verdict::Equivalent);
    CHECK(out.measured_t == std::vector<long long>{0, 1, 0, 0});
    REQUIRE(out.witness->report.wrap_mismatch.has_value());
  }

  SECTION("refuted pairs come back without a witness") {
    corona::BaseSpace line(corona::SpaceKind::Line, {0.0, 1.0});
    auto out = corona::deform_pipeline(front_lifting(line, {10, 12, 10}),
                                       front_lifting(line, {10, 11, 11}));
    CHECK(out.certificate.verdict == corona::Verdict::NotEquivalent);
    REQUIRE(out.certificate.refutation.has_value());
    CHECK_FALSE(out.certificate.refutation->empty());
    CHECK_FALSE(out.witness.has_value());
    CHECK(out.measured_t.empty());
  }

  SECTION("single-subinterval spaces work without any partition point") {
    corona::BaseSpace itv(corona::SpaceKind::Interval, {});
    auto out = corona::deform_pipeline(front_lifting(itv, {10}), front_lifting(itv, {10}));
    REQUIRE(out.certificate.verdict == corona::Verdict::Equivalent);
    CHECK(out.measured_t == std::vector<long long>{0});
  }
}

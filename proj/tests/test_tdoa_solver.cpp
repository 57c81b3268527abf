#include "doctest.h"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <random>

#include "auvloc/error.hpp"
#include "auvloc/random.hpp"
#include "auvloc/tdoa_solver.hpp"
#include "fixtures.hpp"

using namespace auvloc;

namespace {

TdoaObservation clean(const Vec3& p, const BuoyArray& b, const AcousticConfig& cfg = {}) {
  // Independent of make_observation: direct geometric range differences.
  TdoaObservation obs;
  const double r0 = (p - b.reference).norm();
  for (const auto& s : b.auxiliaries) obs.deltas.push_back(((p - s).norm() - r0) / cfg.sound_speed_mps);
  return obs;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected auvloc::Error");
  return ErrorCode::IoError;
}

BuoyArray six_aux() {
  BuoyArray b = fixtures::reference_buoys();
  b.auxiliaries.push_back({300, -400, -200});
  b.auxiliaries.push_back({-1200, 100, -50});
  return b;
}

}  // namespace

TEST_CASE("build_chan_system rows") {
  BuoyArray b;
  b.reference = Vec3::Zero();
  b.auxiliaries = {{1, 0, 0}, {0, 2, 0}, {0, 0, 3}, {1, 1, 1}};
  TdoaObservation obs;
  obs.deltas = {0, 0, 0, 0};
  const auto sys = build_chan_system(obs, b, AcousticConfig{});
  CHECK(sys.a_mat.row(0) == Eigen::RowVector3d(1, 0, 0));
  CHECK(sys.d_vec(0) == doctest::Approx(0.5));
  CHECK(sys.c_vec.isZero());
  CHECK(sys.d_vec(1) == doctest::Approx(2.0));
  CHECK(sys.d_vec(2) == doctest::Approx(4.5));
  CHECK(sys.d_vec(3) == doctest::Approx(1.5));

  obs.deltas = {1e-3, -2e-3, 0, 0};
  const auto sys2 = build_chan_system(obs, b, AcousticConfig{});
  CHECK(sys2.c_vec(0) == doctest::Approx(-1.5));
  CHECK(sys2.c_vec(1) == doctest::Approx(3.0));
  CHECK(sys2.d_vec(0) == doctest::Approx(0.5 * (1.0 - 1.5 * 1.5)));
}

TEST_CASE("build_chan_system geometry errors") {
  BuoyArray coplanar;
  coplanar.reference = Vec3::Zero();
  coplanar.auxiliaries = {{1, 0, 0}, {0, 1, 0}, {1, 1, 0}, {2, 3, 0}};
  TdoaObservation obs;
  obs.deltas = {0, 0, 0, 0};
  CHECK(code_of([&] { build_chan_system(obs, coplanar, {}); }) == ErrorCode::RankDeficient);

  BuoyArray three;
  three.reference = Vec3::Zero();
  three.auxiliaries = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  obs.deltas = {0, 0, 0};
  CHECK(code_of([&] { build_chan_system(obs, three, {}); }) == ErrorCode::PreconditionViolated);

  obs.deltas = {0, 0};
  CHECK(code_of([&] { build_chan_system(obs, three, {}); }) == ErrorCode::PreconditionViolated);
}

TEST_CASE("Chan round trip at a single point") {
  const auto b = fixtures::reference_buoys();
  const Vec3 p(-100, -100, -50);
  const auto fix = solve_chan(clean(p, b), b, {});
  CHECK((fix.position - p).norm() < 1e-6);
  CHECK(fix.r0 == doctest::Approx((p - b.reference).norm()).epsilon(1e-9));
  CHECK(fix.residual_rms < 1e-9);
  CHECK(fix.method == FixMethod::Chan);
}

TEST_CASE("Chan round trip over the 10x10x10 grid") {
  const auto b = fixtures::reference_buoys();
  double worst = 0.0;
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j)
      for (int k = 0; k < 10; ++k) {
        const Vec3 p(-100 + 60.0 * i, -100 + 60.0 * j, -50 - 30.0 * k);
        const auto fix = solve_chan(clean(p, b), b, {});
        worst = std::max(worst, (fix.position - p).norm());
      }
  CHECK(worst < 1e-6);
}

TEST_CASE("Chan at the reference buoy gives r0 = 0") {
  const auto b = fixtures::reference_buoys();
  const auto fix = solve_chan(clean(b.reference, b), b, {});
  CHECK(fix.r0 < 1e-6);
  CHECK((fix.position - b.reference).norm() < 1e-6);
}

TEST_CASE("Chan quadratic: the true range is a root only with the -1 in the leading term") {
  const auto b = fixtures::reference_buoys();
  const Vec3 p(-100, -100, -50);
  const auto sys = build_chan_system(clean(p, b), b, {});
  const Matrix pinv = pseudoinverse(sys.a_mat);
  const Vec3 a = pinv * sys.c_vec;
  const Vec3 bb = pinv * sys.d_vec;
  const double r0 = (p - b.reference).norm();

  const auto q = chan_quadratic(a, bb, b.reference);
  CHECK(q.qa == doctest::Approx(a.squaredNorm() - 1.0));
  const double scale = std::abs(q.qc) + std::abs(q.qb * r0) + std::abs(q.qa * r0 * r0);
  CHECK(std::abs(q.qa * r0 * r0 + q.qb * r0 + q.qc) < 1e-9 * scale);

  // Leading coefficient |a|^2 alone: the true range is no longer a root and at
  // this point the discriminant goes negative.
  const double qa_plain = a.squaredNorm();
  CHECK(std::abs(qa_plain * r0 * r0 + q.qb * r0 + q.qc) > 1e-3 * scale);
  CHECK(q.qb * q.qb - 4.0 * qa_plain * q.qc < 0.0);
}

TEST_CASE("Chan round trip on random non-degenerate geometries") {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(-1000.0, 1000.0);
  auto draw = [&] { return Vec3(u(gen), u(gen), u(gen)); };
  int tested = 0;
  double worst = 0.0;
  while (tested < 2000) {
    BuoyArray b;
    b.reference = draw();
    b.auxiliaries = {draw(), draw(), draw(), draw()};
    Matrix a(4, 3);
    for (int i = 0; i < 4; ++i) a.row(i) = (b.auxiliaries[i] - b.reference).transpose();
    Eigen::JacobiSVD<Matrix> svd(a);
    if (svd.singularValues()(2) < 0.05 * svd.singularValues()(0)) continue;
    const Vec3 p = draw();
    const auto fix = solve_chan(clean(p, b), b, {});
    worst = std::max(worst, (fix.position - p).norm());
    ++tested;
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("Chan is translation equivariant") {
  const auto b = fixtures::reference_buoys();
  const Vec3 offset(1234.5, -987.25, 321.0);
  BuoyArray moved = b;
  moved.reference += offset;
  for (auto& s : moved.auxiliaries) s += offset;
  for (const Vec3 p : {Vec3(-100, -100, -50), Vec3(380, -40, -290), Vec3(-700, -600, -10)}) {
    const auto f1 = solve_chan(clean(p, b), b, {});
    const auto f2 = solve_chan(clean(p + offset, moved), moved, {});
    CHECK((f2.position - (f1.position + offset)).norm() < 1e-6);
  }
}

TEST_CASE("Chan prefer_near picks the closer admissible root") {
  const auto b = fixtures::reference_buoys();
  const Vec3 p(-100, -100, -50);
  const auto near = solve_chan(clean(p, b), b, {}, p + Vec3(5, 5, 5));
  CHECK((near.position - p).norm() < 1e-6);
}

TEST_CASE("Chan error shrinks with timing noise") {
  const auto b = fixtures::reference_buoys();
  const Vec3 p(-100, -100, -50);
  std::vector<double> medians;
  for (double sigma : {1e-5, 1e-6, 1e-7}) {
    AcousticConfig cfg;
    cfg.timing_noise_std_s = sigma;
    Rng rng = make_stream(11, 0);
    std::vector<double> err;
    for (int s = 0; s < 201; ++s) {
      const auto obs = make_observation(p, b, cfg, rng);
      const auto fix = solve_chan(obs, b, cfg);
      err.push_back((fix.position - p).norm());
      CHECK(fix.residual_rms < 10.0 * cfg.range_noise_std_m() + 1e-9);
    }
    std::nth_element(err.begin(), err.begin() + 100, err.end());
    medians.push_back(err[100]);
  }
  CHECK(medians[0] > medians[1]);
  CHECK(medians[1] > medians[2]);
}

TEST_CASE("linearized step") {
  const auto b = fixtures::reference_buoys();
  const Vec3 p(-100, -100, -50);
  const auto obs = clean(p, b);

  const auto at_truth = solve_linearized(obs, b, {}, p);
  CHECK((at_truth.position - p).norm() < 1e-9);
  CHECK(at_truth.method == FixMethod::Linearized);

  for (const Vec3 dir : {Vec3(1, 0, 0), Vec3(0, -1, 0), Vec3(0, 0, 1), Vec3(1, 1, 1).normalized()}) {
    const auto step = solve_linearized(obs, b, {}, p + 10.0 * dir);
    CHECK((step.position - p).norm() < 10.0);
  }

  CHECK(code_of([&] { solve_linearized(obs, b, {}, b.auxiliaries[2]); }) ==
        ErrorCode::SingularGradient);
  CHECK(code_of([&] { solve_linearized(obs, b, {}, b.reference); }) ==
        ErrorCode::SingularGradient);
}

TEST_CASE("overdetermined solve") {
  const auto b = six_aux();
  const Vec3 p(-150, -420, -210);
  const auto fix = solve_overdetermined(clean(p, b), b, {});
  CHECK((fix.position - p).norm() < 1e-6);
  CHECK(fix.method == FixMethod::OverdeterminedLS);

  BuoyArray five = fixtures::reference_buoys();
  five.auxiliaries.push_back({300, -400, -200});
  BuoyArray dup = five;
  dup.auxiliaries.push_back(five.auxiliaries[1]);
  const auto f5 = solve_overdetermined(clean(p, five), five, {});
  const auto f6 = solve_overdetermined(clean(p, dup), dup, {});
  CHECK((f5.position - f6.position).norm() < 1e-6);

  const auto four = fixtures::reference_buoys();
  CHECK(code_of([&] { solve_overdetermined(clean(p, four), four, {}); }) ==
        ErrorCode::PreconditionViolated);
}

TEST_CASE("solver dispatch") {
  const auto b4 = fixtures::reference_buoys();
  const auto b6 = six_aux();
  const Vec3 p(-100, -100, -50);

  CHECK(solve_primary(clean(p, b4), b4, {}).method == FixMethod::Chan);
  CHECK(solve_primary(clean(p, b6), b6, {}).method == FixMethod::OverdeterminedLS);
  SolverOptions first_four;
  first_four.use_all_buoys = false;
  const auto f = solve_primary(clean(p, b6), b6, {}, first_four);
  CHECK(f.method == FixMethod::Chan);
  CHECK((f.position - p).norm() < 1e-6);

  SolverOptions lin_first;
  lin_first.mode = SolverMode::LinearizedThenChan;
  const auto g = solve_primary(clean(p, b4), b4, {}, lin_first);
  CHECK(g.method == FixMethod::Chan);
  CHECK((g.position - p).norm() < 1e-6);

  const auto h = estimate_position(clean(p, b4), b4, {});
  REQUIRE(h.has_value());
  CHECK((h->position - p).norm() < 1e-6);
}

TEST_CASE("pipeline falls back to the linearized solver when Chan fails") {
  const auto b = fixtures::reference_buoys();
  AcousticConfig cfg;
  cfg.timing_noise_std_s = 0.2;  // grossly inconsistent deltas
  Rng rng = make_stream(5, 0);
  int chan_failures = 0, fallbacks = 0;
  for (int s = 0; s < 500; ++s) {
    const auto obs = make_observation({-100, -100, -50}, b, cfg, rng);
    bool chan_ok = true;
    try {
      solve_primary(obs, b, cfg);
    } catch (const Error& e) {
      chan_ok = false;
      CHECK((e.code() == ErrorCode::NoRealRoot || e.code() == ErrorCode::NoPositiveRoot));
    }
    const auto fix = estimate_position(obs, b, cfg);
    if (chan_ok) {
      REQUIRE(fix.has_value());
      CHECK(fix->method == FixMethod::Chan);
    } else {
      ++chan_failures;
      if (fix) {
        CHECK(fix->method == FixMethod::Linearized);
        ++fallbacks;
      }
    }
  }
  CHECK(chan_failures > 0);
  CHECK(fallbacks > 0);
}

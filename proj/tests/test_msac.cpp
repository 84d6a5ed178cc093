#include <doctest.h>

#include <random>
#include <set>

#include "planex/msac.hpp"
#include "support.hpp"

using namespace planex;
using namespace planex::testing;

namespace {

MsacConfig config_with(double a, double b, std::uint64_t seed, int iterations = 200) {
  MsacConfig c;
  c.inlier_distance = a;
  c.stop_fraction = b;
  c.rng_seed = seed;
  c.iterations_per_plane = iterations;
  return c;
}

std::vector<int> three_regions(int w, int h) {
  std::vector<int> a(static_cast<std::size_t>(w) * h);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) a[static_cast<std::size_t>(r) * w + c] = r >= h - 4 ? 2 : (c < w / 2 ? 0 : 1);
  }
  return a;
}

const std::vector<PlaneEq> kPlanes{{Vec3(-1, 0.5, 0).normalized(), -2.0},
                                   {Vec3(-1, -0.5, 0).normalized(), -2.0},
                                   {Vec3(0, 0, 1), -0.5}};

}  // namespace

TEST_CASE("msac_score equals the per-point truncated sum") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Vec3> pts;
  for (int i = 0; i < 200; ++i) pts.push_back({u(rng), u(rng), 0.1 * u(rng)});
  for (int trial = 0; trial < 20; ++trial) {
    const Vec3 n = Vec3(u(rng), u(rng), u(rng)).normalized();
    const double c = 0.2 * u(rng);
    const double a = 0.05 + 0.1 * std::abs(u(rng));
    double oracle = 0.0;
    for (const Vec3& p : pts) {
      const double d = n.dot(p) - c;
      oracle += std::min(d * d, a * a);
    }
    CHECK(msac_score(pts, n, c, a) == doctest::Approx(oracle).epsilon(1e-12));
  }
}

TEST_CASE("noise-free single plane gives one plane covering every point") {
  const int w = 12, h = 10;
  const OrganizedScan scan = assigned_scan(w, h, 0.05, {kPlanes[0]},
                                           std::vector<int>(static_cast<std::size_t>(w) * h, 0), 0.0, 0);
  const Segmentation seg = msac_extract(scan, config_with(0.01, 0.05, 1));
  REQUIRE(seg.planes.size() == 1);
  for (const Label l : seg.labels) CHECK(l == 1);
  const PlaneRecord& rec = seg.planes.at(1);
  CHECK(rec.has_geometry);
  CHECK(std::abs(std::abs(rec.normal.dot(kPlanes[0].normal)) - 1.0) < 1e-9);
  CHECK(rec.normal.dot(scan.ray(0).direction) < 0.0);  // faces the sensor
  CHECK_NOTHROW(seg.validate());
}

TEST_CASE("three noisy planes") {
  const int w = 20, h = 12;
  const OrganizedScan scan = assigned_scan(w, h, 0.05, kPlanes, three_regions(w, h), 0.005, 3);
  const MsacConfig config = config_with(0.02, 0.05, 7);
  const MsacResult r = msac_extract_detailed(scan, config);

  SUBCASE("planes are found and inlier sets are disjoint") {
    CHECK(r.segmentation.planes.size() >= 3);
    CHECK(r.total == scan.valid_count());
    std::size_t labeled = 0;
    for (const Label l : r.segmentation.labels) labeled += l != 0;
    CHECK(labeled + r.remaining == r.total);
    std::size_t inliers = 0;
    for (const MsacRound& round : r.rounds) inliers += round.inliers;
    CHECK(inliers == labeled);
  }
  SUBCASE("stop rule") {
    const bool fraction_reached = r.remaining <= config.stop_fraction * r.total;
    const bool few_inliers = !r.rounds.empty() && r.rounds.back().inliers < 3;
    CHECK((fraction_reached || few_inliers));
  }
  SUBCASE("accepted hypothesis has the lowest score of its round") {
    for (const MsacRound& round : r.rounds) {
      REQUIRE(round.accepted < round.scores.size());
      for (const double s : round.scores) CHECK(round.scores[round.accepted] <= s);
      CHECK(round.scores.size() == static_cast<std::size_t>(config.iterations_per_plane));
    }
  }
  SUBCASE("same seed gives the same result, other seeds may differ") {
    const MsacResult again = msac_extract_detailed(scan, config);
    CHECK(again.segmentation == r.segmentation);
    REQUIRE(again.rounds.size() == r.rounds.size());
    for (std::size_t i = 0; i < r.rounds.size(); ++i) CHECK(again.rounds[i].scores == r.rounds[i].scores);
  }
}

TEST_CASE("stop fraction of one extracts nothing") {
  const int w = 20, h = 12;
  const OrganizedScan scan = assigned_scan(w, h, 0.05, kPlanes, three_regions(w, h), 0.0, 0);
  const MsacResult r = msac_extract_detailed(scan, config_with(0.01, 1.0, 2));
  CHECK(r.segmentation.planes.empty());
  CHECK(r.remaining == r.total);
  const MsacResult most = msac_extract_detailed(scan, config_with(0.01, 0.7, 2));
  CHECK(most.segmentation.planes.size() == 1);
}

TEST_CASE("msac errors") {
  OrganizedScan scan(3, 1, Vec3::Zero(), 0.01);
  scan.set_endpoint(0, {1, 0, 0});
  scan.set_endpoint(1, {1, 1, 0});
  CHECK_THROWS_AS(msac_extract(scan, config_with(0.01, 0.1, 0)), Error);
  try {
    msac_extract(scan, config_with(0.01, 0.1, 0));
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TooFewPoints);
  }
  scan.set_endpoint(2, {1, 0, 1});
  CHECK_NOTHROW(msac_extract(scan, config_with(0.01, 0.1, 0)));
  CHECK_THROWS_AS(msac_extract(scan, config_with(0.0, 0.1, 0)), Error);
  CHECK_THROWS_AS(msac_extract(scan, config_with(0.01, 0.0, 0)), Error);
  CHECK_THROWS_AS(msac_extract(scan, config_with(0.01, 1.5, 0)), Error);
  CHECK_THROWS_AS(msac_extract(scan, config_with(0.01, 0.5, 0, 0)), Error);
}

TEST_CASE("collinear scans yield no plane") {
  OrganizedScan scan(6, 1, Vec3::Zero(), 0.01);
  for (int i = 0; i < 6; ++i) scan.set_endpoint(static_cast<std::size_t>(i), Vec3(1.0, 0.1 * i, 0.0));
  const MsacResult r = msac_extract_detailed(scan, config_with(0.01, 0.1, 0, 10));
  CHECK(r.segmentation.planes.empty());
  CHECK(r.remaining == 6);
}

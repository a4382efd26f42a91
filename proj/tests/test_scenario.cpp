#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rhb/scenario.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace rhb;

namespace {

SystemConfig default_sys() {
  SystemConfig cfg;
  return cfg;
}

GeometryParams default_geo() {
  GeometryParams geo;
  return geo;
}

struct TempDir {
  std::filesystem::path p;
  TempDir() {
    p = std::filesystem::temp_directory_path() /
        ("rhb_scenario_" + std::to_string(::getpid()));
    std::filesystem::create_directories(p);
  }
  ~TempDir() { std::filesystem::remove_all(p); }
  std::string file(const std::string& name) const { return (p / name).string(); }
};

}  // namespace

TEST_CASE("steering vector at broadside is all ones") {
  GeometryParams geo = default_geo();  // panel {1,2,3}
  const VecC a = steering_vector(geo, 0.0, 0.0);
  REQUIRE(a.size() == 6);
  // propagation direction (1,0,0) has no projection on the y/z grid axes
  for (int t = 0; t < a.size(); ++t) {
    CHECK(a[t].real() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(a[t].imag() == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("steering vector entries are unit modulus") {
  GeometryParams geo = default_geo();
  for (double az : {-2.1, 0.3, 1.9})
    for (double el : {-1.2, 0.0, 0.7}) {
      const VecC a = steering_vector(geo, az, el);
      for (int t = 0; t < a.size(); ++t)
        CHECK(std::abs(a[t]) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("single path with no spread equals a scaled steering vector") {
  SystemConfig cfg = default_sys();
  cfg.n_users = 1;
  GeometryParams geo = default_geo();
  geo.n_paths = 1;
  geo.scale_min_db = 0.0;
  geo.scale_max_db = 0.0;
  const auto sets = generate_channels(cfg, geo, 20);
  for (const auto& ch : sets) {
    // h = g * a(theta): all entries share the magnitude |g| exactly
    const VecC h = ch.h.row(0).transpose();
    const double mag = std::abs(h[0]);
    REQUIRE(mag > 0.0);
    for (int t = 1; t < h.size(); ++t)
      CHECK(std::abs(h[t]) == doctest::Approx(mag).epsilon(1e-12));
  }
}

TEST_CASE("same seed reproduces the channel sequence exactly") {
  SystemConfig cfg = default_sys();
  GeometryParams geo = default_geo();
  const auto a = generate_channels(cfg, geo, 50);
  const auto b = generate_channels(cfg, geo, 50);
  REQUIRE(a.size() == b.size());
  for (std::size_t s = 0; s < a.size(); ++s) CHECK(a[s].h == b[s].h);

  cfg.rng_seed = 2;
  const auto c = generate_channels(cfg, geo, 50);
  CHECK(a[0].h != c[0].h);
}

TEST_CASE("shape contract: 1000 samples, each M x N_T, finite") {
  SystemConfig cfg = default_sys();
  GeometryParams geo = default_geo();
  const auto sets = generate_channels(cfg, geo, 1000);
  REQUIRE(sets.size() == 1000);
  for (const auto& ch : sets) {
    CHECK(ch.n_users() == cfg.n_users);
    CHECK(ch.n_tx() == cfg.n_tx);
    CHECK(ch.h.allFinite());
  }
}

TEST_CASE("mean channel energy matches the configured scale") {
  // with a fixed 0 dB large-scale power, E||h_m||^2 = N_T
  SystemConfig cfg = default_sys();
  cfg.rng_seed = 7;
  GeometryParams geo = default_geo();
  geo.scale_min_db = 0.0;
  geo.scale_max_db = 0.0;
  const auto sets = generate_channels(cfg, geo, 4000);
  double acc = 0.0;
  long cnt = 0;
  for (const auto& ch : sets)
    for (int m = 0; m < ch.n_users(); ++m) {
      acc += ch.h.row(m).squaredNorm();
      ++cnt;
    }
  CHECK(acc / cnt == doctest::Approx(cfg.n_tx).epsilon(0.1));
}

TEST_CASE("save then load round-trips exactly") {
  TempDir tmp;
  SystemConfig cfg = default_sys();
  GeometryParams geo = default_geo();
  const auto sets = generate_channels(cfg, geo, 17);
  const auto path = tmp.file("ch.bin");
  save_channels(path, sets);
  const auto back = load_channels(path);
  REQUIRE(back.size() == sets.size());
  for (std::size_t s = 0; s < sets.size(); ++s) CHECK(back[s].h == sets[s].h);
}

TEST_CASE("truncated and oversized files are rejected") {
  TempDir tmp;
  SystemConfig cfg = default_sys();
  GeometryParams geo = default_geo();
  const auto sets = generate_channels(cfg, geo, 3);
  const auto path = tmp.file("ch.bin");
  save_channels(path, sets);

  SUBCASE("payload shorter than the header promises") {
    const auto sz = std::filesystem::file_size(path);
    std::filesystem::resize_file(path, sz - 24);
    CHECK_THROWS_WITH_AS(load_channels(path), doctest::Contains("truncated"),
                         std::runtime_error);
  }
  SUBCASE("extra rows beyond the declared shape") {
    std::ofstream os(path, std::ios::binary | std::ios::app);
    const double junk[2] = {1.0, 2.0};
    os.write(reinterpret_cast<const char*>(junk), sizeof(junk));
    os.close();
    CHECK_THROWS_WITH_AS(load_channels(path), doctest::Contains("trailing"),
                         std::runtime_error);
  }
}

TEST_CASE("empty sample set is rejected on load") {
  TempDir tmp;
  const auto path = tmp.file("empty.bin");
  save_channels(path, {});
  CHECK_THROWS_WITH_AS(load_channels(path), doctest::Contains("no samples"),
                       std::runtime_error);
}

TEST_CASE("config validation rejects bad geometry") {
  SystemConfig cfg = default_sys();
  GeometryParams geo = default_geo();
  geo.panel = {1, 2, 2};  // 4 != 6
  CHECK_THROWS_AS(generate_channels(cfg, geo, 1), std::invalid_argument);
  geo = default_geo();
  geo.n_paths = 0;
  CHECK_THROWS_AS(generate_channels(cfg, geo, 1), std::invalid_argument);
}

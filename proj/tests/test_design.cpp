#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>
#include <vector>

#include "doctest.h"
#include "pieapp/common/rng.hpp"
#include "pieapp/design/coverage.hpp"
#include "pieapp/design/distortion.hpp"
#include "pieapp/design/image.hpp"
#include "pieapp/design/oracle.hpp"
#include "pieapp/design/plan.hpp"

using namespace pieapp::design;
using pieapp::rng::Rng;

TEST_CASE("training plan pair identities") {
  // paper-scale dry run: 160 refs -> 77,280 pairs (67,200 + 10,080)
  const auto plan = build_training_plan(160, 1);
  CHECK(plan.n_pairs() == 77280);
  CHECK(plan.n_pairs(ComparisonGroup::Kind::inter) == 67200);
  CHECK(plan.n_pairs(ComparisonGroup::Kind::intra) == 10080);

  const auto one = build_training_plan(1, 1);
  CHECK(one.n_pairs() == 483);  // 4 * C(15,2) + 21 * C(3,2)

  const auto empty = build_training_plan(0, 1);
  CHECK(empty.n_pairs() == 0);
  CHECK(empty.groups.empty());

  for (std::size_t n : {2u, 5u, 9u}) {
    const auto p = build_training_plan(n, 7);
    CHECK(p.n_pairs(ComparisonGroup::Kind::inter) == 420 * n);
    CHECK(p.n_pairs(ComparisonGroup::Kind::intra) == 63 * n);
  }
}

TEST_CASE("test plan pair identities") {
  CHECK(build_test_plan(40, 2).n_pairs() == 4200);
  CHECK(build_test_plan(1, 2).n_pairs() == 105);
  CHECK(build_test_plan(0, 2).n_pairs() == 0);
}

TEST_CASE("inter groups have 15 distinct settings; intra share a family") {
  const auto plan = build_training_plan(2, 3);
  for (const auto& g : plan.groups) {
    if (g.kind == ComparisonGroup::Kind::inter) {
      CHECK(g.item_ids.size() == 15);
      std::set<std::pair<int, double>> settings;
      for (const auto& id : g.item_ids) {
        const auto& item = plan.item(id);
        settings.insert({static_cast<int>(item.spec.family),
                         item.spec.strength});
      }
      CHECK(settings.size() == 15);
    } else {
      CHECK(g.item_ids.size() == 3);
      std::set<int> fams;
      std::set<double> strengths;
      for (const auto& id : g.item_ids) {
        const auto& item = plan.item(id);
        fams.insert(static_cast<int>(item.spec.family));
        strengths.insert(item.spec.strength);
      }
      CHECK(fams.size() == 1);
      CHECK(strengths.size() == 3);  // distinct strengths
    }
  }
}

TEST_CASE("plans are reproducible from the seed") {
  const auto a = build_training_plan(3, 42);
  const auto b = build_training_plan(3, 42);
  REQUIRE(a.items.size() == b.items.size());
  for (std::size_t i = 0; i < a.items.size(); ++i) {
    CHECK(a.items[i].id == b.items[i].id);
    CHECK(a.items[i].spec.strength == b.items[i].spec.strength);
    CHECK(a.items[i].seed == b.items[i].seed);
  }
  const auto c = build_training_plan(3, 43);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.items.size(); ++i) {
    any_diff = any_diff || a.items[i].spec.strength != c.items[i].spec.strength;
  }
  CHECK(any_diff);
}

TEST_CASE("sparse_pair_selection: degree, connectivity, counts") {
  const auto pairs = sparse_pair_selection(15, 10, 5);
  CHECK(pairs.size() == 75);
  std::vector<int> degree(15, 0);
  for (const auto& [a, b] : pairs) {
    ++degree[a];
    ++degree[b];
  }
  for (int d : degree) CHECK(d == 10);

  // connectivity via union-find-ish BFS
  std::vector<std::set<std::size_t>> adj(15);
  for (const auto& [a, b] : pairs) {
    adj[a].insert(b);
    adj[b].insert(a);
  }
  std::set<std::size_t> seen{0};
  std::vector<std::size_t> stack{0};
  while (!stack.empty()) {
    const auto i = stack.back();
    stack.pop_back();
    for (auto j : adj[i]) {
      if (seen.insert(j).second) stack.push_back(j);
    }
  }
  CHECK(seen.size() == 15);

  CHECK(sparse_pair_selection(15, 14, 5).size() == 105);  // complete graph
  CHECK_THROWS(sparse_pair_selection(15, 15, 5));

  // odd k: degree >= k still guaranteed
  for (std::size_t k : {3u, 7u, 9u}) {
    const auto ps = sparse_pair_selection(15, k, 11);
    std::vector<std::size_t> deg(15, 0);
    for (const auto& [a, b] : ps) {
      ++deg[a];
      ++deg[b];
    }
    for (auto d : deg) CHECK(d >= k);
  }
}

TEST_CASE("sparse design budget: 81,480 -> 62,280 queried pairs") {
  auto train = build_training_plan(160, 9);
  const auto test = build_test_plan(40, 10);
  const std::size_t before = train.n_queried() + test.n_queried();
  CHECK(before == 81480);
  apply_sparse_design(train, 10);
  const std::size_t after = train.n_queried() + test.n_queried();
  CHECK(after == 62280);
  const double reduction = 1.0 - static_cast<double>(after) / before;
  CHECK(reduction == doctest::Approx(0.2356).epsilon(1e-3));
}

TEST_CASE("apply_distortion: strength zero is the identity for all families") {
  const Image ref = make_reference_image(32, 1, 77);
  for (auto fam :
       {DistortionFamily::gaussian_noise, DistortionFamily::box_blur,
        DistortionFamily::quantize, DistortionFamily::contrast_scale,
        DistortionFamily::pixelate}) {
    const Image out = apply_distortion(ref, {fam, 0.0}, 123);
    CHECK(out.pixels == ref.pixels);
  }
}

TEST_CASE("gaussian noise statistics") {
  Image flat(64, 64, 1);
  for (auto& p : flat.pixels) p = 128;
  const double strength = 0.4;  // sigma = 0.1 in [0,1] units
  const Image noisy =
      apply_distortion(flat, {DistortionFamily::gaussian_noise, strength}, 5);
  double mean = 0.0;
  for (auto p : noisy.pixels) mean += p;
  mean /= static_cast<double>(noisy.pixels.size());
  double var = 0.0;
  for (auto p : noisy.pixels) {
    var += (p - mean) * (p - mean);
  }
  var /= static_cast<double>(noisy.pixels.size() - 1);
  const double sd = std::sqrt(var);
  CHECK(sd == doctest::Approx(0.1 * 255.0).epsilon(0.05));
}

TEST_CASE("quantize to two levels leaves only two values") {
  const Image ref = make_reference_image(32, 1, 78);
  const Image q = apply_distortion(ref, {DistortionFamily::quantize, 1.0}, 0);
  std::set<int> values;
  for (auto p : q.pixels) values.insert(p);
  CHECK(values.size() <= 2);
  CHECK(*values.begin() == 0);
  CHECK(*values.rbegin() == 255);
}

TEST_CASE("oracle_score basics") {
  const Image ref = make_reference_image(32, 1, 79);
  CHECK(oracle_score(ref, ref) == 0.0);

  // constant offset: RMSE equals the offset at every scale
  Image shifted = ref;
  for (auto& p : shifted.pixels) {
    p = static_cast<std::uint8_t>(std::min(255, p + 10));
  }
  bool clipped = false;
  for (std::size_t i = 0; i < ref.pixels.size(); ++i) {
    clipped = clipped || shifted.pixels[i] != ref.pixels[i] + 10;
  }
  REQUIRE_FALSE(clipped);  // reference generator keeps headroom
  CHECK(oracle_score(shifted, ref) ==
        doctest::Approx(10.0 / 255.0).epsilon(1e-12));

  Image other = make_reference_image(16, 1, 80);
  CHECK_THROWS(oracle_score(ref, other));
}

TEST_CASE("oracle_score is monotone in noise strength") {
  const Image ref = make_reference_image(48, 1, 81);
  double prev = -1.0;
  for (double s : {0.0, 0.1, 0.2, 0.35, 0.5, 0.75, 1.0}) {
    const Image d =
        apply_distortion(ref, {DistortionFamily::gaussian_noise, s}, 9);
    const double score = oracle_score(d, ref);
    CHECK(score >= prev);
    prev = score;
  }
}

TEST_CASE("simulate_responses: symmetry, CLT, reproducibility, n=0") {
  DesignConfig cfg;
  auto plan = build_test_plan(1, 21, cfg);
  std::unordered_map<std::string, double> scores;
  for (const auto& item : plan.items) scores[item.id] = 0.0;  // all equal

  plan.responses_per_pair = 10000;
  const auto recs = simulate_responses(plan, scores, 10000, 3);
  REQUIRE(recs.size() == 105);
  for (const auto& r : recs) {
    CHECK(static_cast<double>(r.n_prefer_a) / r.n_responses ==
          doctest::Approx(0.5).epsilon(0.05));
  }

  // known gap: p = 0.88
  std::unordered_map<std::string, double> gap_scores = scores;
  gap_scores[plan.groups[0].item_ids[0]] = -1.9924;
  const auto gap = simulate_responses(plan, gap_scores, 10000, 4);
  double p_first = -1.0;
  for (const auto& r : gap) {
    if (r.id_a == plan.groups[0].item_ids[0]) {
      p_first = static_cast<double>(r.n_prefer_a) / r.n_responses;
      break;
    }
  }
  CHECK(p_first == doctest::Approx(0.88).epsilon(0.0125));

  const auto zero = simulate_responses(plan, scores, 0, 5);
  for (const auto& r : zero) {
    CHECK(r.n_responses == 0);
    CHECK(r.n_prefer_a == 0);
  }

  const auto again = simulate_responses(plan, scores, 10000, 3);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    CHECK(recs[i].n_prefer_a == again[i].n_prefer_a);
  }

  std::unordered_map<std::string, double> missing;
  CHECK_THROWS(simulate_responses(plan, missing, 10, 6));
}

TEST_CASE("coverage: whole-image patch covers everything") {
  const auto rep =
      coverage_probability(64, 64, 1, CoverageMode::analytic_interior);
  CHECK(rep.min_p == 1.0);
  CHECK(rep.mean_p == 1.0);
}

TEST_CASE("coverage: analytic interior formula and Monte Carlo agreement") {
  const auto rep =
      coverage_probability(256, 64, 36, CoverageMode::analytic_interior);
  const double frac = 64.0 / 193.0;
  const double expect = 1.0 - std::pow(1.0 - frac * frac, 36.0);
  CHECK(rep.interior_p == doctest::Approx(expect).epsilon(1e-12));

  // Monte Carlo at an interior pixel agrees within 0.005
  const double mc = coverage_mc_pixel(256, 64, 36, 128, 128, 400000, 17);
  CHECK(std::abs(mc - expect) < 0.005);

  // corner pixel is covered less often than an interior pixel
  const double corner = coverage_mc_pixel(256, 64, 36, 0, 0, 60000, 18);
  CHECK(corner < mc);
  CHECK(rep.corner_p < rep.interior_p);
  CHECK(rep.min_p <= rep.corner_p);
}

TEST_CASE("coverage: monte carlo grid tracks the analytic grid") {
  CoverageOptions opts;
  opts.seed = 3;
  opts.mc_trials = 3000;
  opts.keep_grid = true;
  const auto mc =
      coverage_probability(64, 32, 8, CoverageMode::monte_carlo_all, opts);
  CoverageOptions a_opts;
  a_opts.keep_grid = true;
  const auto an =
      coverage_probability(64, 32, 8, CoverageMode::analytic_interior, a_opts);
  REQUIRE(mc.grid.size() == an.grid.size());
  double max_diff = 0.0;
  for (std::size_t i = 0; i < mc.grid.size(); ++i) {
    max_diff = std::max(max_diff, std::abs(mc.grid[i] - an.grid[i]));
  }
  CHECK(max_diff < 0.05);
  CHECK(mc.mean_p == doctest::Approx(an.mean_p).epsilon(0.02));
}

TEST_CASE("image PGM/PPM round trip") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "pieapp_img_test";
  fs::create_directories(dir);
  const Image gray = make_reference_image(24, 1, 91);
  save_image(gray, (dir / "g.pgm").string());
  const Image gback = load_image((dir / "g.pgm").string());
  CHECK(gback.channels == 1);
  CHECK(gback.pixels == gray.pixels);

  const Image rgb = make_reference_image(24, 3, 92);
  save_image(rgb, (dir / "c.ppm").string());
  const Image cback = load_image((dir / "c.ppm").string());
  CHECK(cback.channels == 3);
  CHECK(cback.pixels == rgb.pixels);
  fs::remove_all(dir);
}

TEST_CASE("plan and responses JSONL round trip") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "pieapp_plan_test";
  fs::create_directories(dir);
  auto plan = build_training_plan(2, 99);
  apply_sparse_design(plan, 10);
  const std::string ppath = (dir / "plan.jsonl").string();
  save_plan(plan, ppath);
  const auto back = load_plan(ppath);
  CHECK(back.seed == plan.seed);
  CHECK(back.n_pairs() == plan.n_pairs());
  CHECK(back.n_queried() == plan.n_queried());
  CHECK(back.items.size() == plan.items.size());
  CHECK(back.groups.size() == plan.groups.size());
  CHECK(back.items[5].spec.strength == plan.items[5].spec.strength);

  std::unordered_map<std::string, double> scores;
  for (const auto& item : plan.items) scores[item.id] = 0.1;
  const auto recs = simulate_responses(plan, scores, 7, 1);
  const std::string rpath = (dir / "resp.jsonl").string();
  save_responses(recs, rpath);
  const auto rback = load_responses(rpath);
  REQUIRE(rback.size() == recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    CHECK(rback[i].id_a == recs[i].id_a);
    CHECK(rback[i].n_prefer_a == recs[i].n_prefer_a);
  }
  fs::remove_all(dir);
}

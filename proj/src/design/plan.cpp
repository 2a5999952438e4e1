#include "pieapp/design/plan.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>

#include "json.hpp"
#include "pieapp/bt/preference.hpp"
#include "pieapp/common/rng.hpp"

namespace pieapp::design {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) {
  throw std::runtime_error("experiment-design: " + msg);
}

constexpr std::size_t kInterGroupsPerRef = 4;
constexpr std::size_t kIntraGroupsPerRef = 21;
constexpr std::size_t kInterItems = 15;
constexpr std::size_t kIntraItems = 3;

std::string ref_name(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "r%03zu", i);
  return buf;
}

void exhaustive_pairs(ComparisonGroup& g) {
  const std::size_t n = g.item_ids.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) g.pairs.emplace_back(i, j);
  }
  g.queried.assign(g.pairs.size(), 1);
}

}  // namespace

std::size_t ComparisonGroup::n_queried() const {
  std::size_t n = 0;
  for (std::uint8_t q : queried) n += q;
  return n;
}

std::size_t ComparisonPlan::n_pairs() const {
  std::size_t n = 0;
  for (const auto& g : groups) n += g.pairs.size();
  return n;
}

std::size_t ComparisonPlan::n_queried() const {
  std::size_t n = 0;
  for (const auto& g : groups) n += g.n_queried();
  return n;
}

std::size_t ComparisonPlan::n_pairs(ComparisonGroup::Kind kind) const {
  std::size_t n = 0;
  for (const auto& g : groups) {
    if (g.kind == kind) n += g.pairs.size();
  }
  return n;
}

const PlanItem& ComparisonPlan::item(const std::string& id) const {
  for (const PlanItem& it : items) {
    if (it.id == id) return it;
  }
  fail("plan has no item '" + id + "'");
}

namespace {

// 15 settings cycling through the family list with random strengths; random
// reals make the (family, strength) settings distinct.
void fill_inter_group(ComparisonPlan& plan, ComparisonGroup& g,
                      const std::vector<DistortionFamily>& families,
                      std::uint64_t group_seed) {
  if (families.empty()) fail("no distortion families configured");
  rng::Rng r(group_seed);
  for (std::size_t slot = 0; slot < kInterItems; ++slot) {
    PlanItem item;
    item.id = g.id + "_" + std::to_string(slot);
    item.ref_id = g.ref_id;
    item.spec.family = families[slot % families.size()];
    item.spec.strength =
        r.uniform(plan.config.strength_min, plan.config.strength_max);
    item.seed = rng::derive(plan.seed, "design.item", rng::fnv1a(item.id));
    g.item_ids.push_back(item.id);
    plan.items.push_back(std::move(item));
  }
  exhaustive_pairs(g);
}

ComparisonPlan init_plan(std::size_t n_refs, std::uint64_t seed,
                         const DesignConfig& config) {
  ComparisonPlan plan;
  plan.seed = seed;
  plan.config = config;
  for (std::size_t i = 0; i < n_refs; ++i) {
    plan.ref_ids.push_back(ref_name(i));
    plan.ref_seeds.push_back(rng::derive(seed, "design.ref", i));
  }
  return plan;
}

}  // namespace

ComparisonPlan build_training_plan(std::size_t n_refs, std::uint64_t seed,
                                   const DesignConfig& config) {
  ComparisonPlan plan = init_plan(n_refs, seed, config);
  if (config.train_families.empty()) {
    fail("build_training_plan: no training families configured");
  }
  for (std::size_t ri = 0; ri < n_refs; ++ri) {
    for (std::size_t gi = 0; gi < kInterGroupsPerRef; ++gi) {
      ComparisonGroup g;
      g.id = plan.ref_ids[ri] + "_i" + std::to_string(gi);
      g.ref_id = plan.ref_ids[ri];
      g.kind = ComparisonGroup::Kind::inter;
      fill_inter_group(plan, g, config.train_families,
                       rng::derive(seed, "design.inter", ri, gi));
      plan.groups.push_back(std::move(g));
    }
    for (std::size_t gi = 0; gi < kIntraGroupsPerRef; ++gi) {
      ComparisonGroup g;
      g.id = plan.ref_ids[ri] + "_t" + std::to_string(gi);
      g.ref_id = plan.ref_ids[ri];
      g.kind = ComparisonGroup::Kind::intra;
      rng::Rng r(rng::derive(seed, "design.intra", ri, gi));
      const DistortionFamily family =
          config.train_families[gi % config.train_families.size()];
      // three evenly spaced strengths over a randomised span
      const double lo = r.uniform(0.15, 0.45);
      const double hi = r.uniform(0.70, 1.00);
      const double strengths[kIntraItems] = {lo, 0.5 * (lo + hi), hi};
      for (std::size_t slot = 0; slot < kIntraItems; ++slot) {
        PlanItem item;
        item.id = g.id + "_" + std::to_string(slot);
        item.ref_id = g.ref_id;
        item.spec.family = family;
        item.spec.strength = strengths[slot];
        item.seed = rng::derive(plan.seed, "design.item", rng::fnv1a(item.id));
        g.item_ids.push_back(item.id);
        plan.items.push_back(std::move(item));
      }
      exhaustive_pairs(g);
      plan.groups.push_back(std::move(g));
    }
  }
  return plan;
}

ComparisonPlan build_test_plan(std::size_t n_refs, std::uint64_t seed,
                               const DesignConfig& config) {
  ComparisonPlan plan = init_plan(n_refs, seed, config);
  if (config.test_families.empty()) {
    fail("build_test_plan: no test families configured");
  }
  for (std::size_t ri = 0; ri < n_refs; ++ri) {
    ComparisonGroup g;
    g.id = plan.ref_ids[ri] + "_x";
    g.ref_id = plan.ref_ids[ri];
    g.kind = ComparisonGroup::Kind::inter;
    fill_inter_group(plan, g, config.test_families,
                     rng::derive(seed, "design.test", ri, 0));
    plan.groups.push_back(std::move(g));
  }
  return plan;
}

std::vector<std::pair<std::size_t, std::size_t>> sparse_pair_selection(
    std::size_t n_items, std::size_t k, std::uint64_t seed) {
  if (n_items < 2) fail("sparse_pair_selection: need at least two items");
  if (k > n_items - 1) {
    fail("sparse_pair_selection: k exceeds N-1");
  }
  if (k == 0) fail("sparse_pair_selection: k must be positive");

  // seeded permutation, then a circulant over it
  std::vector<std::size_t> perm(n_items);
  for (std::size_t i = 0; i < n_items; ++i) perm[i] = i;
  rng::Rng r(seed);
  for (std::size_t i = n_items - 1; i > 0; --i) {
    std::swap(perm[i], perm[r.below(i + 1)]);
  }

  std::set<std::pair<std::size_t, std::size_t>> edges;
  auto link = [&edges](std::size_t a, std::size_t b) {
    edges.emplace(std::min(a, b), std::max(a, b));
  };
  const std::size_t half = k / 2;
  for (std::size_t off = 1; off <= half; ++off) {
    for (std::size_t i = 0; i < n_items; ++i) {
      link(perm[i], perm[(i + off) % n_items]);
    }
  }
  if (k % 2 == 1) {
    if (n_items % 2 == 0) {
      for (std::size_t i = 0; i < n_items / 2; ++i) {
        link(perm[i], perm[i + n_items / 2]);  // diameter chords
      }
    } else {
      // odd k over odd N: one extra ring, degree becomes k+1 (>= k)
      for (std::size_t i = 0; i < n_items; ++i) {
        link(perm[i], perm[(i + half + 1) % n_items]);
      }
    }
  }
  return {edges.begin(), edges.end()};
}

void apply_sparse_design(ComparisonPlan& plan, std::size_t k) {
  for (ComparisonGroup& g : plan.groups) {
    if (g.kind != ComparisonGroup::Kind::inter) continue;
    if (g.item_ids.size() <= k) continue;
    const auto keep = sparse_pair_selection(
        g.item_ids.size(), k,
        rng::derive(plan.seed, "design.sparse", rng::fnv1a(g.id)));
    const std::set<std::pair<std::size_t, std::size_t>> keep_set(keep.begin(),
                                                                 keep.end());
    for (std::size_t pi = 0; pi < g.pairs.size(); ++pi) {
      g.queried[pi] = keep_set.count(g.pairs[pi]) ? 1 : 0;
    }
  }
}

std::vector<ResponseRecord> simulate_responses(
    const ComparisonPlan& plan,
    const std::unordered_map<std::string, double>& scores, int n,
    std::uint64_t seed) {
  if (n < 0) fail("simulate_responses: negative response count");
  std::vector<ResponseRecord> out;
  for (const ComparisonGroup& g : plan.groups) {
    for (std::size_t pi = 0; pi < g.pairs.size(); ++pi) {
      if (!g.queried[pi]) continue;
      const std::string& ia = g.item_ids[g.pairs[pi].first];
      const std::string& ib = g.item_ids[g.pairs[pi].second];
      const auto sa = scores.find(ia);
      const auto sb = scores.find(ib);
      if (sa == scores.end()) fail("simulate_responses: no score for " + ia);
      if (sb == scores.end()) fail("simulate_responses: no score for " + ib);
      const double p = bt::bt_probability(sa->second, sb->second);
      rng::Rng r(rng::derive(seed, "responses", rng::fnv1a(g.id), pi));
      ResponseRecord rec;
      rec.group_id = g.id;
      rec.ref_id = g.ref_id;
      rec.id_a = ia;
      rec.id_b = ib;
      rec.n_responses = n;
      rec.n_prefer_a = r.binomial(n, p);
      out.push_back(std::move(rec));
    }
  }
  return out;
}

ImageStore ImageStore::render(const ComparisonPlan& plan) {
  ImageStore store;
  for (std::size_t i = 0; i < plan.ref_ids.size(); ++i) {
    store.refs_[plan.ref_ids[i]] = make_reference_image(
        plan.config.image_size, plan.config.channels, plan.ref_seeds[i]);
  }
  for (const PlanItem& item : plan.items) {
    const Image& ref = store.refs_.at(item.ref_id);
    store.items_[item.id] = apply_distortion(ref, item.spec, item.seed);
  }
  return store;
}

ImageStore ImageStore::from_dir(const ComparisonPlan& plan,
                                const std::string& dir) {
  ImageStore store;
  const std::string ext = plan.config.channels == 1 ? ".pgm" : ".ppm";
  for (const std::string& rid : plan.ref_ids) {
    store.refs_[rid] = load_image(dir + "/" + rid + ext);
  }
  for (const PlanItem& item : plan.items) {
    store.items_[item.id] = load_image(dir + "/" + item.id + ext);
  }
  return store;
}

const Image& ImageStore::ref(const std::string& ref_id) const {
  const auto it = refs_.find(ref_id);
  if (it == refs_.end()) fail("no reference image '" + ref_id + "'");
  return it->second;
}

const Image& ImageStore::item(const std::string& item_id) const {
  const auto it = items_.find(item_id);
  if (it == items_.end()) fail("no item image '" + item_id + "'");
  return it->second;
}

void ImageStore::save_all(const std::string& dir) const {
  std::filesystem::create_directories(dir);
  for (const auto& [id, img] : refs_) {
    save_image(img, dir + "/" + id + (img.channels == 1 ? ".pgm" : ".ppm"));
  }
  for (const auto& [id, img] : items_) {
    save_image(img, dir + "/" + id + (img.channels == 1 ? ".pgm" : ".ppm"));
  }
}

namespace {

json config_to_json(const DesignConfig& c) {
  json families_train = json::array();
  for (auto f : c.train_families) families_train.push_back(family_name(f));
  json families_test = json::array();
  for (auto f : c.test_families) families_test.push_back(family_name(f));
  return json{{"image_size", c.image_size},
              {"channels", c.channels},
              {"train_families", families_train},
              {"test_families", families_test},
              {"strength_min", c.strength_min},
              {"strength_max", c.strength_max}};
}

DesignConfig config_from_json(const json& j) {
  DesignConfig c;
  c.image_size = j.at("image_size").get<std::size_t>();
  c.channels = j.at("channels").get<std::size_t>();
  c.train_families.clear();
  for (const auto& f : j.at("train_families")) {
    c.train_families.push_back(family_from_name(f.get<std::string>()));
  }
  c.test_families.clear();
  for (const auto& f : j.at("test_families")) {
    c.test_families.push_back(family_from_name(f.get<std::string>()));
  }
  c.strength_min = j.at("strength_min").get<double>();
  c.strength_max = j.at("strength_max").get<double>();
  return c;
}

}  // namespace

void save_plan(const ComparisonPlan& plan, const std::string& path) {
  std::ofstream os(path);
  if (!os) fail("save_plan: cannot open " + path);
  json header{{"type", "plan"},
              {"version", 1},
              {"seed", plan.seed},
              {"responses_per_pair", plan.responses_per_pair},
              {"config", config_to_json(plan.config)}};
  os << header.dump() << "\n";
  for (std::size_t i = 0; i < plan.ref_ids.size(); ++i) {
    os << json{{"type", "ref"},
               {"id", plan.ref_ids[i]},
               {"seed", plan.ref_seeds[i]}}
              .dump()
       << "\n";
  }
  for (const PlanItem& item : plan.items) {
    os << json{{"type", "item"},
               {"id", item.id},
               {"ref", item.ref_id},
               {"family", family_name(item.spec.family)},
               {"strength", item.spec.strength},
               {"seed", item.seed}}
              .dump()
       << "\n";
  }
  for (const ComparisonGroup& g : plan.groups) {
    json pairs = json::array();
    for (const auto& [a, b] : g.pairs) pairs.push_back(json::array({a, b}));
    json queried = json::array();
    for (std::uint8_t q : g.queried) queried.push_back(q != 0);
    os << json{{"type", "group"},
               {"id", g.id},
               {"ref", g.ref_id},
               {"kind",
                g.kind == ComparisonGroup::Kind::inter ? "inter" : "intra"},
               {"items", g.item_ids},
               {"pairs", pairs},
               {"queried", queried}}
              .dump()
       << "\n";
  }
  if (!os) fail("save_plan: write failed for " + path);
}

ComparisonPlan load_plan(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail("load_plan: cannot open " + path);
  ComparisonPlan plan;
  bool saw_header = false;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    const std::string type = j.at("type").get<std::string>();
    if (type == "plan") {
      plan.seed = j.at("seed").get<std::uint64_t>();
      plan.responses_per_pair = j.at("responses_per_pair").get<int>();
      plan.config = config_from_json(j.at("config"));
      saw_header = true;
    } else if (type == "ref") {
      plan.ref_ids.push_back(j.at("id").get<std::string>());
      plan.ref_seeds.push_back(j.at("seed").get<std::uint64_t>());
    } else if (type == "item") {
      PlanItem item;
      item.id = j.at("id").get<std::string>();
      item.ref_id = j.at("ref").get<std::string>();
      item.spec.family = family_from_name(j.at("family").get<std::string>());
      item.spec.strength = j.at("strength").get<double>();
      item.seed = j.at("seed").get<std::uint64_t>();
      plan.items.push_back(std::move(item));
    } else if (type == "group") {
      ComparisonGroup g;
      g.id = j.at("id").get<std::string>();
      g.ref_id = j.at("ref").get<std::string>();
      g.kind = j.at("kind").get<std::string>() == "inter"
                   ? ComparisonGroup::Kind::inter
                   : ComparisonGroup::Kind::intra;
      g.item_ids = j.at("items").get<std::vector<std::string>>();
      for (const auto& p : j.at("pairs")) {
        g.pairs.emplace_back(p[0].get<std::size_t>(), p[1].get<std::size_t>());
      }
      for (const auto& q : j.at("queried")) {
        g.queried.push_back(q.get<bool>() ? 1 : 0);
      }
      plan.groups.push_back(std::move(g));
    } else {
      fail("load_plan: unknown record type '" + type + "'");
    }
  }
  if (!saw_header) fail("load_plan: missing plan header in " + path);
  return plan;
}

void save_responses(const std::vector<ResponseRecord>& responses,
                    const std::string& path) {
  std::ofstream os(path);
  if (!os) fail("save_responses: cannot open " + path);
  for (const ResponseRecord& r : responses) {
    os << json{{"group", r.group_id}, {"ref", r.ref_id},     {"a", r.id_a},
               {"b", r.id_b},         {"n", r.n_responses},  {"wins_a", r.n_prefer_a}}
              .dump()
       << "\n";
  }
  if (!os) fail("save_responses: write failed for " + path);
}

std::vector<ResponseRecord> load_responses(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail("load_responses: cannot open " + path);
  std::vector<ResponseRecord> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    ResponseRecord r;
    r.group_id = j.at("group").get<std::string>();
    r.ref_id = j.at("ref").get<std::string>();
    r.id_a = j.at("a").get<std::string>();
    r.id_b = j.at("b").get<std::string>();
    r.n_responses = j.at("n").get<int>();
    r.n_prefer_a = j.at("wins_a").get<int>();
    if (r.n_prefer_a < 0 || r.n_prefer_a > r.n_responses) {
      fail("load_responses: invalid win count for pair " + r.id_a + "/" +
           r.id_b);
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace pieapp::design

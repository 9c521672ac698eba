#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fstream>
#include <random>

#include "curator/core.hpp"
#include "curator/synth.hpp"
#include "support/test_util.hpp"

using namespace curator;

namespace {

void require_equal(const Dataset& a, const Dataset& b) {
  REQUIRE(a.dimensionality == b.dimensionality);
  REQUIRE(a.instances.size() == b.instances.size());
  REQUIRE(a.bags.size() == b.bags.size());
  for (const auto& [id, inst] : a.instances) {
    const Instance& other = b.instance(id);
    REQUIRE(other.features.size() == inst.features.size());
    for (std::size_t i = 0; i < inst.features.size(); ++i)
      CHECK(other.features[i] == inst.features[i]);  // bitwise
  }
  for (const auto& [id, bag] : a.bags) {
    auto it = b.bags.find(id);
    REQUIRE(it != b.bags.end());
    CHECK(it->second.query_text == bag.query_text);
    CHECK(it->second.label == bag.label);
    CHECK(it->second.instances == bag.instances);
  }
}

}  // namespace

TEST_CASE("minimal well-formed dataset loads") {
  const auto dir = testutil::temp_dir("core_minimal");
  {
    std::ofstream f(dir / "f.csv");
    f << "id,f_1,f_2,f_3\n";
    f << "a,1,2,3\n";
    f << "b,4,5,-6.5\n";
  }
  {
    std::ofstream m(dir / "m.json");
    m << R"({"dimensionality":3,"bags":[{"id":"bag0","query_text":"q","label":null,"instances":["a","b"]}]})";
  }
  const Dataset ds = load_dataset(dir / "f.csv", dir / "m.json");
  CHECK(ds.dimensionality == 3);
  CHECK(ds.instances.size() == 2);
  CHECK(ds.bags.size() == 1);
  CHECK(ds.instance("b").features[2] == -6.5);
  CHECK(ds.bags.at("bag0").instances == std::vector<std::string>{"a", "b"});
}

TEST_CASE("rows of differing lengths are a format error naming the row") {
  const auto dir = testutil::temp_dir("core_badrow");
  {
    std::ofstream f(dir / "f.csv");
    f << "id,f_1,f_2\n";
    f << "a,1,2\n";
    f << "b,4\n";
  }
  {
    std::ofstream m(dir / "m.json");
    m << R"({"dimensionality":2,"bags":[]})";
  }
  try {
    load_dataset(dir / "f.csv", dir / "m.json");
    FAIL("expected a format error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Format);
    CHECK(std::string(e.what()).find("b") != std::string::npos);
  }
}

TEST_CASE("dangling instance id is a reference error naming bag and id") {
  const auto dir = testutil::temp_dir("core_dangling");
  {
    std::ofstream f(dir / "f.csv");
    f << "id,f_1\n";
    f << "a,1\n";
  }
  {
    std::ofstream m(dir / "m.json");
    m << R"({"dimensionality":1,"bags":[{"id":"bag0","query_text":"q","label":1,"instances":["a","ghost"]}]})";
  }
  try {
    load_dataset(dir / "f.csv", dir / "m.json");
    FAIL("expected a reference error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Reference);
    CHECK(std::string(e.what()).find("bag0") != std::string::npos);
    CHECK(std::string(e.what()).find("ghost") != std::string::npos);
  }
}

TEST_CASE("empty bags are rejected before write") {
  Dataset ds;
  ds.dimensionality = 2;
  Bag bag;
  bag.id = "bag0";
  ds.bags.emplace(bag.id, bag);
  const auto dir = testutil::temp_dir("core_emptybag");
  CHECK_THROWS_AS(save_dataset(ds, dir / "f.csv", dir / "m.json"), Error);
  CHECK(!std::filesystem::exists(dir / "f.csv"));
}

TEST_CASE("synth fixture round-trips field by field") {
  SynthParams params;
  params.categories = 4;
  params.bags_per_category = 1;
  params.instances_per_bag = 5;
  params.dimensionality = 10;
  params.noisy_bag_fraction = 0.0;
  params.intra_noise_fraction = 0.0;
  params.seed = 7;
  const auto [ds, truth] = synth_generate(params);
  CHECK(ds.dimensionality == 10);
  CHECK(ds.instances.size() == 20);
  CHECK(ds.bags.size() == 4);

  const auto dir = testutil::temp_dir("core_synth_roundtrip");
  save_dataset(ds, dir / "f.csv", dir / "m.json");
  require_equal(ds, load_dataset(dir / "f.csv", dir / "m.json"));
}

TEST_CASE("negative values round-trip bitwise") {
  const Dataset ds = testutil::make_dataset(
      3, {{{-1.5, 0.3333333333333333, -2.2250738585072014e-308}, {1e300, -7.0, 0.1}}});
  const auto dir = testutil::temp_dir("core_negative");
  save_dataset(ds, dir / "f.csv", dir / "m.json");
  require_equal(ds, load_dataset(dir / "f.csv", dir / "m.json"));
}

TEST_CASE("round-trip identity on randomized datasets") {
  std::mt19937_64 eng(20240817);
  std::uniform_int_distribution<std::size_t> dim_dist(1, 64);
  std::uniform_int_distribution<std::size_t> bag_dist(1, 20);
  std::uniform_int_distribution<std::size_t> inst_dist(1, 8);
  std::uniform_int_distribution<int> label_dist(-1, 1);
  std::normal_distribution<double> value(0.0, 100.0);

  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t dim = dim_dist(eng);
    std::vector<std::vector<FeatureVec>> bags(bag_dist(eng));
    std::vector<std::optional<int>> labels;
    for (auto& bag : bags) {
      bag.resize(inst_dist(eng), FeatureVec(dim));
      for (auto& row : bag)
        for (auto& v : row) v = value(eng);
      const int l = label_dist(eng);
      labels.push_back(l == 0 ? std::optional<int>{} : std::optional<int>{l});
    }
    const Dataset ds = testutil::make_dataset(dim, bags, labels);
    const auto dir = testutil::temp_dir("core_prop_" + std::to_string(rep));
    save_dataset(ds, dir / "f.csv", dir / "m.json");
    require_equal(ds, load_dataset(dir / "f.csv", dir / "m.json"));
  }
}

TEST_CASE("loading never drops rows") {
  const auto dir = testutil::temp_dir("core_rowcount");
  std::size_t rows = 57;
  {
    std::ofstream f(dir / "f.csv");
    f << "id,f_1\n";
    for (std::size_t i = 0; i < rows; ++i) f << "r" << i << "," << i << "\n";
  }
  {
    std::ofstream m(dir / "m.json");
    m << R"({"dimensionality":1,"bags":[{"id":"b","query_text":"q","label":null,"instances":[)";
    for (std::size_t i = 0; i < rows; ++i) m << (i ? "," : "") << "\"r" << i << "\"";
    m << "]}]}";
  }
  const Dataset ds = load_dataset(dir / "f.csv", dir / "m.json");
  CHECK(ds.instances.size() == rows);
}

TEST_CASE("duplicate membership across bags is rejected") {
  Dataset ds;
  ds.dimensionality = 1;
  Instance inst{"x", {1.0}};
  ds.instances.emplace(inst.id, inst);
  Bag b1{"b1", "q", std::nullopt, {"x"}};
  Bag b2{"b2", "q", std::nullopt, {"x"}};
  ds.bags.emplace(b1.id, b1);
  ds.bags.emplace(b2.id, b2);
  CHECK_THROWS_AS(ds.validate(), Error);
}

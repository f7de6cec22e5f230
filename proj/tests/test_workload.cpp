#include <doctest.h>

#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "diffusion/errors.hpp"
#include "diffusion/workload.hpp"

using namespace diffusion;

namespace {

std::map<ObjectId, int> reference_counts(const Workload& w) {
  std::map<ObjectId, int> refs;
  for (const auto& t : w.tasks()) {
    for (ObjectId o : t.required_objects) ++refs[o];
  }
  return refs;
}

// Unbounded single cache: every first reference misses, the rest hit.
double replay_hit_ratio(const Workload& w) {
  std::set<ObjectId> seen;
  std::size_t hits = 0, total = 0;
  for (const auto& t : w.tasks()) {
    for (ObjectId o : t.required_objects) {
      ++total;
      if (!seen.insert(o).second) ++hits;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace

TEST_CASE("locality 30 over 790 objects") {
  const auto w = generate_locality_workload(790, 30, SizePreset::gz(), 7);
  CHECK(w.tasks().size() == 23'700);
  CHECK(w.objects().size() == 790);
  const auto refs = reference_counts(w);
  CHECK(refs.size() == 790);
  for (const auto& [id, n] : refs) CHECK(n == 30);
  for (const auto& o : w.objects()) {
    CHECK(o.transfer_size == 2 * kMB);
    CHECK(o.working_size == 6 * kMB);
  }
  CHECK(w.locality() == doctest::Approx(30).epsilon(1e-12));
}

TEST_CASE("locality 1 references each object exactly once") {
  const auto w = generate_locality_workload(5, 1, SizePreset::fit(), 0);
  CHECK(w.tasks().size() == 5);
  for (const auto& [id, n] : reference_counts(w)) CHECK(n == 1);
  CHECK(w.objects()[0].transfer_size == 6 * kMB);
}

TEST_CASE("fractional locality mixes floor and ceil") {
  const auto w = generate_locality_workload(100, 2.5, SizePreset::gz(), 42);
  CHECK(w.tasks().size() == 250);
  std::map<int, int> histogram;
  for (const auto& [id, n] : reference_counts(w)) ++histogram[n];
  CHECK(histogram.size() == 2);
  CHECK(histogram[2] == 50);
  CHECK(histogram[3] == 50);
}

TEST_CASE("generator properties") {
  for (double L : {1.0, 1.38, 2.0, 3.0, 4.7, 10.0}) {
    CAPTURE(L);
    const auto w = generate_locality_workload(321, L, SizePreset::gz(), 3);
    const auto refs = reference_counts(w);
    std::size_t total = 0;
    for (const auto& [id, n] : refs) {
      total += static_cast<std::size_t>(n);
      CHECK(n >= static_cast<int>(std::floor(L)));
      CHECK(n <= static_cast<int>(std::ceil(L)));
    }
    CHECK(total == w.tasks().size());
    CHECK(w.tasks().size() == static_cast<std::size_t>(std::llround(321 * L)));
    CHECK(w.locality() == doctest::Approx(static_cast<double>(total) / 321.0).epsilon(1e-9));
    CHECK(replay_hit_ratio(w) == doctest::Approx(ideal_cache_hit_ratio(w.locality())).epsilon(1e-12));
    for (const auto& t : w.tasks()) CHECK(t.required_objects.size() == 1);
  }
}

TEST_CASE("same seed gives the same workload, different seed a different order") {
  const auto a = generate_locality_workload(200, 3, SizePreset::gz(), 11);
  const auto b = generate_locality_workload(200, 3, SizePreset::gz(), 11);
  const auto c = generate_locality_workload(200, 3, SizePreset::gz(), 12);
  CHECK(a == b);
  CHECK_FALSE(a == c);
  std::ostringstream sa, sb;
  write_trace(sa, a);
  write_trace(sb, b);
  CHECK(sa.str() == sb.str());
}

TEST_CASE("generator rejects bad parameters") {
  CHECK_THROWS_AS(generate_locality_workload(0, 2, SizePreset::gz(), 1), ConfigError);
  CHECK_THROWS_AS(generate_locality_workload(10, 0.5, SizePreset::gz(), 1), ConfigError);
  CHECK_THROWS_AS(generate_locality_workload(10, 2, SizePreset::custom(0, 1), 1), ConfigError);
}

TEST_CASE("workload table rows") {
  const auto& rows = table2_presets();
  CHECK(rows.size() == 9);
  CHECK(rows[0].locality == 1);
  CHECK(rows[0].num_objects == 111'700);
  CHECK(rows[0].num_files == 111'700);
  CHECK(rows[1].locality == 1.38);
  CHECK(rows[1].num_objects == 154'345);
  CHECK(rows[1].num_files == 111'699);
  CHECK(rows[8].locality == 30);
  CHECK(rows[8].num_objects == 23'695);
  CHECK(rows[8].num_files == 790);
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].locality > rows[i - 1].locality);
}

TEST_CASE("ideal cache hit ratio") {
  CHECK(ideal_cache_hit_ratio(3) == doctest::Approx(2.0 / 3.0));
  CHECK(ideal_cache_hit_ratio(1) == 0.0);
  CHECK(ideal_cache_hit_ratio(30) == doctest::Approx(0.9667).epsilon(1e-4));
  CHECK_THROWS_AS(ideal_cache_hit_ratio(0.99), DomainError);
  // Cross-check against replay of an actual trace.
  const auto w = generate_locality_workload(790, 30, SizePreset::gz(), 1);
  CHECK(std::abs(replay_hit_ratio(w) - 0.9667) < 1e-4);
}

TEST_CASE("workload validation") {
  const DataObject a{ObjectId{1}, 10, 10};
  const DataObject b{ObjectId{2}, 10, 20};
  CHECK_NOTHROW(Workload({a, b}, {Task{TaskId{0}, {ObjectId{1}, ObjectId{2}}, 1.0}}));
  CHECK_THROWS_AS(Workload({a, a}, {}), ConfigError);
  CHECK_THROWS_AS(Workload({a}, {Task{TaskId{0}, {}, 0}}), ConfigError);
  CHECK_THROWS_AS(Workload({a}, {Task{TaskId{0}, {ObjectId{1}, ObjectId{1}}, 0}}), ConfigError);
  CHECK_THROWS_AS(Workload({a}, {Task{TaskId{0}, {ObjectId{9}}, 0}}), ConfigError);
  CHECK_THROWS_AS(Workload({a}, {Task{TaskId{0}, {ObjectId{1}}, -1}}), ConfigError);
  CHECK_THROWS_AS(Workload({DataObject{ObjectId{3}, 0, 1}}, {}), ConfigError);
  CHECK(Workload().locality() == 1.0);

  const Workload w({a, b}, {Task{TaskId{0}, {ObjectId{1}}, 0}, Task{TaskId{1}, {ObjectId{1}}, 0}});
  CHECK(w.locality() == 2.0);  // unreferenced objects do not count
  CHECK(w.object(ObjectId{2}).working_size == 20);
  CHECK(w.object_index(ObjectId{2}) == 1);
  CHECK_THROWS_AS(w.object(ObjectId{7}), std::out_of_range);
}

TEST_CASE("trace round trip is lossless") {
  const Workload w({DataObject{ObjectId{4}, 2'000'000, 6'000'000}, DataObject{ObjectId{9}, 1, 1}},
                   {Task{TaskId{0}, {ObjectId{9}, ObjectId{4}}, 0.1}, Task{TaskId{5}, {ObjectId{4}}, 1.0 / 3.0}});
  std::stringstream s;
  write_trace(s, w);
  CHECK(read_trace(s) == w);

  const auto g = generate_locality_workload(50, 2.2, SizePreset::gz(), 8, 0.05);
  std::stringstream s2;
  write_trace(s2, g);
  CHECK(read_trace(s2) == g);
}

TEST_CASE("trace errors carry line numbers") {
  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return read_trace(in, "t");
  };
  CHECK_THROWS_WITH_AS(parse("bogus\n"), doctest::Contains("t:1:"), ParseError);
  CHECK_THROWS_WITH_AS(parse("diffusion-trace 1\nobjects 1\n1 2\n"), doctest::Contains("t:3:"), ParseError);
  CHECK_THROWS_WITH_AS(parse("diffusion-trace 1\nobjects 1\n1 2 2\ntasks 1\n0 7 0\n"),
                       doctest::Contains("t:5:"), ParseError);
  CHECK_THROWS_WITH_AS(parse("diffusion-trace 1\nobjects 2\n1 2 2\n1 3 3\n"), doctest::Contains("t:4: duplicate object"),
                       ParseError);
  CHECK_THROWS_WITH_AS(parse("diffusion-trace 1\nobjects 1\n1 0 2\n"), doctest::Contains("t:3:"), ParseError);
  CHECK_THROWS_WITH_AS(parse("diffusion-trace 1\nobjects 1\n1 2 2\ntasks 2\n0 1 0\n\n0 1 0\n"),
                       doctest::Contains("t:7: duplicate task id 0"), ParseError);
  CHECK_THROWS_WITH_AS(parse("diffusion-trace 1\nobjects 1\n1 2 2\ntasks 1\n0 1,1 0\n"),
                       doctest::Contains("t:5: object 1 listed twice"), ParseError);
  CHECK_THROWS_WITH_AS(parse("diffusion-trace 1\nobjects 1\n1 2 2\ntasks 1\n0 1 -2\n"), doctest::Contains("t:5:"),
                       ParseError);
  CHECK_NOTHROW(parse("diffusion-trace 1\n# comment\nobjects 1\n1 2 2\ntasks 1\n0 1 0.5\n"));
}

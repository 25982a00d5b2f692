#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "decsaddle/data.hpp"
#include "doctest.h"

using namespace decsaddle;

TEST_CASE("parse one labelled sparse line") {
  std::istringstream in("+1 1:0.5 3:-2\n");
  const auto ds = parse_libsvm(in);
  REQUIRE(ds.size() == 1);
  CHECK(ds.samples[0].label == 1);
  CHECK(ds.dim == 3);
  const auto v = ds.dense(0);
  CHECK(v(0) == 0.5);
  CHECK(v(1) == 0.0);
  CHECK(v(2) == -2.0);
}

TEST_CASE("zero labels map to minus one") {
  std::istringstream in("0 2:1\n1 1:1\n\n-1 4:2\n");
  const auto ds = parse_libsvm(in);
  REQUIRE(ds.size() == 3);
  CHECK(ds.samples[0].label == -1);
  CHECK(ds.samples[1].label == 1);
  CHECK(ds.samples[2].label == -1);
  CHECK(ds.dim == 4);
}

TEST_CASE("malformed lines report their line number") {
  auto fails_at = [](const std::string& text, std::size_t line) {
    std::istringstream in(text);
    try {
      parse_libsvm(in);
    } catch (const ParseError& e) {
      return e.line() == line;
    }
    return false;
  };
  CHECK(fails_at("+1 1:1\nabc 1:1\n", 2));
  CHECK(fails_at("+1 1:1\n+1 3:1 2:1\n", 2));
  CHECK(fails_at("+1 1:1 1:2\n", 1));
  CHECK(fails_at("2 1:1\n", 1));
  CHECK(fails_at("+1 1:x\n", 1));
  CHECK(fails_at("+1 0:1\n", 1));
  CHECK(fails_at("\n+1 5\n", 2));
}

TEST_CASE("a4a-format fixture") {
  const auto ds = load_libsvm(std::string(DECSADDLE_TEST_DATA) + "/a4a_like_500.txt");
  CHECK(ds.size() == 500);
  CHECK(ds.dim == 122);
  for (const auto& s : ds.samples) {
    CHECK(s.features.size() == 14);
    CHECK((s.label == 1 || s.label == -1));
  }
}

TEST_CASE("synthetic data is deterministic per seed") {
  const auto a = synthesize(200, 10, 3);
  const auto b = synthesize(200, 10, 3);
  const auto c = synthesize(200, 10, 4);
  REQUIRE(a.size() == 200);
  CHECK(a.dim == 10);
  bool same = true, differs = false;
  for (Index k = 0; k < 200; ++k) {
    same = same && a.samples[k].label == b.samples[k].label && a.samples[k].features == b.samples[k].features;
    differs = differs || a.samples[k].features != c.samples[k].features;
    CHECK(a.samples[k].features.size() == 10);
  }
  CHECK(same);
  CHECK(differs);
}

TEST_CASE("synthetic labels are roughly balanced") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto ds = synthesize(2000, 5, seed);
    const auto pos = std::count_if(ds.samples.begin(), ds.samples.end(), [](const Sample& s) { return s.label > 0; });
    // Binomial(2000, 1/2) has sigma ~ 22.4.
    CHECK(std::abs(static_cast<double>(pos) - 1000.0) <= 3 * std::sqrt(2000 * 0.25));
  }
}

TEST_CASE("write and parse round-trip exactly") {
  const auto ds = synthesize(50, 7, 11);
  std::stringstream buf;
  write_libsvm(buf, ds);
  const auto back = parse_libsvm(buf);
  REQUIRE(back.size() == ds.size());
  CHECK(back.dim == ds.dim);
  for (Index k = 0; k < ds.size(); ++k) {
    CHECK(back.samples[k].label == ds.samples[k].label);
    CHECK(back.samples[k].features == ds.samples[k].features);
  }
}

namespace {

void check_cover(const Partition& p, Index total) {
  std::multiset<Index> seen;
  for (Index i = 0; i < p.nodes; ++i)
    for (Index j = 0; j < p.batches; ++j)
      for (Index k : p.batch(i, j)) seen.insert(k);
  CHECK(static_cast<Index>(seen.size()) == total);
  std::set<Index> unique(seen.begin(), seen.end());
  CHECK(unique.size() == seen.size());
  CHECK(*unique.begin() == 0);
  CHECK(*unique.rbegin() == total - 1);
}

std::vector<std::size_t> node_sizes(const Partition& p) {
  std::vector<std::size_t> out;
  for (Index i = 0; i < p.nodes; ++i) {
    std::size_t total = 0;
    std::size_t lo = SIZE_MAX, hi = 0;
    for (Index j = 0; j < p.batches; ++j) {
      total += p.batch(i, j).size();
      lo = std::min(lo, p.batch(i, j).size());
      hi = std::max(hi, p.batch(i, j).size());
    }
    CHECK(hi - lo <= 1);
    out.push_back(total);
  }
  return out;
}

}  // namespace

TEST_CASE("partition with exact division") {
  const auto ds = synthesize(12, 2, 1);
  const auto p = partition(ds, 3, 2, 1);
  check_cover(p, 12);
  for (Index i = 0; i < 3; ++i)
    for (Index j = 0; j < 2; ++j) CHECK(p.batch(i, j).size() == 2);
}

TEST_CASE("partition with a remainder") {
  const auto ds = synthesize(13, 2, 1);
  const auto p = partition(ds, 3, 2, 1);
  check_cover(p, 13);
  CHECK(node_sizes(p) == std::vector<std::size_t>{5, 4, 4});
}

TEST_CASE("sorted partition is a cover with balanced sizes") {
  const auto ds = synthesize(101, 3, 2);
  const auto p = partition(ds, 4, 3, 2, PartitionMode::kSortedByLabel);
  check_cover(p, 101);
  const auto sizes = node_sizes(p);
  CHECK(*std::max_element(sizes.begin(), sizes.end()) - *std::min_element(sizes.begin(), sizes.end()) <= 1);
  // Node 0 holds only the most negative labels.
  for (Index j = 0; j < 3; ++j)
    for (Index k : p.batch(0, j)) CHECK(ds.samples[k].label == -1);
}

TEST_CASE("partition needs enough samples") {
  const auto ds = synthesize(5, 2, 1);
  CHECK_THROWS(partition(ds, 3, 2, 1));
}

#include "decsaddle/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <string_view>

#include "decsaddle/rng.hpp"

namespace decsaddle {

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view tok, T& out) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  const auto* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace

Vector<double> Dataset::dense(Index k) const {
  Vector<double> v = Vector<double>::Zero(dim);
  for (const auto& [idx, val] : samples[static_cast<std::size_t>(k)].features) v(idx) = val;
  return v;
}

Dataset parse_libsvm(std::istream& in) {
  Dataset ds;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto tokens = split_ws(line);
    if (tokens.empty()) continue;

    double label_value = 0;
    if (!parse_number(tokens[0], label_value)) throw ParseError(lineno, "non-numeric label '" + std::string(tokens[0]) + "'");
    Sample sample;
    if (label_value == 1.0) {
      sample.label = 1;
    } else if (label_value == -1.0 || label_value == 0.0) {
      sample.label = -1;
    } else {
      throw ParseError(lineno, "unknown label value '" + std::string(tokens[0]) + "'");
    }

    Index previous = 0;
    for (std::size_t t = 1; t < tokens.size(); ++t) {
      const auto tok = tokens[t];
      const auto colon = tok.find(':');
      if (colon == std::string_view::npos) throw ParseError(lineno, "expected idx:val, got '" + std::string(tok) + "'");
      long long idx = 0;
      double val = 0;
      if (!parse_number(tok.substr(0, colon), idx)) {
        throw ParseError(lineno, "non-numeric feature index in '" + std::string(tok) + "'");
      }
      if (!parse_number(tok.substr(colon + 1), val)) {
        throw ParseError(lineno, "non-numeric feature value in '" + std::string(tok) + "'");
      }
      if (idx < 1) throw ParseError(lineno, "feature indices start at 1");
      if (idx <= previous) throw ParseError(lineno, "feature indices must be strictly increasing");
      previous = static_cast<Index>(idx);
      sample.features.emplace_back(static_cast<Index>(idx - 1), val);
      ds.dim = std::max(ds.dim, static_cast<Index>(idx));
    }
    ds.samples.push_back(std::move(sample));
  }
  return ds;
}

Dataset load_libsvm(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset '" + path + "'");
  return parse_libsvm(in);
}

void write_libsvm(std::ostream& out, const Dataset& ds) {
  char buf[64];
  for (const auto& s : ds.samples) {
    out << (s.label > 0 ? "+1" : "-1");
    for (const auto& [idx, val] : s.features) {
      std::snprintf(buf, sizeof buf, " %lld:%.17g", static_cast<long long>(idx + 1), val);
      out << buf;
    }
    out << '\n';
  }
}

Dataset synthesize(Index n_samples, Index dim, std::uint64_t seed) {
  if (n_samples < 1 || dim < 1) throw std::invalid_argument("synthesize needs N >= 1 and d >= 1");
  const SeedTree tree(seed);
  Engine rng = tree.engine();
  std::normal_distribution<double> normal;
  std::bernoulli_distribution flip(0.1);

  Vector<double> separator(dim);
  for (Index i = 0; i < dim; ++i) separator(i) = normal(rng);

  Dataset ds;
  ds.dim = dim;
  ds.samples.reserve(static_cast<std::size_t>(n_samples));
  for (Index k = 0; k < n_samples; ++k) {
    Sample s;
    double margin = 0;
    s.features.reserve(static_cast<std::size_t>(dim));
    for (Index i = 0; i < dim; ++i) {
      const double v = normal(rng);
      margin += v * separator(i);
      s.features.emplace_back(i, v);
    }
    s.label = margin >= 0 ? 1 : -1;
    if (flip(rng)) s.label = -s.label;
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

Partition partition(const Dataset& ds, Index nodes, Index batches, std::uint64_t seed, PartitionMode mode) {
  if (nodes < 1 || batches < 1) throw std::invalid_argument("partition needs m >= 1 and n >= 1");
  const Index total = ds.size();
  if (total < nodes * batches) {
    throw std::invalid_argument("partition: " + std::to_string(total) + " samples cannot fill " +
                                std::to_string(nodes) + " nodes x " + std::to_string(batches) + " batches");
  }

  std::vector<Index> order(static_cast<std::size_t>(total));
  std::iota(order.begin(), order.end(), Index{0});
  Engine rng = branch(SeedTree(seed), Stream::kPartition).engine();
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<std::vector<Index>> per_node(static_cast<std::size_t>(nodes));
  if (mode == PartitionMode::kShuffled) {
    for (Index k = 0; k < total; ++k) per_node[static_cast<std::size_t>(k % nodes)].push_back(order[static_cast<std::size_t>(k)]);
  } else {
    std::stable_sort(order.begin(), order.end(), [&ds](Index l, Index r) {
      return ds.samples[static_cast<std::size_t>(l)].label < ds.samples[static_cast<std::size_t>(r)].label;
    });
    Index start = 0;
    for (Index i = 0; i < nodes; ++i) {
      const Index count = total / nodes + (i < total % nodes ? 1 : 0);
      per_node[static_cast<std::size_t>(i)].assign(order.begin() + start, order.begin() + start + count);
      start += count;
    }
  }

  Partition part;
  part.nodes = nodes;
  part.batches = batches;
  part.assignment.assign(static_cast<std::size_t>(nodes), std::vector<std::vector<Index>>(static_cast<std::size_t>(batches)));
  for (Index i = 0; i < nodes; ++i) {
    const auto& local = per_node[static_cast<std::size_t>(i)];
    for (std::size_t r = 0; r < local.size(); ++r) {
      part.assignment[static_cast<std::size_t>(i)][r % static_cast<std::size_t>(batches)].push_back(local[r]);
    }
  }
  return part;
}

}  // namespace decsaddle

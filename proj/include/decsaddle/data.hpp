#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "decsaddle/core.hpp"

namespace decsaddle {

struct Sample {
  int label = 1;                                  // +1 or -1
  std::vector<std::pair<Index, double>> features;  // 0-based index, value; indices increasing
};

struct Dataset {
  std::vector<Sample> samples;
  Index dim = 0;

  [[nodiscard]] Index size() const { return static_cast<Index>(samples.size()); }
  [[nodiscard]] Vector<double> dense(Index k) const;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  [[nodiscard]] std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Reads "<label> <idx>:<val> ..." lines with 1-based, strictly increasing
/// indices. Labels 0/-1 map to -1 and +1/1 to +1. Blank lines are skipped.
Dataset parse_libsvm(std::istream& in);
Dataset load_libsvm(const std::string& path);

/// Writes values with enough digits that parse_libsvm reproduces them exactly.
void write_libsvm(std::ostream& out, const Dataset& ds);

/// Unit-variance Gaussian features, labels from a random linear separator
/// with 10% of them flipped. Deterministic in `seed`.
Dataset synthesize(Index n_samples, Index dim, std::uint64_t seed);

enum class PartitionMode { kShuffled, kSortedByLabel };

/// Sample indices for every (node, batch) pair.
struct Partition {
  Index nodes = 0;
  Index batches = 0;
  std::vector<std::vector<std::vector<Index>>> assignment;  // [node][batch] -> sample ids

  [[nodiscard]] const std::vector<Index>& batch(Index node, Index j) const {
    return assignment[static_cast<std::size_t>(node)][static_cast<std::size_t>(j)];
  }
};

/// Shuffled mode permutes the samples by `seed` and deals them round-robin to
/// nodes. Sorted mode orders them by label and gives each node a contiguous
/// block, which makes nodes heterogeneous. Either way batches within a node
/// are dealt round-robin, so node and batch sizes differ by at most one.
Partition partition(const Dataset& ds, Index nodes, Index batches, std::uint64_t seed,
                    PartitionMode mode = PartitionMode::kShuffled);

}  // namespace decsaddle

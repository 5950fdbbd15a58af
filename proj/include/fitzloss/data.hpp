#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "fitzloss/simplex.hpp"

namespace fitzloss::data {

struct Splits {
  std::vector<std::size_t> train;
  std::vector<std::size_t> dev;
  std::vector<std::size_t> test;
};

/// Preprocessed dataset: dense row-major features and simplex labels.
struct Dataset {
  std::string name;
  std::size_t n = 0;
  std::size_t d = 0;
  std::size_t k = 0;
  std::vector<double> features;  ///< n x d, row-major
  std::vector<ProbVector> labels;
  Splits splits;

  std::span<const double> x(std::size_t i) const {
    return std::span<const double>(features).subspan(i * d, d);
  }
};

/// Dataset as read from disk: label rows are nonnegative weights (binary
/// indicators for multilabel files) and may be all zero.
struct RawDataset {
  std::string name;
  std::size_t n = 0;
  std::size_t d = 0;
  std::size_t k = 0;
  std::vector<double> features;  ///< n x d, row-major
  std::vector<double> labels;    ///< n x k, row-major
  Splits splits;
};

enum class Format { svmlight_multilabel, csv };

Format parse_format(std::string_view name);

struct LoadOptions {
  std::size_t k = 0;  ///< 0 infers from the largest label index
  std::size_t d = 0;  ///< 0 infers from the largest feature index
  /// Cap on n * d * sizeof(double) when densifying sparse rows.
  std::size_t max_dense_bytes = std::size_t{1} << 31;
};

/// Compressed sparse rows as parsed from a multilabel svmlight file.
struct SparseRows {
  std::size_t n = 0;
  std::size_t d = 0;
  std::size_t k = 0;
  std::vector<std::size_t> row_start;  ///< n + 1 offsets
  std::vector<std::size_t> column;     ///< 0-based
  std::vector<double> value;
  std::vector<std::vector<std::size_t>> label_sets;
};

/// Parses lines "l1,l2,... idx:val idx:val ..." with 0-based labels and
/// 1-based feature indices. Blank lines and '#' comments are skipped.
SparseRows read_svmlight_multilabel(const std::filesystem::path& path,
                                    const LoadOptions& opts = {});

/// Explicit sparse-to-dense conversion; throws SchemaError above the cap.
RawDataset densify(const SparseRows& rows, std::size_t max_dense_bytes);

/// Reads a whole file into a RawDataset with every sample in the train
/// split.
///
/// The csv contract: a header row, label columns named y0, y1, ... (weights
/// >= 0) and feature columns named x1, x2, ...; columns are matched by name,
/// so their order is free.
RawDataset load_multilabel(const std::filesystem::path& path, Format format,
                           const LoadOptions& opts = {});

/// Concatenates per-split files into one RawDataset with split indices.
/// When `dev` is null, a seeded 75/25 split of `train` provides it.
RawDataset assemble_splits(std::string name, const RawDataset& train,
                           const RawDataset* dev, const RawDataset& test,
                           std::uint64_t seed);

/// Drops samples without labels, standardizes features with train-split
/// statistics (zero-variance features are only centered) and divides each
/// label row by its sum. Throws Error when the train split ends up empty.
Dataset preprocess(const RawDataset& raw);

/// Inverse view used to re-run preprocessing on a finished dataset.
RawDataset to_raw(const Dataset& ds);

/// Seeded GLM data: x ~ N(0, I_d), W0 ~ N(0, 1)^{k x d},
/// y = softargmax(W0 x + noise * eps); first 60% train, 20% dev, 20% test.
Dataset synth_generate(std::uint64_t seed, std::size_t n, std::size_t d,
                       std::size_t k, double noise);

}  // namespace fitzloss::data

#include "fitzloss/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string_view>
#include <unordered_set>

#include "fitzloss/errors.hpp"
#include "fitzloss/random.hpp"

namespace fitzloss::data {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

// Strips a trailing '#' comment and surrounding whitespace.
std::string_view content_of(std::string_view line) {
  const auto hash = line.find('#');
  if (hash != std::string_view::npos) line = line.substr(0, hash);
  return line;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos
                                      ? std::string_view::npos
                                      : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<std::string_view> tokens(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t' && s[i] != '\r') ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

std::optional<double> to_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    return std::nullopt;
  }
  return v;
}

std::optional<std::size_t> to_index(std::string_view s) {
  s = trim(s);
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    return std::nullopt;
  }
  return v;
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return in;
}

RawDataset load_csv(const std::filesystem::path& path, const LoadOptions& opts) {
  std::ifstream in = open_or_throw(path);
  std::string line;
  std::size_t line_no = 0;

  std::vector<std::size_t> label_col;    // csv column -> label index
  std::vector<std::size_t> feature_col;  // csv column -> feature index
  std::vector<int> kind;                 // 0 label, 1 feature
  std::size_t columns = 0;
  std::size_t k = 0;
  std::size_t d = 0;
  bool have_header = false;

  RawDataset raw;
  raw.name = path.stem().string();
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view body = trim(content_of(line));
    if (body.empty()) continue;
    const auto cells = split(body, ',');
    if (!have_header) {
      have_header = true;
      columns = cells.size();
      kind.resize(columns);
      label_col.resize(columns);
      feature_col.resize(columns);
      for (std::size_t c = 0; c < columns; ++c) {
        const std::string_view name = trim(cells[c]);
        const auto idx =
            name.size() > 1 ? to_index(name.substr(1)) : std::nullopt;
        if (name.starts_with('y') && idx) {
          kind[c] = 0;
          label_col[c] = *idx;
          k = std::max(k, *idx + 1);
        } else if (name.starts_with('x') && idx && *idx >= 1) {
          kind[c] = 1;
          feature_col[c] = *idx - 1;
          d = std::max(d, *idx);
        } else {
          throw ParseError("csv header: unexpected column '" +
                               std::string(name) + "'",
                           line_no);
        }
      }
      if (opts.k != 0) {
        if (k > opts.k) throw SchemaError("csv: more label columns than k");
        k = opts.k;
      }
      if (opts.d != 0) {
        if (d > opts.d) throw SchemaError("csv: more feature columns than d");
        d = opts.d;
      }
      continue;
    }
    if (cells.size() != columns) {
      throw ParseError("csv: expected " + std::to_string(columns) +
                           " cells, got " + std::to_string(cells.size()),
                       line_no);
    }
    raw.features.resize(raw.features.size() + d, 0.0);
    raw.labels.resize(raw.labels.size() + k, 0.0);
    double* x = raw.features.data() + raw.n * d;
    double* y = raw.labels.data() + raw.n * k;
    for (std::size_t c = 0; c < columns; ++c) {
      const auto v = to_double(cells[c]);
      if (!v || !std::isfinite(*v)) {
        throw ParseError("csv: bad number '" + std::string(cells[c]) + "'",
                         line_no);
      }
      if (kind[c] == 0) {
        if (*v < 0.0) throw ParseError("csv: negative label weight", line_no);
        y[label_col[c]] = *v;
      } else {
        x[feature_col[c]] = *v;
      }
    }
    ++raw.n;
  }
  if (!have_header) throw ParseError("csv: missing header", 0);
  raw.k = k;
  raw.d = d;
  raw.splits.train.resize(raw.n);
  for (std::size_t i = 0; i < raw.n; ++i) raw.splits.train[i] = i;
  return raw;
}

double sum_row(const std::vector<double>& m, std::size_t row, std::size_t w) {
  double s = 0.0;
  for (std::size_t j = 0; j < w; ++j) s += m[row * w + j];
  return s;
}

}  // namespace

Format parse_format(std::string_view name) {
  if (name == "svmlight_multilabel" || name == "svmlight") {
    return Format::svmlight_multilabel;
  }
  if (name == "csv") return Format::csv;
  throw DomainError("unknown dataset format '" + std::string(name) + "'");
}

SparseRows read_svmlight_multilabel(const std::filesystem::path& path,
                                    const LoadOptions& opts) {
  std::ifstream in = open_or_throw(path);
  SparseRows rows;
  rows.row_start.push_back(0);
  std::size_t max_label = 0;
  std::size_t max_feature = 0;
  bool any_label = false;

  std::string line;
  std::size_t line_no = 0;
  std::unordered_set<std::size_t> seen;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view body = content_of(line);
    auto toks = tokens(body);
    if (toks.empty()) continue;

    std::vector<std::size_t> labels;
    std::size_t first_feature = 0;
    if (toks[0].find(':') == std::string_view::npos) {
      first_feature = 1;
      for (std::string_view part : split(toks[0], ',')) {
        if (trim(part).empty()) continue;
        const auto l = to_index(part);
        if (!l) {
          throw ParseError("svmlight: bad label '" + std::string(part) + "'",
                           line_no);
        }
        if (opts.k != 0 && *l >= opts.k) {
          throw SchemaError("svmlight: label " + std::to_string(*l) +
                            " out of range at line " + std::to_string(line_no));
        }
        labels.push_back(*l);
        max_label = std::max(max_label, *l);
        any_label = true;
      }
      std::sort(labels.begin(), labels.end());
      labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    }

    seen.clear();
    for (std::size_t t = first_feature; t < toks.size(); ++t) {
      const auto colon = toks[t].find(':');
      if (colon == std::string_view::npos) {
        throw ParseError("svmlight: expected idx:val, got '" +
                             std::string(toks[t]) + "'",
                         line_no);
      }
      const auto idx = to_index(toks[t].substr(0, colon));
      const auto val = to_double(toks[t].substr(colon + 1));
      if (!idx || *idx == 0 || !val || !std::isfinite(*val)) {
        throw ParseError("svmlight: bad feature '" + std::string(toks[t]) + "'",
                         line_no);
      }
      if (!seen.insert(*idx).second) {
        throw ParseError(
            "svmlight: duplicate feature index " + std::to_string(*idx),
            line_no);
      }
      if (opts.d != 0 && *idx > opts.d) {
        throw SchemaError("svmlight: feature index " + std::to_string(*idx) +
                          " exceeds d at line " + std::to_string(line_no));
      }
      max_feature = std::max(max_feature, *idx);
      rows.column.push_back(*idx - 1);
      rows.value.push_back(*val);
    }
    rows.label_sets.push_back(std::move(labels));
    rows.row_start.push_back(rows.column.size());
    ++rows.n;
  }
  rows.k = opts.k != 0 ? opts.k : (any_label ? max_label + 1 : 0);
  rows.d = opts.d != 0 ? opts.d : max_feature;
  return rows;
}

RawDataset densify(const SparseRows& rows, std::size_t max_dense_bytes) {
  const double bytes = static_cast<double>(rows.n) *
                       static_cast<double>(rows.d) * sizeof(double);
  if (bytes > static_cast<double>(max_dense_bytes)) {
    throw SchemaError("densify: " + std::to_string(rows.n) + " x " +
                      std::to_string(rows.d) + " exceeds the memory cap");
  }
  RawDataset raw;
  raw.n = rows.n;
  raw.d = rows.d;
  raw.k = rows.k;
  raw.features.assign(rows.n * rows.d, 0.0);
  raw.labels.assign(rows.n * rows.k, 0.0);
  for (std::size_t i = 0; i < rows.n; ++i) {
    for (std::size_t p = rows.row_start[i]; p < rows.row_start[i + 1]; ++p) {
      raw.features[i * rows.d + rows.column[p]] = rows.value[p];
    }
    for (std::size_t l : rows.label_sets[i]) raw.labels[i * rows.k + l] = 1.0;
  }
  raw.splits.train.resize(raw.n);
  for (std::size_t i = 0; i < raw.n; ++i) raw.splits.train[i] = i;
  return raw;
}

RawDataset load_multilabel(const std::filesystem::path& path, Format format,
                           const LoadOptions& opts) {
  RawDataset raw;
  if (format == Format::csv) {
    raw = load_csv(path, opts);
  } else {
    raw = densify(read_svmlight_multilabel(path, opts), opts.max_dense_bytes);
  }
  raw.name = path.stem().string();
  return raw;
}

RawDataset assemble_splits(std::string name, const RawDataset& train,
                           const RawDataset* dev, const RawDataset& test,
                           std::uint64_t seed) {
  auto check = [&](const RawDataset& part, const char* which) {
    if (part.d != train.d || part.k != train.k) {
      throw SchemaError(std::string("assemble_splits: ") + which +
                        " split has different dimensions than train");
    }
  };
  check(test, "test");
  if (dev) check(*dev, "dev");

  RawDataset out;
  out.name = std::move(name);
  out.d = train.d;
  out.k = train.k;
  auto append = [&](const RawDataset& part, std::vector<std::size_t>& idx) {
    for (std::size_t i = 0; i < part.n; ++i) idx.push_back(out.n + i);
    out.features.insert(out.features.end(), part.features.begin(),
                        part.features.end());
    out.labels.insert(out.labels.end(), part.labels.begin(),
                      part.labels.end());
    out.n += part.n;
  };

  if (dev) {
    append(train, out.splits.train);
    append(*dev, out.splits.dev);
  } else {
    std::vector<std::size_t> all;
    append(train, all);
    Rng rng(seed);
    for (std::size_t i = all.size(); i > 1; --i) {
      std::swap(all[i - 1], all[rng.below(i)]);
    }
    const std::size_t n_train = (all.size() * 3) / 4;
    out.splits.train.assign(all.begin(), all.begin() + n_train);
    out.splits.dev.assign(all.begin() + n_train, all.end());
    std::sort(out.splits.train.begin(), out.splits.train.end());
    std::sort(out.splits.dev.begin(), out.splits.dev.end());
  }
  append(test, out.splits.test);
  return out;
}

Dataset preprocess(const RawDataset& raw) {
  const std::size_t d = raw.d;
  const std::size_t k = raw.k;
  if (raw.features.size() != raw.n * d || raw.labels.size() != raw.n * k) {
    throw SchemaError("preprocess: matrix sizes do not match n, d, k");
  }

  // Old index -> new index for samples that carry at least one label.
  std::vector<std::size_t> remap(raw.n, raw.n);
  std::size_t kept = 0;
  for (std::size_t i = 0; i < raw.n; ++i) {
    if (sum_row(raw.labels, i, k) > 0.0) remap[i] = kept++;
  }
  auto filter = [&](const std::vector<std::size_t>& idx) {
    std::vector<std::size_t> out;
    for (std::size_t i : idx) {
      if (i >= raw.n) throw SchemaError("preprocess: split index out of range");
      if (remap[i] < raw.n) out.push_back(remap[i]);
    }
    return out;
  };

  Dataset ds;
  ds.name = raw.name;
  ds.n = kept;
  ds.d = d;
  ds.k = k;
  ds.splits = {filter(raw.splits.train), filter(raw.splits.dev),
               filter(raw.splits.test)};
  if (ds.splits.train.empty()) {
    throw Error("preprocess: train split is empty after removing unlabeled "
                "samples");
  }

  ds.features.resize(kept * d);
  ds.labels.reserve(kept);
  for (std::size_t i = 0; i < raw.n; ++i) {
    if (remap[i] == raw.n) continue;
    std::copy_n(raw.features.begin() + static_cast<std::ptrdiff_t>(i * d), d,
                ds.features.begin() + static_cast<std::ptrdiff_t>(remap[i] * d));
    std::vector<double> y(raw.labels.begin() + static_cast<std::ptrdiff_t>(i * k),
                          raw.labels.begin() +
                              static_cast<std::ptrdiff_t>((i + 1) * k));
    const double s = sum_row(raw.labels, i, k);
    // Rows that already sum to one are kept bit-for-bit.
    if (std::abs(s - 1.0) > 1e-12) {
      for (double& v : y) v /= s;
    }
    ds.labels.emplace_back(std::move(y));
  }

  const auto& train = ds.splits.train;
  const double m = static_cast<double>(train.size());
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (std::size_t i : train) mean += ds.features[i * d + j];
    mean /= m;
    double var = 0.0;
    for (std::size_t i : train) {
      const double c = ds.features[i * d + j] - mean;
      var += c * c;
    }
    const double sd = std::sqrt(var / m);
    const bool constant = sd <= 1e-12 * std::max(1.0, std::abs(mean));
    for (std::size_t i = 0; i < kept; ++i) {
      double& v = ds.features[i * d + j];
      v -= mean;
      if (!constant) v /= sd;
    }
  }
  return ds;
}

RawDataset to_raw(const Dataset& ds) {
  RawDataset raw;
  raw.name = ds.name;
  raw.n = ds.n;
  raw.d = ds.d;
  raw.k = ds.k;
  raw.features = ds.features;
  raw.labels.reserve(ds.n * ds.k);
  for (const ProbVector& y : ds.labels) {
    raw.labels.insert(raw.labels.end(), y.begin(), y.end());
  }
  raw.splits = ds.splits;
  return raw;
}

Dataset synth_generate(std::uint64_t seed, std::size_t n, std::size_t d,
                       std::size_t k, double noise) {
  if (n < 10 || d < 1 || k < 2) {
    throw DomainError("synth_generate: need n >= 10, d >= 1, k >= 2");
  }
  if (!std::isfinite(noise) || noise < 0.0) {
    throw DomainError("synth_generate: noise must be finite and >= 0");
  }
  Rng rng(seed);
  std::vector<double> w0(k * d);
  for (double& w : w0) w = rng.normal();

  Dataset ds;
  ds.name = "synthetic";
  ds.n = n;
  ds.d = d;
  ds.k = k;
  ds.features.resize(n * d);
  ds.labels.reserve(n);
  std::vector<double> scores(k);
  for (std::size_t i = 0; i < n; ++i) {
    double* x = ds.features.data() + i * d;
    for (std::size_t j = 0; j < d; ++j) x[j] = rng.normal();
    for (std::size_t c = 0; c < k; ++c) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += w0[c * d + j] * x[j];
      scores[c] = s;
    }
    for (std::size_t c = 0; c < k; ++c) scores[c] += noise * rng.normal();
    ds.labels.push_back(softargmax(scores));
  }

  const std::size_t n_train = n * 6 / 10;
  const std::size_t n_dev = n * 2 / 10;
  for (std::size_t i = 0; i < n; ++i) {
    if (i < n_train) {
      ds.splits.train.push_back(i);
    } else if (i < n_train + n_dev) {
      ds.splits.dev.push_back(i);
    } else {
      ds.splits.test.push_back(i);
    }
  }
  return ds;
}

}  // namespace fitzloss::data

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "fitzloss/cli.hpp"
#include "fitzloss/errors.hpp"
#include "json.hpp"

namespace fitzloss::cli {

namespace {

using nlohmann::json;

std::filesystem::path resolve(const std::filesystem::path& base,
                              const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace

std::vector<DatasetEntry> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open manifest " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& ex) {
    throw ParseError(std::string("manifest: ") + ex.what(), 0);
  }
  if (!doc.contains("datasets") || !doc["datasets"].is_array()) {
    throw SchemaError("manifest: expected a \"datasets\" array");
  }
  const std::filesystem::path base = path.parent_path();
  std::vector<DatasetEntry> entries;
  try {
    for (const json& e : doc["datasets"]) {
      DatasetEntry entry;
      entry.name = e.at("name").get<std::string>();
      if (e.contains("synthetic")) {
        const json& s = e["synthetic"];
        SyntheticSpec spec;
        spec.seed = s.value("seed", spec.seed);
        spec.n = s.value("n", spec.n);
        spec.d = s.value("d", spec.d);
        spec.k = s.value("k", spec.k);
        spec.noise = s.value("noise", spec.noise);
        entry.synthetic = spec;
        entry.k = spec.k;
        entry.d = spec.d;
      } else {
        entry.format = data::parse_format(
            e.value("format", std::string("svmlight_multilabel")));
        entry.k = e.value("k", std::size_t{0});
        entry.d = e.value("d", std::size_t{0});
        entry.train = resolve(base, e.at("train").get<std::string>());
        entry.test = resolve(base, e.at("test").get<std::string>());
        if (e.contains("dev")) {
          entry.dev = resolve(base, e["dev"].get<std::string>());
        }
        entry.max_dense_bytes = e.value("max_dense_bytes", entry.max_dense_bytes);
      }
      entries.push_back(std::move(entry));
    }
  } catch (const json::exception& ex) {
    throw SchemaError(std::string("manifest: ") + ex.what());
  }
  return entries;
}

data::Dataset load_dataset(const DatasetEntry& entry, std::uint64_t seed) {
  if (entry.synthetic) {
    const SyntheticSpec& s = *entry.synthetic;
    data::Dataset ds = data::synth_generate(s.seed, s.n, s.d, s.k, s.noise);
    ds.name = entry.name;
    return ds;
  }
  data::LoadOptions opts;
  opts.k = entry.k;
  opts.d = entry.d;
  opts.max_dense_bytes = entry.max_dense_bytes;
  const data::RawDataset train =
      data::load_multilabel(entry.train, entry.format, opts);
  const data::RawDataset test =
      data::load_multilabel(entry.test, entry.format, opts);
  std::optional<data::RawDataset> dev;
  if (entry.dev) dev = data::load_multilabel(*entry.dev, entry.format, opts);
  const data::RawDataset raw = data::assemble_splits(
      entry.name, train, dev ? &*dev : nullptr, test, seed);
  return data::preprocess(raw);
}

// ---------------------------------------------------------------------------

void write_model(const std::filesystem::path& path, const ModelFile& model) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write model file " + path.string());
  const auto& w = model.weights;
  out << w.rows() << ' ' << w.cols() << ' ' << model.loss.name() << ' '
      << std::setprecision(17) << model.lambda << ' ' << model.seed << '\n';
  for (std::size_t r = 0; r < w.rows(); ++r) {
    for (std::size_t c = 0; c < w.cols(); ++c) {
      if (c > 0) out << ' ';
      out << w(r, c);
    }
    out << '\n';
  }
  if (!out) throw Error("failed writing model file " + path.string());
}

ModelFile read_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open model file " + path.string());
  std::size_t k = 0;
  std::size_t d = 0;
  std::string loss;
  ModelFile model;
  if (!(in >> k >> d >> loss >> model.lambda >> model.seed)) {
    throw ParseError("model file: bad header", 1);
  }
  model.loss = LossSpec::parse(loss);
  std::vector<double> values(k * d);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(in >> values[i])) {
      throw ParseError("model file: expected " + std::to_string(k * d) +
                           " weights",
                       2 + i / std::max<std::size_t>(d, 1));
    }
  }
  model.weights = train::WeightMatrix(k, d, std::move(values));
  return model;
}

std::vector<double> parse_vector(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(cell, &used);
    } catch (const std::exception&) {
      throw ParseError("cannot parse number '" + cell + "'", 0);
    }
    while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) {
      ++used;
    }
    if (used != cell.size() || !std::isfinite(v)) {
      throw ParseError("cannot parse number '" + cell + "'", 0);
    }
    out.push_back(v);
  }
  if (out.empty()) throw ParseError("empty vector", 0);
  return out;
}

}  // namespace fitzloss::cli

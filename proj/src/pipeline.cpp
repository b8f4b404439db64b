#include "fairmix/pipeline.hpp"

#include "fairmix/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace fairmix {

namespace fs = std::filesystem;

namespace {

std::string join(const std::vector<std::string>& items, char sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out.push_back(sep);
    out += items[i];
  }
  return out;
}

const std::vector<std::string> kKnownKeys = {
    "format_version",        "dataset",          "data",
    "schema",                "out",              "seed",
    "test_fraction",         "encoder.k1",       "encoder.k2",
    "encoder.p",             "encoder.epochs",   "encoder.batch_size",
    "encoder.val_fraction",  "encoder.learning_rate", "encoder.parallel",
    "debias.k",              "debias.variance_target", "debias.include_intercept",
    "debias.sensitive",      "probe.learning_rate",    "probe.epochs",
};

fs::path resolve(const fs::path& base, const std::string& value) {
  const fs::path p(value);
  return p.is_absolute() ? p : (base / p).lexically_normal();
}

// Fails unless `dir/meta_name` exists and carries `hash`.
KeyValues require_stage(const fs::path& dir, const char* meta_name, const std::string& hash, const char* stage) {
  const fs::path meta_path = dir / meta_name;
  if (!fs::exists(meta_path)) {
    throw ConfigError(std::string("missing ") + meta_path.string() + ": run `fairmix " + stage + "` first");
  }
  KeyValues meta = KeyValues::load(meta_path);
  if (meta.get_or("config_hash", "") != hash) {
    throw ConfigError(meta_path.string() + " was produced with a different config; rerun `fairmix " + stage + "`");
  }
  return meta;
}

std::string format_fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

template <typename F>
auto run_stage(const char* name, F&& body) {
  const std::string prefix = std::string("stage ") + name + ": ";
  try {
    return body();
  } catch (const ConfigError& e) {
    throw ConfigError(prefix + e.what());
  } catch (const DataError& e) {
    throw DataError(prefix + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(prefix + e.what());
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(prefix + e.what());
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

PipelineConfig PipelineConfig::parse(std::string_view text, const fs::path& base_dir, const std::string& source) {
  const KeyValues kv = KeyValues::parse(text, source);
  for (const auto& [key, value] : kv.entries()) {
    if (std::find(kKnownKeys.begin(), kKnownKeys.end(), key) == kKnownKeys.end()) {
      throw ConfigError(source + ": unknown key '" + key + "'");
    }
  }
  if (kv.get_or("format_version", "1") != std::to_string(kFormatVersion)) {
    throw ConfigError(source + ": unsupported config format_version");
  }
  PipelineConfig c;
  c.dataset = kv.get("dataset");
  c.data = resolve(base_dir, kv.get("data"));
  c.schema = resolve(base_dir, kv.get("schema"));
  c.out = resolve(base_dir, kv.get_or("out", "runs/" + c.dataset));
  const long long seed = kv.get_int("seed");
  if (seed < 0) throw ConfigError(source + ": seed must be non-negative");
  c.seed = static_cast<std::uint64_t>(seed);
  c.test_fraction = kv.get_double_or("test_fraction", 0.5);
  if (!(c.test_fraction > 0.0 && c.test_fraction < 1.0)) throw ConfigError(source + ": test_fraction must lie in (0, 1)");

  const long long p = kv.get_int("encoder.p");
  const long long k1 = kv.get_int("encoder.k1");
  const long long k2 = kv.get_int("encoder.k2");
  if (p < 2 || k1 < 1 || k2 < 1) throw ConfigError(source + ": encoder.p >= 2 and encoder.k1, encoder.k2 >= 1 required");
  c.encoder = MixedEncoderConfig::with_dimension(static_cast<Index>(p), static_cast<int>(k1), static_cast<int>(k2));
  c.encoder.training.epochs = static_cast<int>(kv.get_int_or("encoder.epochs", 100));
  c.encoder.training.batch_size = static_cast<Index>(kv.get_int_or("encoder.batch_size", 64));
  c.encoder.training.val_fraction = kv.get_double_or("encoder.val_fraction", 0.1);
  c.encoder.training.adam.learning_rate = kv.get_double_or("encoder.learning_rate", 1e-3);
  c.encoder.parallel = kv.get_bool_or("encoder.parallel", false);
  if (c.encoder.training.epochs < 0 || c.encoder.training.batch_size < 1) {
    throw ConfigError(source + ": encoder.epochs >= 0 and encoder.batch_size >= 1 required");
  }

  c.projection.k = static_cast<Index>(kv.get_int_or("debias.k", 20));
  c.projection.include_intercept = kv.get_bool_or("debias.include_intercept", false);
  if (kv.contains("debias.variance_target")) {
    const double target = kv.get_double("debias.variance_target");
    if (!(target > 0.0 && target <= 1.0)) throw ConfigError(source + ": debias.variance_target must lie in (0, 1]");
    c.projection.variance_target = target;
  }
  if (c.projection.k < 1) throw ConfigError(source + ": debias.k must be >= 1");
  for (const auto& name : split(kv.get_or("debias.sensitive", ""), ',')) {
    const std::string trimmed(trim(name));
    if (!trimmed.empty()) c.sensitive.push_back(trimmed);
  }

  c.probe.learning_rate = kv.get_double_or("probe.learning_rate", 0.01);
  c.probe.epochs = static_cast<int>(kv.get_int_or("probe.epochs", 500));
  if (c.probe.epochs < 0) throw ConfigError(source + ": probe.epochs must be >= 0");
  return c;
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("config file not found: " + path.string());
  return parse(read_file(path), fs::absolute(path).parent_path(), path.string());
}

std::string PipelineConfig::canonical() const {
  KeyValues kv;
  kv.set("format_version", kFormatVersion);
  kv.set("dataset", dataset);
  kv.set("data", data.filename().string());
  kv.set("data_hash", fs::exists(data) ? file_hash(data) : std::string("missing"));
  kv.set("schema", schema.filename().string());
  kv.set("schema_hash", fs::exists(schema) ? file_hash(schema) : std::string("missing"));
  kv.set("seed", std::to_string(seed));
  kv.set("test_fraction", test_fraction);
  kv.set("encoder.k1", encoder.hidden_num_cat);
  kv.set("encoder.k2", encoder.hidden_cat_num);
  kv.set("encoder.latent_num", static_cast<long long>(encoder.latent_num));
  kv.set("encoder.latent_cat", static_cast<long long>(encoder.latent_cat));
  kv.set("encoder.epochs", encoder.training.epochs);
  kv.set("encoder.batch_size", static_cast<long long>(encoder.training.batch_size));
  kv.set("encoder.val_fraction", encoder.training.val_fraction);
  kv.set("encoder.learning_rate", encoder.training.adam.learning_rate);
  kv.set("debias.k", static_cast<long long>(projection.k));
  kv.set("debias.include_intercept", projection.include_intercept);
  kv.set("debias.variance_target",
         projection.variance_target ? format_double(*projection.variance_target) : std::string("none"));
  kv.set("debias.sensitive", join(sensitive, ','));
  kv.set("probe.learning_rate", probe.learning_rate);
  kv.set("probe.epochs", probe.epochs);
  return kv.to_string();
}

std::string PipelineConfig::hash() const { return hex64(fnv1a(canonical())); }

std::uint64_t split_seed(const PipelineConfig& config) { return derive_seed(config.seed, 1); }
std::uint64_t encoder_seed(const PipelineConfig& config) { return derive_seed(config.seed, 2); }

// ---------------------------------------------------------------------------
// Stages

EncodedDataset load_prepared(const fs::path& dir) {
  EncodedDataset ds;
  ds.x_num = load_matrix(dir / artifact::x_num);
  ds.x_cat = load_matrix(dir / artifact::x_cat);
  ds.s = load_matrix(dir / artifact::s);
  const Matrix y = load_matrix(dir / artifact::y);
  if (y.cols() != 1) throw DataError("y.mat must have a single column");
  ds.y = y.col(0);
  ds.levels = LevelMap::load(dir / artifact::levels);
  if (ds.x_cat.rows() != ds.n() || ds.s.rows() != ds.n() || ds.y.size() != ds.n()) {
    throw DataError("prepared artifacts in " + dir.string() + " disagree on the row count");
  }
  return ds;
}

StageArtifacts cmd_prepare(const PipelineConfig& config) {
  const std::string hash = config.hash();
  const Schema schema = Schema::load(config.schema);
  const RawTable raw = load_csv(config.data, schema);
  const EncodedDataset ds = encode(raw, schema);
  const SplitIndices split = stratified_split(ds.y, config.test_fraction, split_seed(config));

  fs::create_directories(config.out);
  save_matrix(config.out / artifact::x_num, ds.x_num);
  save_matrix(config.out / artifact::x_cat, ds.x_cat);
  save_matrix(config.out / artifact::s, ds.s);
  save_matrix(config.out / artifact::y, Matrix(ds.y));
  ds.levels.save(config.out / artifact::levels);
  split.save(config.out / artifact::split);

  StageArtifacts out;
  out.meta.set("format_version", kFormatVersion);
  out.meta.set("stage", std::string("prepare"));
  out.meta.set("config_hash", hash);
  out.meta.set("dataset", config.dataset);
  out.meta.set("rows", ds.n());
  out.meta.set("dropped_rows", raw.dropped_rows);
  out.meta.set("d1", ds.d1());
  out.meta.set("d2", ds.d2());
  out.meta.set("sensitive_columns", ds.s_width());
  out.meta.set("train_rows", split.train.size());
  out.meta.set("test_rows", split.test.size());
  out.meta.set("split_seed", std::to_string(split.seed));
  out.meta.save(config.out / artifact::prepare_meta);
  out.files = {artifact::x_num, artifact::x_cat, artifact::s, artifact::y,
               artifact::levels, artifact::split, artifact::prepare_meta};
  return out;
}

StageArtifacts cmd_train_embed(const PipelineConfig& config) {
  const std::string hash = config.hash();
  require_stage(config.out, artifact::prepare_meta, hash, "prepare");
  const EncodedDataset ds = load_prepared(config.out);

  MixedEncoderConfig encoder = config.encoder;
  encoder.seed = encoder_seed(config);
  const MixedEncoder trained = train_mixed(ds, encoder);
  const MixedRepresentation rep = embed(trained, ds);

  save_params(config.out / artifact::model_num_cat, trained.num_cat);
  save_params(config.out / artifact::model_cat_num, trained.cat_num);
  save_matrix(config.out / artifact::z, rep.z);
  write_file(config.out / artifact::history_num_cat, trained.history_num_cat.to_csv());
  write_file(config.out / artifact::history_cat_num, trained.history_cat_num.to_csv());

  const auto widths = [](const MlpConfig& c) {
    std::vector<std::string> w;
    for (const Index v : c.widths) w.push_back(std::to_string(v));
    return join(w, ' ');
  };
  StageArtifacts out;
  out.meta.set("format_version", kFormatVersion);
  out.meta.set("stage", std::string("train-embed"));
  out.meta.set("config_hash", hash);
  out.meta.set("encoder_seed", std::to_string(encoder.seed));
  out.meta.set("rows", rep.z.rows());
  out.meta.set("p", rep.p());
  out.meta.set("latent_num", rep.latent_num);
  out.meta.set("latent_cat", rep.latent_cat);
  out.meta.set("num_cat.widths", widths(trained.num_cat.config));
  out.meta.set("cat_num.widths", widths(trained.cat_num.config));
  out.meta.set("epochs", encoder.training.epochs);
  const auto put_history = [&](const std::string& prefix, const TrainHistory& h) {
    if (h.train_loss.empty()) return;
    out.meta.set(prefix + ".first_train_loss", h.train_loss.front());
    out.meta.set(prefix + ".final_train_loss", h.train_loss.back());
    if (!h.val_loss.empty()) {
      out.meta.set(prefix + ".first_val_loss", h.val_loss.front());
      out.meta.set(prefix + ".final_val_loss", h.val_loss.back());
    }
  };
  put_history("num_cat", trained.history_num_cat);
  put_history("cat_num", trained.history_cat_num);
  out.meta.save(config.out / artifact::embed_meta);
  out.files = {artifact::model_num_cat, artifact::model_cat_num, artifact::z,
               artifact::history_num_cat, artifact::history_cat_num, artifact::embed_meta};
  return out;
}

StageArtifacts cmd_debias(const PipelineConfig& config) {
  const std::string hash = config.hash();
  require_stage(config.out, artifact::embed_meta, hash, "train-embed");
  const EncodedDataset ds = load_prepared(config.out);
  const Matrix z = load_matrix(config.out / artifact::z);
  if (z.rows() != ds.n()) throw DataError("z.mat row count does not match the prepared dataset");
  if (!config.projection.variance_target && config.projection.k > std::min(z.rows(), z.cols())) {
    throw std::invalid_argument("debias.k=" + std::to_string(config.projection.k) + " exceeds min(n, p)=" +
                                std::to_string(std::min(z.rows(), z.cols())));
  }

  std::vector<std::string> attributes = config.sensitive;
  if (attributes.empty()) {
    for (const auto& b : ds.levels.sensitive) attributes.push_back(b.name);
  }
  const Matrix s = build_sensitive_matrix(ds, attributes, false);
  const DebiasedRepresentation debiased = debias(z, s, config.projection);
  const auto singular = rank_k_svd(z, std::min(z.rows(), z.cols())).singular;
  const double explained = explained_variance(singular)(debiased.k - 1);

  save_matrix(config.out / artifact::z_hat, debiased.z_hat);

  StageArtifacts out;
  out.meta.set("format_version", kFormatVersion);
  out.meta.set("stage", std::string("debias"));
  out.meta.set("config_hash", hash);
  out.meta.set("k", debiased.k);
  out.meta.set("include_intercept", config.projection.include_intercept);
  out.meta.set("sensitive", join(attributes, ','));
  out.meta.set("sensitive_columns", join(sensitive_column_names(ds.levels, attributes, config.projection.include_intercept), ','));
  out.meta.set("explained_variance", explained);
  out.meta.set("residual", debiased.residual);
  out.meta.set("relative_residual", debiased.relative_residual);
  out.meta.save(config.out / artifact::debias_meta);
  out.files = {artifact::z_hat, artifact::debias_meta};
  return out;
}

StageArtifacts cmd_evaluate(const PipelineConfig& config) {
  const std::string hash = config.hash();
  require_stage(config.out, artifact::debias_meta, hash, "debias");
  const EncodedDataset ds = load_prepared(config.out);
  const SplitIndices split = SplitIndices::load(config.out / artifact::split);
  const Matrix z = load_matrix(config.out / artifact::z);
  const Matrix z_hat = load_matrix(config.out / artifact::z_hat);

  std::vector<std::string> attributes;
  for (const auto& b : ds.levels.sensitive) attributes.push_back(b.name);
  const std::vector<std::string> names = sensitive_column_names(ds.levels, attributes);

  EvaluationOutput biased = evaluate_representation(z, ds.y, ds.s, names, split, config.probe);
  EvaluationOutput fair = evaluate_representation(z_hat, ds.y, ds.s, names, split, config.probe);
  biased.report.dataset = fair.report.dataset = config.dataset;
  biased.report.representation = "biased";
  fair.report.representation = "debiased";

  write_file(config.out / artifact::report_biased, biased.report.to_csv());
  write_file(config.out / artifact::report_debiased, fair.report.to_csv());
  write_file(config.out / artifact::roc_biased, roc_csv(biased.roc));
  write_file(config.out / artifact::roc_debiased, roc_csv(fair.roc));

  StageArtifacts out;
  out.meta.set("format_version", kFormatVersion);
  out.meta.set("stage", std::string("evaluate"));
  out.meta.set("config_hash", hash);
  out.meta.set("test_rows", split.test.size());
  for (const auto* r : {&biased.report, &fair.report}) {
    out.meta.set(r->representation + ".accuracy", format_fixed(r->accuracy, 4));
    out.meta.set(r->representation + ".roc_auc", format_fixed(r->roc_auc, 4));
    for (const auto& a : r->attributes) {
      out.meta.set(r->representation + "." + a.name + ".di_x100", a.di ? format_fixed(*a.di * 100.0, 2) : "undefined");
      out.meta.set(r->representation + "." + a.name + ".spd", format_fixed(a.spd, 4));
    }
  }
  out.meta.save(config.out / artifact::evaluate_meta);
  out.files = {artifact::report_biased, artifact::report_debiased, artifact::roc_biased,
               artifact::roc_debiased, artifact::evaluate_meta};
  return out;
}

// ---------------------------------------------------------------------------
// Manifest

std::string RunManifest::deterministic_part() const {
  KeyValues kv;
  kv.set("format_version", kFormatVersion);
  kv.set("config_hash", config_hash);
  for (const auto& a : artifacts) kv.set("artifact." + a.path, a.hash);
  for (const auto& [k, v] : summaries.entries()) kv.set("summary." + k, v);
  return kv.to_string();
}

std::string RunManifest::to_string() const {
  std::string out = deterministic_part();
  for (const auto& [k, v] : timings.entries()) out += "timing." + k + " = " + v + "\n";
  return out;
}

RunManifest cmd_pipeline(const PipelineConfig& config) {
  using clock = std::chrono::steady_clock;
  RunManifest manifest;
  manifest.config_hash = config.hash();

  const auto timed = [&](const char* name, auto&& body) {
    const auto start = clock::now();
    StageArtifacts produced = run_stage(name, body);
    manifest.timings.set(std::string(name) + ".seconds",
                         format_fixed(std::chrono::duration<double>(clock::now() - start).count(), 3));
    for (const auto& f : produced.files) manifest.artifacts.push_back({f, ""});
    return produced;
  };

  timed("prepare", [&] { return cmd_prepare(config); });
  const StageArtifacts embed_stage = timed("train-embed", [&] { return cmd_train_embed(config); });
  const StageArtifacts debias_stage = timed("debias", [&] { return cmd_debias(config); });
  const StageArtifacts eval_stage = timed("evaluate", [&] { return cmd_evaluate(config); });

  for (auto& a : manifest.artifacts) a.hash = file_hash(config.out / a.path);
  for (const auto& [k, v] : embed_stage.meta.entries()) {
    if (k.find("_loss") != std::string::npos) manifest.summaries.set(k, v);
  }
  manifest.summaries.set("debias.k", debias_stage.meta.get("k"));
  manifest.summaries.set("debias.relative_residual", debias_stage.meta.get("relative_residual"));
  for (const auto& [k, v] : eval_stage.meta.entries()) {
    if (k.rfind("biased.", 0) == 0 || k.rfind("debiased.", 0) == 0) manifest.summaries.set(k, v);
  }
  write_file(config.out / artifact::manifest, manifest.to_string());
  return manifest;
}

FairnessReport parse_report(std::string_view text, const std::string& source) {
  FairnessReport report;
  const auto lines = split(text, '\n');
  if (lines.empty() || trim(lines[0]) != kReportHeader) throw DataError(source + ": unexpected report header");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const auto cells = split(trim(lines[i]), ',');
    if (cells.size() != 8) throw DataError(source + ":" + std::to_string(i + 1) + ": expected 8 fields");
    const std::string ctx = source + ":" + std::to_string(i + 1);
    report.dataset = cells[0];
    report.representation = cells[1];
    report.accuracy = parse_double(cells[2], ctx);
    report.roc_auc = parse_double(cells[3], ctx);
    AttributeFairness a;
    a.name = cells[4];
    if (cells[5] != "undefined") a.di = parse_double(cells[5], ctx) / 100.0;
    a.spd = parse_double(cells[6], ctx);
    a.passes_80 = cells[7] == "true";
    report.attributes.push_back(std::move(a));
  }
  return report;
}

}  // namespace fairmix

#include "fairmix/pipeline.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>

using namespace fairmix;
namespace fs = std::filesystem;

namespace {

std::string german_config(const fs::path& out, const std::string& extra = "") {
  const fs::path root = test::source_root();
  return "format_version = 1\n"
         "dataset = german\n"
         "data = " + (root / "data" / "german.csv").string() + "\n"
         "schema = " + (root / "configs" / "german.schema").string() + "\n"
         "out = " + out.string() + "\n"
         "seed = 3\n"
         "encoder.k1 = 3\n"
         "encoder.k2 = 1\n"
         "encoder.p = 12\n"
         "encoder.epochs = 2\n"
         "encoder.batch_size = 64\n"
         "debias.k = 5\n"
         "debias.include_intercept = true\n"
         "debias.sensitive = age\n"
         "probe.epochs = 50\n" + extra;
}

PipelineConfig small_config(const fs::path& out, const std::string& extra = "") {
  return PipelineConfig::parse(german_config(out, extra), out.parent_path(), "test");
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(FAIRMIX_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, ParsesAndResolvesRelativePaths) {
  const auto c = PipelineConfig::parse(
      "dataset = d\ndata = ../data/x.csv\nschema = s.schema\nseed = 4\nencoder.k1 = 2\nencoder.k2 = 3\n"
      "encoder.p = 9\ndebias.sensitive = sex, race\n",
      "/base/configs", "t");
  EXPECT_EQ(c.data, fs::path("/base/data/x.csv"));
  EXPECT_EQ(c.schema, fs::path("/base/configs/s.schema"));
  EXPECT_EQ(c.encoder.latent_num, 5);
  EXPECT_EQ(c.encoder.latent_cat, 4);
  EXPECT_EQ(c.encoder.training.epochs, 100);
  EXPECT_EQ(c.encoder.training.batch_size, 64);
  EXPECT_EQ(c.projection.k, 20);
  EXPECT_EQ(c.sensitive, (std::vector<std::string>{"sex", "race"}));
}

TEST(Config, Rejections) {
  test::TempDir dir("cfg");
  EXPECT_THROW(small_config(dir.path() / "o", "bogus = 1\n"), ConfigError);
  EXPECT_THROW(small_config(dir.path() / "o", "test_fraction = 1.5\n"), ConfigError);
  EXPECT_THROW(PipelineConfig::parse("dataset = d\n", "/", "t"), ConfigError);
  EXPECT_THROW(PipelineConfig::load(dir.path() / "none.conf"), ConfigError);
}

TEST(Config, HashIgnoresOutputDirectory) {
  test::TempDir dir("cfg");
  EXPECT_EQ(small_config(dir.path() / "a").hash(), small_config(dir.path() / "b").hash());
  EXPECT_NE(small_config(dir.path() / "a").hash(), small_config(dir.path() / "a", "probe.learning_rate = 0.02\n").hash());
}

TEST(Config, ShippedConfigsLoad) {
  const auto german = PipelineConfig::load(test::source_root() / "configs" / "german.conf");
  EXPECT_EQ(german.encoder.p(), 100);
  EXPECT_EQ(german.encoder.hidden_num_cat, 3);
  EXPECT_EQ(german.projection.k, 20);
  const auto adult = PipelineConfig::load(test::source_root() / "configs" / "adult.conf");
  EXPECT_EQ(adult.encoder.p(), 200);
  EXPECT_EQ(adult.encoder.hidden_cat_num, 5);
  EXPECT_EQ(adult.projection.k, 18);
  EXPECT_EQ(adult.sensitive, (std::vector<std::string>{"sex", "race"}));
}

TEST(Stages, PrepareGerman) {
  test::TempDir dir("prep");
  const auto config = small_config(dir.path() / "out");
  cmd_prepare(config);
  const auto ds = load_prepared(config.out);
  EXPECT_EQ(ds.n(), 1000);
  EXPECT_EQ(ds.s_width(), 1);
  EXPECT_TRUE(((ds.s.array() == 0.0) || (ds.s.array() == 1.0)).all());
  EXPECT_EQ(ds.levels.sensitive[0].encoding, SensitiveEncoding::german_age);
  const auto split = SplitIndices::load(config.out / artifact::split);
  EXPECT_EQ(split.train.size() + split.test.size(), 1000u);

  const std::string first = read_file(config.out / artifact::x_cat) + read_file(config.out / artifact::split);
  cmd_prepare(config);
  EXPECT_EQ(read_file(config.out / artifact::x_cat) + read_file(config.out / artifact::split), first);
}

TEST(Stages, OrderIsEnforced) {
  test::TempDir dir("order");
  const auto config = small_config(dir.path() / "out");
  try {
    cmd_evaluate(config);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("run `fairmix debias` first"), std::string::npos) << e.what();
  }
  EXPECT_THROW(cmd_train_embed(config), ConfigError);
  cmd_prepare(config);
  EXPECT_THROW(cmd_debias(config), ConfigError);
  const auto changed = small_config(dir.path() / "out", "probe.learning_rate = 0.02\n");
  EXPECT_THROW(cmd_train_embed(changed), ConfigError);
}

TEST(Stages, EndToEndArtifacts) {
  test::TempDir dir("e2e");
  const auto config = small_config(dir.path() / "out");
  const RunManifest manifest = cmd_pipeline(config);

  const Matrix z = load_matrix(config.out / artifact::z);
  EXPECT_EQ(z.rows(), 1000);
  EXPECT_EQ(z.cols(), 12);
  const std::string history = read_file(config.out / artifact::history_cat_num);
  EXPECT_EQ(std::count(history.begin(), history.end(), '\n'), 3);
  EXPECT_EQ(history.substr(0, history.find('\n')), "epoch,train_loss,val_loss");

  const auto meta = KeyValues::load(config.out / artifact::debias_meta);
  EXPECT_LT(meta.get_double("relative_residual"), 1e-8);
  EXPECT_EQ(meta.get("sensitive_columns"), "age,intercept");

  const auto biased = parse_report(read_file(config.out / artifact::report_biased), "biased");
  const auto fair = parse_report(read_file(config.out / artifact::report_debiased), "debiased");
  EXPECT_EQ(biased.representation, "biased");
  EXPECT_EQ(fair.representation, "debiased");
  ASSERT_EQ(fair.attributes.size(), 1u);
  EXPECT_EQ(fair.attributes[0].name, "age");
  const std::string csv = read_file(config.out / artifact::report_debiased);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), kReportHeader);

  EXPECT_EQ(manifest.artifacts.size(), 20u);
  for (const auto& a : manifest.artifacts) EXPECT_EQ(a.hash, file_hash(config.out / a.path)) << a.path;
  EXPECT_EQ(read_file(config.out / artifact::manifest), manifest.to_string());

  const RunManifest again = cmd_pipeline(small_config(dir.path() / "again"));
  EXPECT_EQ(again.deterministic_part(), manifest.deterministic_part());
}

TEST(Stages, DebiasRejectsOversizedK) {
  test::TempDir dir("bigk");
  auto big = small_config(dir.path() / "out");
  big.projection.k = 13;
  cmd_prepare(big);
  cmd_train_embed(big);
  EXPECT_THROW(cmd_debias(big), std::invalid_argument);
}

TEST(Stages, SensitiveColumnNeverReachesEncoder) {
  test::TempDir dir("sens");
  const fs::path root = test::source_root();
  std::string data = read_file(root / "data" / "german.csv");
  // shift every age by one year; only S may change
  std::string shifted;
  std::size_t line_start = 0;
  bool header = true;
  while (line_start < data.size()) {
    std::size_t end = data.find('\n', line_start);
    if (end == std::string::npos) end = data.size();
    std::string line = data.substr(line_start, end - line_start);
    if (!header && !line.empty()) {
      auto cells = split(line, ',');
      cells[12] = std::to_string(std::stoi(cells[12]) + 1);
      line.clear();
      for (std::size_t i = 0; i < cells.size(); ++i) line += (i ? "," : "") + cells[i];
    }
    header = false;
    shifted += line + "\n";
    line_start = end + 1;
  }
  write_file(dir.path() / "shifted.csv", shifted);

  const auto a = small_config(dir.path() / "a");
  auto b = small_config(dir.path() / "b");
  b.data = dir.path() / "shifted.csv";
  cmd_prepare(a);
  cmd_train_embed(a);
  cmd_prepare(b);
  cmd_train_embed(b);
  EXPECT_NE(read_file(a.out / artifact::s), read_file(b.out / artifact::s));
  EXPECT_EQ(read_file(a.out / artifact::z), read_file(b.out / artifact::z));
}

TEST(Report, ParseRoundTrip) {
  FairnessReport r;
  r.dataset = "adult";
  r.representation = "debiased";
  r.accuracy = 0.8;
  r.roc_auc = 0.9;
  r.attributes.push_back({"sex", 0.85, 0.02, true});
  r.attributes.push_back({"race", std::nullopt, 0.1, false});
  const auto back = parse_report(r.to_csv(), "t");
  EXPECT_EQ(back.to_csv(), r.to_csv());
  EXPECT_THROW(parse_report("nonsense\n", "t"), DataError);
}

class Cli : public ::testing::Test {
 protected:
  test::TempDir dir{"cli"};
  fs::path write_config(const std::string& extra = "", const std::string& overrides = "") {
    std::string text = german_config(dir.path() / "out", extra);
    if (!overrides.empty()) text = overrides;
    const fs::path path = dir.path() / "c.conf";
    write_file(path, text);
    return path;
  }
};

TEST_F(Cli, SuccessAndSeedOverride) {
  const auto conf = write_config();
  EXPECT_EQ(run_cli("prepare --config " + conf.string()), 0);
  EXPECT_EQ(run_cli("prepare --config " + conf.string() + " --seed 9 --out " + (dir.path() / "o9").string()), 0);
  const auto meta = KeyValues::load(dir.path() / "o9" / artifact::prepare_meta);
  EXPECT_EQ(meta.get("split_seed"), std::to_string(derive_seed(9, 1)));
}

TEST_F(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run_cli(""), 1);
  EXPECT_EQ(run_cli("frobnicate"), 1);
  EXPECT_EQ(run_cli("prepare"), 1);
  EXPECT_EQ(run_cli("prepare --config " + (dir.path() / "missing.conf").string()), 1);
  EXPECT_EQ(run_cli("evaluate --config " + write_config().string()), 1);
  EXPECT_EQ(run_cli("--help"), 0);
}

TEST_F(Cli, MissingSchemaDistinctFromDataErrors) {
  const auto root = test::source_root();
  std::string text = german_config(dir.path() / "out");
  const std::string schema_line = "schema = " + (root / "configs" / "german.schema").string();
  text.replace(text.find(schema_line), schema_line.size(), "schema = " + (dir.path() / "none.schema").string());
  EXPECT_EQ(run_cli("prepare --config " + write_config("", text).string()), 1);

  write_file(dir.path() / "ragged.csv", read_file(root / "data" / "german.csv") + "A11,6\n");
  const std::string data_line = "data = " + (root / "data" / "german.csv").string();
  text = german_config(dir.path() / "out");
  text.replace(text.find(data_line), data_line.size(), "data = " + (dir.path() / "ragged.csv").string());
  EXPECT_EQ(run_cli("prepare --config " + write_config("", text).string()), 2);
}

TEST_F(Cli, RankDeficientSensitiveExitsThree) {
  std::string text = german_config(dir.path() / "out");
  text.replace(text.find("debias.sensitive = age"), 22, "debias.sensitive = age,age");
  const auto conf = write_config("", text);
  EXPECT_EQ(run_cli("prepare --config " + conf.string()), 0);
  EXPECT_EQ(run_cli("train-embed --config " + conf.string()), 0);
  EXPECT_EQ(run_cli("debias --config " + conf.string()), 3);
}

TEST_F(Cli, PipelineIsReproducible) {
  const auto conf = write_config();
  EXPECT_EQ(run_cli("pipeline --config " + conf.string()), 0);
  const auto first = KeyValues::load(dir.path() / "out" / artifact::manifest);
  EXPECT_EQ(run_cli("pipeline --config " + conf.string() + " --out " + (dir.path() / "second").string()), 0);
  const auto second = KeyValues::load(dir.path() / "second" / artifact::manifest);
  for (const auto& [k, v] : first.entries()) {
    if (k.rfind("timing.", 0) == 0) continue;
    EXPECT_EQ(second.get(k), v) << k;
  }
}

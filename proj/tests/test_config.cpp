#include <gtest/gtest.h>

#include "fbptf/config.hpp"
#include "fbptf/io.hpp"
#include "support.hpp"

using namespace fbptf;
using namespace fbptf::harness;
using fbptf::test_support::TempDir;

TEST(Config, Defaults) {
  const ExperimentConfig cfg;
  EXPECT_EQ(cfg.model, ModelKind::fbptf);
  EXPECT_EQ(cfg.split.folds, 3u);
  EXPECT_DOUBLE_EQ(cfg.train.l21.beta, 0.1);
  EXPECT_DOUBLE_EQ(cfg.train.l21.delta, 3.0);
  EXPECT_FALSE(cfg.clip);
  const auto hyper = cfg.prior.expand(5);
  EXPECT_DOUBLE_EQ(hyper.gw.nu0, 5.0);
  EXPECT_TRUE(hyper.gw.w0.isIdentity());
  EXPECT_DOUBLE_EQ(hyper.sigma2_init, 0.01);
}

TEST(Config, FileThenOverrides) {
  TempDir dir;
  io::write_atomic(dir / "run.cfg",
                   "# experiment\n"
                   "model = dbptf\n"
                   "train.sweeps = 50\n"
                   "\n"
                   "l21.beta = 0.2   \n"
                   "baseline.k = 7\n");
  const auto cfg = load_config(dir / "run.cfg", {"train.sweeps=12", "split.folds = 4"});
  EXPECT_EQ(cfg.model, ModelKind::dbptf);
  EXPECT_EQ(cfg.train.sweeps, 12);
  EXPECT_EQ(cfg.split.folds, 4u);
  EXPECT_DOUBLE_EQ(cfg.train.l21.beta, 0.2);
  EXPECT_EQ(cfg.baseline.k, 7u);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  ExperimentConfig cfg;
  EXPECT_THROW(apply_setting(cfg, "train.sweepz", "3"), InvalidInput);
  EXPECT_THROW(apply_setting(cfg, "train.sweeps", "many"), InvalidInput);
  EXPECT_THROW(apply_setting(cfg, "model", "svm"), InvalidInput);
  EXPECT_THROW(load_config(std::nullopt, {"no_equals_sign"}), InvalidInput);
}

TEST(Config, ValidateCatchesInconsistentSettings) {
  ExperimentConfig cfg;
  cfg.train.burn_in = cfg.train.sweeps;
  EXPECT_THROW(cfg.validate(), InvalidInput);
}

TEST(Config, EntriesRoundTrip) {
  ExperimentConfig cfg;
  apply_setting(cfg, "model", "wknn");
  apply_setting(cfg, "clip.lambda", "0.1,0.2,0.3");
  apply_setting(cfg, "split.seed", "99");
  ExperimentConfig copy;
  for (const auto& [k, v] : cfg.entries()) apply_setting(copy, k, v);
  EXPECT_EQ(copy.entries(), cfg.entries());
  EXPECT_EQ(copy.model, ModelKind::wknn);
  EXPECT_DOUBLE_EQ(copy.clip_cfg.lambda[2], 0.3);
}

#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <vector>

#include "config.hpp"

using namespace pdds;
using namespace pdds::cli;

namespace {

// Owns a null-terminated environment block for parse_config.
struct Env {
  explicit Env(std::vector<std::string> vars) : storage(std::move(vars)) {
    for (auto& s : storage) ptrs.push_back(s.data());
    ptrs.push_back(nullptr);
  }
  char** get() { return ptrs.data(); }
  std::vector<std::string> storage;
  std::vector<char*> ptrs;
};

}  // namespace

TEST(Config, DefaultsFromEmptyText) {
  const auto c = parse_config("");
  EXPECT_EQ(c.target.name, "gaussian");
  EXPECT_EQ(c.target.mu, 2.75);
  EXPECT_EQ(c.target.sigma, 0.25);
  EXPECT_EQ(c.smc.particles, 2000u);
  EXPECT_EQ(c.smc.ess_threshold, 0.3);
  EXPECT_EQ(c.train.batch, 300);
  EXPECT_EQ(c.train.adam.learning_rate, 1e-3);
  EXPECT_EQ(c.train.adam.decay_rate, 0.95);
  EXPECT_EQ(c.train.adam.decay_every, 50);
  EXPECT_EQ(c.vi.steps, 20000);
  EXPECT_EQ(c.schedule.kind, ScheduleKind::cosine);
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{1}));
}

TEST(Config, ParsesSectionsCommentsAndCase) {
  const auto c = parse_config(
      "# experiment\n"
      "[Target]\n"
      "name = mixture ; trailing note\n"
      "[smc]\n"
      "Particles = 512\n"
      "resample = sorted_stratified\n"
      "mode = every_step\n"
      "[mcmc]\n"
      "steps = 10\n"
      "step_times = 0, 0.5, 1\n"
      "step_sizes = 0.05, 0.15, 0.6\n"
      "[run]\n"
      "seeds = 1-3, 7\n");
  EXPECT_EQ(c.target.name, "mixture");
  EXPECT_EQ(c.smc.particles, 512u);
  EXPECT_EQ(c.smc.resample, ResampleScheme::sorted_stratified);
  EXPECT_EQ(c.mode, SmcMode::every_step);
  ASSERT_EQ(c.mcmc.step_sizes.size(), 3u);
  EXPECT_EQ(c.mcmc.step_sizes[1], std::make_pair(0.5, 0.15));
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{1, 2, 3, 7}));
}

TEST(Config, RejectsUnknownOrInvalidEntries) {
  EXPECT_THROW(parse_config("[target]\nnmae = gaussian\n"), ConfigError);
  EXPECT_THROW(parse_config("[targets]\nname = gaussian\n"), ConfigError);
  EXPECT_THROW(parse_config("name = gaussian\n"), ConfigError);
  EXPECT_THROW(parse_config("[target]\nname = banana\n"), ConfigError);
  EXPECT_THROW(parse_config("[smc]\nparticles = many\n"), ConfigError);
  EXPECT_THROW(parse_config("[smc]\ness_threshold = 2\n"), ConfigError);
  EXPECT_THROW(parse_config("[schedule]\nsteps = 0\n"), ConfigError);
  EXPECT_THROW(parse_config("[schedule]\nkind = sigmoid\n"), ConfigError);
  EXPECT_THROW(parse_config("[mcmc]\nstep_times = 0, 1\nstep_sizes = 0.1\n"), ConfigError);
  EXPECT_THROW(parse_config("[target]\nname = logreg\n"), ConfigError);
  EXPECT_THROW(parse_config("[target]\nname = logreg\ndata_path = /no/such/file\n"), ConfigError);
  EXPECT_THROW(parse_config("[potential]\ncheckpoint = /no/such/net.bin\n"), ConfigError);
  EXPECT_THROW(parse_config("[run]\nseeds = 5-2\n"), ConfigError);
}

TEST(Config, EnvironmentOverridesFile) {
  Env env({"PDDS_SMC_PARTICLES=64", "PDDS_TARGET_NAME=funnel", "HOME=/root",
           "PDDS_SCHEDULE_BETAT=12"});
  const auto c = parse_config("[smc]\nparticles = 512\n", env.get());
  EXPECT_EQ(c.smc.particles, 64u);
  EXPECT_EQ(c.target.name, "funnel");
  EXPECT_EQ(c.schedule.betaT, 12.0);
  Env bad({"PDDS_SMC_PARTICLEZ=3"});
  EXPECT_THROW(parse_config("", bad.get()), ConfigError);
}

TEST(Config, SerializeRoundTrip) {
  auto c = parse_config(
      "[target]\nname = gmm\ndim = 3\nseed = 9\n[schedule]\nkind = linear\nsteps = 24\n"
      "[train]\nloss = dsm\nlr = 0.0005\n[run]\nseeds = 4,5\nthin = 2\n");
  const std::string text = serialize_config(c);
  const auto back = parse_config(text);
  EXPECT_EQ(serialize_config(back), text);
  EXPECT_EQ(back.target.dim, 3);
  EXPECT_EQ(back.schedule.kind, ScheduleKind::linear);
  EXPECT_EQ(back.train.loss, LossKind::dsm);
  EXPECT_EQ(back.train.adam.learning_rate, 0.0005);
}

TEST(Config, SeedLists) {
  EXPECT_EQ(parse_seed_list("3"), (std::vector<std::uint64_t>{3}));
  EXPECT_EQ(parse_seed_list("1-4"), (std::vector<std::uint64_t>{1, 2, 3, 4}));
  EXPECT_EQ(parse_seed_list("2, 9,1-2"), (std::vector<std::uint64_t>{2, 9, 1, 2}));
  EXPECT_THROW(parse_seed_list(""), ConfigError);
  EXPECT_THROW(parse_seed_list("x"), ConfigError);
}

TEST(Config, BuildsEveryTarget) {
  ExperimentConfig c;
  for (const char* name : {"gaussian", "standard_normal", "mixture", "funnel", "gmm"}) {
    c.target.name = name;
    EXPECT_NO_THROW(build_target(c)) << name;
  }
  c.target.name = "mixture";
  EXPECT_EQ(mode_centers(c).size(), 6u);
  c.target.name = "gmm";
  EXPECT_EQ(mode_centers(c).size(), 40u);

  const std::string path = ::testing::TempDir() + "pdds_cfg_data.csv";
  {
    std::ofstream out(path);
    out << "0.1 1\n0.5 0\n-0.2 1\n";
  }
  c.target.name = "logreg";
  c.target.data_path = path;
  c.target.intercept = true;
  EXPECT_EQ(build_target(c)->dim(), 2);
  std::remove(path.c_str());
}

TEST(Config, LoadMissingFile) {
  EXPECT_THROW(load_config("/no/such/pdds.ini"), ConfigError);
}

// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "beamcast/io.hpp"

using namespace beamcast;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("beamcast_io_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
             "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

ScenarioConfig small_scenario() {
  ScenarioConfig sc;
  sc.n_high = 8;
  sc.n_low = 2;
  sc.n_users = 2;
  return sc;
}

TrainConfig small_train() {
  TrainConfig cfg;
  cfg.width_scale = 1.0 / 16.0;
  return cfg;
}

void expect_same(const Dataset& a, const Dataset& b) {
  ASSERT_EQ(a.samples.size(), b.samples.size());
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.test, b.test);
  EXPECT_EQ(a.labeled, b.labeled);
  EXPECT_EQ(a.seed, b.seed);
  EXPECT_EQ(to_json(a.config), to_json(b.config));
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    EXPECT_EQ(a.samples[i].h_real, b.samples[i].h_real);
    EXPECT_EQ(a.samples[i].h_low, b.samples[i].h_low);
    EXPECT_EQ(a.samples[i].v_real, b.samples[i].v_real);
    EXPECT_EQ(a.samples[i].v_low, b.samples[i].v_low);
    EXPECT_EQ(a.samples[i].seed, b.samples[i].seed);
    EXPECT_EQ(a.samples[i].path_loss, b.samples[i].path_loss);
  }
}

std::vector<char> slurp(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void dump(const std::string& p, const std::vector<char>& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST(DatasetFile, RoundTripIsBitIdentical) {
  TempDir dir;
  auto ds = generate_dataset(small_scenario(), 3, 11);
  save_dataset(dir.file("raw.bcd"), ds);
  expect_same(ds, load_dataset(dir.file("raw.bcd")));
  label_dataset(ds, WmmseConfig::from_snr_db(10));
  save_dataset(dir.file("labeled.bcd"), ds);
  expect_same(ds, load_dataset(dir.file("labeled.bcd")));
  // Saving the loaded copy reproduces the file byte for byte.
  save_dataset(dir.file("again.bcd"), load_dataset(dir.file("labeled.bcd")));
  EXPECT_EQ(slurp(dir.file("labeled.bcd")), slurp(dir.file("again.bcd")));
}

TEST(DatasetFile, PerfectEstimateSurvivesJson) {
  TempDir dir;
  auto sc = small_scenario();
  sc.cee_db = kPerfectEstimate;
  auto ds = generate_dataset(sc, 2, 1);
  save_dataset(dir.file("d.bcd"), ds);
  EXPECT_EQ(load_dataset(dir.file("d.bcd")).config.cee_db, kPerfectEstimate);
}

TEST(DatasetFile, CorruptionDetected) {
  TempDir dir;
  auto ds = generate_dataset(small_scenario(), 3, 11);
  const auto p = dir.file("d.bcd");
  save_dataset(p, ds);
  const auto good = slurp(p);

  auto truncated = good;
  truncated.resize(good.size() - 5);
  dump(p, truncated);
  EXPECT_THROW(load_dataset(p), CorruptFileError);

  auto flipped = good;
  flipped.back() ^= 0x1;
  dump(p, flipped);
  EXPECT_THROW(load_dataset(p), CorruptFileError);

  auto header_edit = good;
  const std::string needle = "\"labeled\":false";
  auto it = std::search(header_edit.begin(), header_edit.end(), needle.begin(), needle.end());
  ASSERT_NE(it, header_edit.end());
  std::copy_n("\"labeled\":fals ", needle.size(), it);
  dump(p, header_edit);
  EXPECT_THROW(load_dataset(p), CorruptFileError);

  auto bad_magic = good;
  bad_magic[0] = 'X';
  dump(p, bad_magic);
  EXPECT_THROW(load_dataset(p), CorruptFileError);
}

TEST(DatasetFile, NewerSchemaRefused) {
  TempDir dir;
  const auto p = dir.file("future.bcd");
  write_container(p, "BEAMCAST-DATASET\n", Json{{"kind", "dataset"}, {"schema_version", 99}}, {});
  EXPECT_THROW(load_dataset(p), VersionError);
}

TEST(DatasetFile, NoTemporaryLeftBehind) {
  TempDir dir;
  save_dataset(dir.file("d.bcd"), generate_dataset(small_scenario(), 2, 1));
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(fs::path(dir.file("d.bcd")).parent_path())) {
    (void)e;
    ++files;
  }
  EXPECT_EQ(files, 1u);
}

TEST(CheckpointFile, RoundTripForwardIsBitIdentical) {
  TempDir dir;
  const auto cfg = small_train();
  auto st = init_train_state<float>(gan_shape_for(small_scenario(), cfg), cfg);
  st.gen_opt.accumulators()[0][0] = 0.25f;
  st.rng.discard(17);
  save_checkpoint(dir.file("c.bck"), st, cfg);
  const auto ck = load_checkpoint<float>(dir.file("c.bck"));
  EXPECT_EQ(ck.state.gen.value_fingerprint(), st.gen.value_fingerprint());
  EXPECT_EQ(ck.state.disc.value_fingerprint(), st.disc.value_fingerprint());
  EXPECT_EQ(ck.state.gen_opt.accumulators()[0][0], 0.25f);
  EXPECT_EQ(ck.state.rng_state(), st.rng_state());
  EXPECT_EQ(to_json(ck.train), to_json(cfg));

  Rng rng(3);
  const auto z = normal_tensor<float>({2, 2, 2}, rng);
  const auto vl = normal_tensor<float>({2, 2, 2}, rng);
  const auto a = generate(st.gen_arch, st.gen, z, vl, vl, 1.0);
  const auto b = generate(ck.state.gen_arch, ck.state.gen, z, vl, vl, 1.0);
  EXPECT_EQ(a, b);
  EXPECT_THROW(load_checkpoint<double>(dir.file("c.bck")), ConfigError);
  EXPECT_EQ(checkpoint_precision(dir.file("c.bck")), Precision::kF32);
}

TEST(CheckpointFile, ArchitectureMismatchRejected) {
  TempDir dir;
  const auto cfg = small_train();
  auto st = init_train_state<double>(gan_shape_for(small_scenario(), cfg), cfg);
  save_checkpoint(dir.file("c.bck"), st, cfg);
  auto other_cfg = cfg;
  other_cfg.width_scale = 1.0 / 8.0;
  auto other = init_train_state<double>(gan_shape_for(small_scenario(), other_cfg), other_cfg);
  EXPECT_THROW(restore(other, load_checkpoint<double>(dir.file("c.bck"))), ConfigError);
}

TEST(CheckpointFile, TruncationDetected) {
  TempDir dir;
  const auto cfg = small_train();
  auto st = init_train_state<double>(gan_shape_for(small_scenario(), cfg), cfg);
  const auto p = dir.file("c.bck");
  save_checkpoint(p, st, cfg);
  auto bytes = slurp(p);
  bytes.resize(bytes.size() / 2);
  dump(p, bytes);
  EXPECT_THROW(load_checkpoint<double>(p), CorruptFileError);
}

TEST(CheckpointFile, ResumeReproducesTrace) {
  TempDir dir;
  const auto sc = small_scenario();
  auto ds = generate_dataset(sc, 10, 5);
  label_dataset(ds, WmmseConfig::from_snr_db(sc.snr_db));
  const auto cfg = small_train();

  auto st = init_train_state<float>(gan_shape_for(sc, cfg), cfg);
  TrainTrace head;
  train(st, ds, cfg, 2, head);
  save_checkpoint(dir.file("e2.bck"), st, cfg);

  auto run_tail = [&] {
    auto ck = load_checkpoint<float>(dir.file("e2.bck"));
    TrainTrace t;
    train(ck.state, ds, ck.train, 1, t);
    return t;
  };
  const auto a = run_tail();
  const auto b = run_tail();
  EXPECT_TRUE(a.same_values(b));

  TrainTrace tail;
  train(st, ds, cfg, 1, tail);
  EXPECT_TRUE(a.same_values(tail));
}

TEST(RunConfigJson, RoundTripAndUnknownKeys) {
  RunConfig c;
  c.scenario.spacing_wavelengths = 0.1;
  c.train.schedule = Schedule::kStandard;
  Json j = {{"scenario", to_json(c.scenario)}, {"train", to_json(c.train)}};
  RunConfig d;
  merge_json(j, d);
  EXPECT_EQ(to_json(d.scenario), to_json(c.scenario));
  EXPECT_EQ(to_json(d.train), to_json(c.train));
  EXPECT_THROW(merge_json(Json{{"train", {{"lr", 1}}}}, d), ConfigError);
  EXPECT_THROW(merge_json(Json{{"train", {{"schedule", "sometimes"}}}}, d), ConfigError);
}

// SPDX-License-Identifier: Apache-2.0
#include "beamcast/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "CLI11.hpp"

#include "beamcast/config_json.hpp"
#include "beamcast/evaluate.hpp"
#include "beamcast/io.hpp"

namespace beamcast {
namespace {

namespace fs = std::filesystem;

struct Globals {
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string config;
  std::string out = ".";
  std::string precision;
};

RunConfig base_config(const Globals& g) {
  RunConfig c;
  if (!g.config.empty()) c = load_run_config(g.config);
  if (!g.precision.empty()) c.train.precision = parse_precision(g.precision);
  if (g.seed_set) {
    c.scenario.seed = g.seed;
    c.train.seed = g.seed;
  }
  return c;
}

WmmseConfig wmmse_for(const RunConfig& c, const ScenarioConfig& sc) {
  return c.wmmse ? *c.wmmse : WmmseConfig::from_snr_db(sc.snr_db, c.train.power);
}

std::string out_file(const Globals& g, const std::string& name) {
  std::error_code ec;
  fs::create_directories(g.out, ec);
  if (ec) throw IoError("cannot create output directory " + g.out + ": " + ec.message());
  return (fs::path(g.out) / name).string();
}

std::string or_default(const std::string& given, const Globals& g, const std::string& name) {
  return given.empty() ? out_file(g, name) : given;
}

std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::trunc) {
  std::ofstream f(path, std::ios::out | mode);
  if (!f) throw IoError("cannot write " + path);
  f << std::setprecision(17);
  return f;
}

void write_json(const std::string& path, const Json& j) { open_out(path) << j.dump(2) << "\n"; }

std::pair<std::size_t, std::size_t> parse_ratio(const std::string& s) {
  const auto colon = s.find(':');
  try {
    if (colon == std::string::npos) throw std::invalid_argument("no colon");
    std::size_t used = 0;
    const auto a = std::stoul(s.substr(0, colon), &used);
    if (used != colon) throw std::invalid_argument("trailing");
    const auto b = std::stoul(s.substr(colon + 1), &used);
    if (used != s.size() - colon - 1) throw std::invalid_argument("trailing");
    return {a, b};
  } catch (const std::exception&) {
    throw ConfigError("ratio must look like 4:1, got '" + s + "'");
  }
}

std::vector<std::size_t> split_indices(const Dataset& ds, const std::string& split) {
  if (split == "test") return ds.test;
  if (split == "train") return ds.train;
  if (split == "all") {
    std::vector<std::size_t> all(ds.samples.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return all;
  }
  throw ConfigError("unknown split '" + split + "' (test|train|all)");
}

Json stat_json(const Stat& s) { return {{"mean", s.mean}, {"std", s.std}}; }

Json runtime_json(const RuntimeTable& t) {
  return {{"n_high", t.n_high},         {"n_low", t.n_low},
          {"n_users", t.n_users},       {"samples", t.samples},
          {"reps", t.reps},             {"full_wmmse_s", t.full_wmmse},
          {"low_wmmse_s", t.low_wmmse}, {"forward_s", t.forward},
          {"pipeline_s", t.pipeline},   {"ratio", t.ratio()},
          {"additivity_gap", t.additivity_gap()}};
}

// ---- subcommand bodies -------------------------------------------------------------------

struct GenDataArgs {
  std::size_t samples = 250;
  std::string ratio = "4:1";
  std::string dataset;
  bool label = false;
};

int cmd_gen_data(const Globals& g, RunConfig c, const GenDataArgs& a, std::ostream& out) {
  const auto [tr, te] = parse_ratio(a.ratio);
  Dataset ds = generate_dataset(c.scenario, a.samples, c.scenario.seed, tr, te);
  if (a.label) label_dataset(ds, wmmse_for(c, ds.config));
  const std::string path = or_default(a.dataset, g, "dataset.bin");
  save_dataset(path, ds);
  out << "dataset " << path << " samples " << ds.samples.size() << " train " << ds.train.size()
      << " test " << ds.test.size() << (ds.labeled ? " labeled" : "") << "\n";
  return kExitOk;
}

struct LabelArgs {
  std::string dataset;
  std::string output;
};

int cmd_label(const Globals& g, const RunConfig& c, const LabelArgs& a, std::ostream& out) {
  const std::string in = or_default(a.dataset, g, "dataset.bin");
  Dataset ds = load_dataset(in);
  label_dataset(ds, wmmse_for(c, ds.config));
  const std::string path = a.output.empty() ? in : a.output;
  save_dataset(path, ds);
  out << "labeled " << ds.samples.size() << " samples -> " << path << "\n";
  return kExitOk;
}

struct TrainArgs {
  std::string dataset;
  std::string checkpoint;
  std::string resume;
  std::size_t checkpoint_every = 0;
};

void write_trace_csv(const std::string& path, const TrainTrace& tr) {
  auto f = open_out(path);
  f << "epoch,step,sample,l1,l2,gp,d_real,d_fake,gen_updated,disc_updated,wall_ms\n";
  for (const auto& r : tr.steps)
    f << r.epoch << ',' << r.step << ',' << r.sample << ',' << r.l1 << ',' << r.l2 << ',' << r.gp
      << ',' << r.d_real << ',' << r.d_fake << ',' << int(r.gen_updated) << ','
      << int(r.disc_updated) << ',' << r.wall_ms << '\n';
}

template <typename T>
int run_train(const Globals& g, TrainConfig cfg, const CLI::App& sub, const TrainArgs& a,
              const Dataset& ds, std::ostream& out) {
  TrainState<T> st;
  if (!a.resume.empty()) {
    const Checkpoint<T> ck = load_checkpoint<T>(a.resume);
    const std::size_t epochs = cfg.epochs;
    cfg = ck.train;
    if (sub.count("--epochs")) cfg.epochs = epochs;
    st = init_train_state<T>(gan_shape_for(ds.config, cfg), cfg);
    restore(st, ck);
  } else {
    st = init_train_state<T>(gan_shape_for(ds.config, cfg), cfg);
  }
  const std::size_t start_epoch = st.epoch;
  const std::size_t todo = cfg.epochs > st.epoch ? cfg.epochs - st.epoch : 0;
  const std::string ck_path = or_default(a.checkpoint, g, "checkpoint.bin");
  TrainTrace trace;
  train(st, ds, cfg, todo, trace, [&](std::size_t epoch, double nmse) {
    out << "epoch " << epoch << " test_nmse_db " << nmse << "\n";
    if (a.checkpoint_every && epoch % a.checkpoint_every == 0)
      save_checkpoint(out_file(g, "checkpoint_epoch" + std::to_string(epoch) + ".bin"), st, cfg);
  });
  save_checkpoint(ck_path, st, cfg);
  write_trace_csv(out_file(g, "trace.csv"), trace);
  {
    auto f = open_out(out_file(g, "nmse_vs_iter.csv"));
    f << "epoch,step,test_nmse_db\n";
    const std::size_t per_epoch = (ds.train.size() + cfg.batch_size - 1) / cfg.batch_size;
    for (std::size_t e = 0; e < trace.epoch_test_nmse_db.size(); ++e)
      f << start_epoch + e + 1 << ',' << (start_epoch + e + 1) * per_epoch << ','
        << trace.epoch_test_nmse_db[e] << '\n';
  }
  bool finite = true;
  for (const auto& r : trace.steps)
    finite = finite && std::isfinite(r.l1) && std::isfinite(r.l2) && std::isfinite(r.gp);
  Json summary = {{"kind", "train_summary"},
                  {"checkpoint", ck_path},
                  {"precision", precision_name<T>()},
                  {"start_epoch", start_epoch},
                  {"end_epoch", st.epoch},
                  {"steps", trace.steps.size()},
                  {"losses_finite", finite},
                  {"epoch_test_nmse_db", trace.epoch_test_nmse_db},
                  {"epoch_wall_s", trace.epoch_wall_s},
                  {"gen_parameters", parameter_count(st.gen_arch)},
                  {"disc_parameters", parameter_count(st.disc_arch)},
                  {"train", to_json(cfg)}};
  write_json(out_file(g, "train_summary.json"), summary);
  out << "checkpoint " << ck_path << " epoch " << st.epoch << "\n";
  return kExitOk;
}

struct ModelArgs {
  std::string dataset;
  std::string checkpoint;
  std::string split = "test";
};

template <typename T>
int run_predict(const Globals& g, const RunConfig& c, const ModelArgs& a, std::ostream& out) {
  const Dataset ds = load_dataset(or_default(a.dataset, g, "dataset.bin"));
  const Checkpoint<T> ck = load_checkpoint<T>(or_default(a.checkpoint, g, "checkpoint.bin"));
  const GanShape shape = gan_shape_for(ds.config, ck.train);
  const GanShape& have = ck.state.gen_arch.shape;
  if (shape.n_high != have.n_high || shape.n_low != have.n_low || shape.n_users != have.n_users)
    throw ConfigError("checkpoint dimensions do not match the dataset");
  const WmmseConfig wcfg = wmmse_for(c, ds.config);
  Rng rng(derive_seed(g.seed_set ? g.seed : ck.train.seed, 4));
  auto f = open_out(out_file(g, "predictions.csv"));
  f << "sample,user,antenna,re,im\n";
  std::vector<ComplexMatrix> targets, ests;
  const auto idx = split_indices(ds, a.split);
  for (const std::size_t i : idx) {
    const ComplexMatrix v = predict(ck.state.gen_arch, ck.state.gen, ds.samples[i].h_low, wcfg, rng);
    for (Eigen::Index k = 0; k < v.cols(); ++k)
      for (Eigen::Index m = 0; m < v.rows(); ++m)
        f << i << ',' << k << ',' << m << ',' << v(m, k).real() << ',' << v(m, k).imag() << '\n';
    if (ds.labeled) {
      targets.push_back(ds.samples[i].v_real);
      ests.push_back(v);
    }
  }
  out << "predicted " << idx.size() << " samples";
  if (!targets.empty()) out << " nmse_db " << nmse_db(targets, ests);
  out << "\n";
  return kExitOk;
}

template <typename T>
int run_eval(const Globals& g, const RunConfig& c, const ModelArgs& a, std::ostream& out) {
  const Dataset ds = load_dataset(or_default(a.dataset, g, "dataset.bin"));
  const Checkpoint<T> ck = load_checkpoint<T>(or_default(a.checkpoint, g, "checkpoint.bin"));
  const WmmseConfig wcfg = wmmse_for(c, ds.config);
  const auto idx = split_indices(ds, a.split);
  const EvalReport rep =
      evaluate(ds, idx, ck.state.gen_arch, ck.state.gen, wcfg, ck.train.eval_seed);
  Json rows = Json::array();
  for (const auto& r : rep.rows)
    rows.push_back({{"index", r.index},
                    {"se_wmmse", r.se_wmmse},
                    {"se_generated", r.se_generated},
                    {"se_zero_pad", r.se_zero_pad},
                    {"nmse_db", r.nmse_db}});
  const Json report = {{"kind", "eval_report"},
                       {"split", a.split},
                       {"n_high", ds.config.n_high},
                       {"n_low", ds.config.n_low},
                       {"n_users", ds.config.n_users},
                       {"spacing_wavelengths", ds.config.spacing_wavelengths},
                       {"samples", rep.rows.size()},
                       {"se_wmmse", stat_json(rep.se_wmmse)},
                       {"se_generated", stat_json(rep.se_generated)},
                       {"se_zero_pad", stat_json(rep.se_zero_pad)},
                       {"nmse_db", rep.nmse_db},
                       {"rows", rows}};
  write_json(out_file(g, "eval.json"), report);
  {
    auto f = open_out(out_file(g, "eval_rows.csv"));
    f << "index,se_wmmse,se_generated,se_zero_pad,nmse_db\n";
    for (const auto& r : rep.rows)
      f << r.index << ',' << r.se_wmmse << ',' << r.se_generated << ',' << r.se_zero_pad << ','
        << r.nmse_db << '\n';
  }
  {
    // One row per evaluated model; repeated evals with different n_low build the sweep.
    const std::string path = out_file(g, "se_vs_nlow.csv");
    const bool fresh = !fs::exists(path) || fs::file_size(path) == 0;
    auto f = open_out(path, std::ios::app);
    if (fresh) f << "n_high,n_low,n_users,spacing,se_wmmse,se_generated,se_zero_pad,nmse_db\n";
    f << ds.config.n_high << ',' << ds.config.n_low << ',' << ds.config.n_users << ','
      << ds.config.spacing_wavelengths << ',' << rep.se_wmmse.mean << ','
      << rep.se_generated.mean << ',' << rep.se_zero_pad.mean << ',' << rep.nmse_db << '\n';
  }
  out << "se_wmmse " << rep.se_wmmse.mean << " se_generated " << rep.se_generated.mean
      << " se_zero_pad " << rep.se_zero_pad.mean << " nmse_db " << rep.nmse_db << "\n";
  return kExitOk;
}

struct BenchArgs {
  std::vector<std::size_t> nt_high{64};
  std::size_t nt_low = 8;
  std::size_t samples = 8;
  std::size_t reps = 5;
  std::vector<std::size_t> sweep{16, 32, 64};
  std::string checkpoint;
};

template <typename T>
int run_bench(const Globals& g, const RunConfig& c, const BenchArgs& a, std::ostream& out) {
  std::optional<Checkpoint<T>> ck;
  if (!a.checkpoint.empty()) ck = load_checkpoint<T>(a.checkpoint);
  Json rows = Json::array();
  auto f = open_out(out_file(g, "runtime_vs_nt.csv"));
  f << "n_high,n_low,n_users,samples,reps,full_wmmse_s,low_wmmse_s,forward_s,pipeline_s,ratio,"
       "additivity_gap\n";
  for (const std::size_t nh : a.nt_high) {
    ScenarioConfig sc = c.scenario;
    sc.n_high = nh;
    sc.n_low = a.nt_low;
    const WmmseConfig wcfg = wmmse_for(c, sc);
    const GanShape shape = gan_shape_for(sc, c.train);
    const GenArch arch = make_generator_arch(shape);
    ParameterSet<T> gen;
    if (ck && ck->state.gen_arch.shape.n_high == nh && ck->state.gen_arch.shape.n_low == a.nt_low)
      gen = ck->state.gen;
    else
      gen = init_generator<T>(arch, derive_seed(c.train.seed, 1));
    std::vector<ChannelSample> samples;
    for (std::size_t i = 0; i < a.samples; ++i)
      samples.push_back(generate_sample(sc, derive_seed(sc.seed, i), i));
    const RuntimeTable t = benchmark_runtime(samples, wcfg, arch, gen, a.reps, c.train.seed);
    f << t.n_high << ',' << t.n_low << ',' << t.n_users << ',' << t.samples << ',' << t.reps << ','
      << t.full_wmmse << ',' << t.low_wmmse << ',' << t.forward << ',' << t.pipeline << ','
      << t.ratio() << ',' << t.additivity_gap() << '\n';
    rows.push_back(runtime_json(t));
    out << "n_high " << nh << " n_low " << a.nt_low << " ratio " << t.ratio() << "\n";
  }
  Json report = {{"kind", "bench_report"}, {"threads", 1}, {"runtime", rows}};
  if (a.sweep.size() >= 2) {
    const ScalingFit fit = wmmse_scaling(c.scenario, a.sweep, wmmse_for(c, c.scenario), a.samples,
                                         a.reps, c.scenario.seed);
    Json pts = Json::array();
    for (const auto& p : fit.points)
      pts.push_back({{"n_antennas", p.n_antennas},
                     {"seconds", p.seconds},
                     {"mean_iterations", p.mean_iterations}});
    report["scaling"] = {{"points", pts}, {"exponent", fit.exponent}};
    out << "full WMMSE time exponent " << fit.exponent << "\n";
  }
  write_json(out_file(g, "bench.json"), report);
  return kExitOk;
}

template <template <typename> class Body, typename... Args>
int dispatch(Precision p, Args&&... args) {
  return p == Precision::kF64 ? Body<double>::run(std::forward<Args>(args)...)
                              : Body<float>::run(std::forward<Args>(args)...);
}

template <typename T>
struct TrainBody {
  template <typename... A>
  static int run(A&&... a) { return run_train<T>(std::forward<A>(a)...); }
};
template <typename T>
struct PredictBody {
  template <typename... A>
  static int run(A&&... a) { return run_predict<T>(std::forward<A>(a)...); }
};
template <typename T>
struct EvalBody {
  template <typename... A>
  static int run(A&&... a) { return run_eval<T>(std::forward<A>(a)...); }
};
template <typename T>
struct BenchBody {
  template <typename... A>
  static int run(A&&... a) { return run_bench<T>(std::forward<A>(a)...); }
};

/// Precision of a stored checkpoint unless --precision was given.
Precision model_precision(const Globals& g, const std::string& checkpoint) {
  if (!g.precision.empty()) return parse_precision(g.precision);
  return checkpoint_precision(checkpoint);
}

int fail(std::ostream& err, int code, const char* category, const std::string& msg) {
  std::string one_line = msg;
  for (auto& ch : one_line)
    if (ch == '\n') ch = ' ';
  err << "error: " << category << ": " << one_line << "\n";
  return code;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Holographic beamforming: WMMSE labels, conditional WGAN-GP upsampling, "
               "evaluation and benchmarks",
               "beamcast"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Master seed (scenario and training)");
  app.add_option("--config", g.config, "JSON config {scenario, train, wmmse}")
      ->check(CLI::ExistingFile);
  app.add_option("--out", g.out, "Output directory")->capture_default_str();
  app.add_option("--precision", g.precision, "Network precision")
      ->check(CLI::IsMember({"f32", "f64"}));

  // Scenario overrides shared by gen-data and bench.
  ScenarioConfig sc_cli;
  std::string subset, cee;
  auto add_scenario = [&](CLI::App* s, bool antennas) {
    if (antennas) {
      s->add_option("--n-high", sc_cli.n_high, "High-dimensional antenna count");
      s->add_option("--n-low", sc_cli.n_low, "Low-dimensional antenna count");
    }
    s->add_option("--users", sc_cli.n_users, "Users N_r");
    s->add_option("--paths", sc_cli.n_paths, "Paths per user");
    s->add_option("--spacing", sc_cli.spacing_wavelengths, "Antenna spacing in wavelengths");
    s->add_option("--snr-db", sc_cli.snr_db, "SNR in dB");
    s->add_option("--cee-db", cee, "Channel estimation error in dB, or 'perfect'");
    s->add_option("--subset", subset, "Low-dimensional subset")
        ->check(CLI::IsMember({"strided", "contiguous"}));
  };
  auto apply_scenario = [&](const CLI::App* s, ScenarioConfig& sc) {
    auto given = [s](const char* name) {
      const auto* o = s->get_option_no_throw(name);
      return o != nullptr && o->count() > 0;
    };
    if (given("--n-high")) sc.n_high = sc_cli.n_high;
    if (given("--n-low")) sc.n_low = sc_cli.n_low;
    if (given("--users")) sc.n_users = sc_cli.n_users;
    if (given("--paths")) sc.n_paths = sc_cli.n_paths;
    if (given("--spacing")) sc.spacing_wavelengths = sc_cli.spacing_wavelengths;
    if (given("--snr-db")) sc.snr_db = sc_cli.snr_db;
    if (!cee.empty()) {
      if (cee == "perfect") {
        sc.cee_db = kPerfectEstimate;
      } else {
        try {
          std::size_t used = 0;
          sc.cee_db = std::stod(cee, &used);
          if (used != cee.size()) throw std::invalid_argument(cee);
        } catch (const std::exception&) {
          throw ConfigError("--cee-db must be a number or 'perfect'");
        }
      }
    }
    if (!subset.empty())
      sc.subset = subset == "contiguous" ? SubsetMode::kContiguous : SubsetMode::kStrided;
  };

  GenDataArgs gd;
  auto* gen_data = app.add_subcommand("gen-data", "Generate a synthetic channel dataset");
  gen_data->add_option("--samples", gd.samples, "Number of samples")->capture_default_str();
  gen_data->add_option("--ratio", gd.ratio, "Train:test split")->capture_default_str();
  gen_data->add_option("--dataset", gd.dataset, "Output file (default <out>/dataset.bin)");
  gen_data->add_flag("--label", gd.label, "Also compute WMMSE labels");
  add_scenario(gen_data, true);

  LabelArgs la;
  auto* label = app.add_subcommand("label", "Compute WMMSE beamformers for a dataset");
  label->add_option("--dataset", la.dataset, "Input file (default <out>/dataset.bin)");
  label->add_option("--output", la.output, "Output file (default: overwrite input)");

  TrainArgs ta;
  TrainConfig tc_cli;
  std::string schedule;
  auto* train_cmd = app.add_subcommand("train", "Train the conditional WGAN-GP");
  train_cmd->add_option("--dataset", ta.dataset, "Labeled dataset (default <out>/dataset.bin)");
  train_cmd->add_option("--checkpoint", ta.checkpoint,
                        "Output checkpoint (default <out>/checkpoint.bin)");
  train_cmd->add_option("--resume", ta.resume, "Continue from this checkpoint")
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--checkpoint-every", ta.checkpoint_every,
                        "Also save <out>/checkpoint_epochN.bin every N epochs");
  train_cmd->add_option("--epochs", tc_cli.epochs, "Total epochs");
  train_cmd->add_option("--schedule", schedule, "Update schedule")
      ->check(CLI::IsMember({"sparse-critic", "standard"}));
  train_cmd->add_option("--lr-gen", tc_cli.lr_gen, "Generator learning rate");
  train_cmd->add_option("--lr-disc", tc_cli.lr_disc, "Critic learning rate");
  train_cmd->add_option("--beta", tc_cli.beta, "L2 weight in the generator loss");
  train_cmd->add_option("--lambda", tc_cli.lambda, "Gradient penalty weight");
  train_cmd->add_option("--batch-size", tc_cli.batch_size, "Batch size");
  train_cmd->add_option("--width-scale", tc_cli.width_scale, "Network width multiplier");

  ModelArgs pa, ea;
  auto* predict_cmd = app.add_subcommand("predict", "Low-dim WMMSE + generator on H_low");
  auto* eval_cmd = app.add_subcommand("eval", "Sum-SE and NMSE against WMMSE and zero padding");
  for (auto [cmd, ma] : {std::pair{predict_cmd, &pa}, std::pair{eval_cmd, &ea}}) {
    cmd->add_option("--dataset", ma->dataset, "Dataset (default <out>/dataset.bin)");
    cmd->add_option("--checkpoint", ma->checkpoint, "Checkpoint (default <out>/checkpoint.bin)");
    cmd->add_option("--split", ma->split, "test|train|all")->capture_default_str();
  }

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "Single-threaded runtime comparison");
  bench->add_option("--nt-high", ba.nt_high, "High-dimensional antenna counts")
      ->delimiter(',')
      ->capture_default_str();
  bench->add_option("--nt-low", ba.nt_low, "Low-dimensional antenna count")
      ->capture_default_str();
  bench->add_option("--samples", ba.samples, "Channels per measurement")->capture_default_str();
  bench->add_option("--reps", ba.reps, "Timed repetitions (median)")->capture_default_str();
  bench->add_option("--sweep", ba.sweep, "Antenna counts for the full-WMMSE scaling fit")
      ->delimiter(',')
      ->capture_default_str();
  bench->add_option("--checkpoint", ba.checkpoint, "Use trained weights when shapes match");
  add_scenario(bench, false);

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << app.help();
    return fail(err, kExitUsage, "usage", e.what());
  }
  g.seed_set = app.count("--seed") > 0;

  try {
    RunConfig c = base_config(g);
    if (gen_data->parsed()) {
      apply_scenario(gen_data, c.scenario);
      return cmd_gen_data(g, c, gd, out);
    }
    if (label->parsed()) return cmd_label(g, c, la, out);
    if (train_cmd->parsed()) {
      TrainConfig& t = c.train;
      if (train_cmd->count("--epochs")) t.epochs = tc_cli.epochs;
      if (!schedule.empty()) t.schedule = parse_schedule(schedule);
      if (train_cmd->count("--lr-gen")) t.lr_gen = tc_cli.lr_gen;
      if (train_cmd->count("--lr-disc")) t.lr_disc = tc_cli.lr_disc;
      if (train_cmd->count("--beta")) t.beta = tc_cli.beta;
      if (train_cmd->count("--lambda")) t.lambda = tc_cli.lambda;
      if (train_cmd->count("--batch-size")) t.batch_size = tc_cli.batch_size;
      if (train_cmd->count("--width-scale")) t.width_scale = tc_cli.width_scale;
      t.validate();
      const Dataset ds = load_dataset(or_default(ta.dataset, g, "dataset.bin"));
      if (!ds.labeled) throw ConfigError("dataset is unlabeled; run 'label' first");
      Precision p = t.precision;
      if (!ta.resume.empty()) p = model_precision(g, ta.resume);
      return dispatch<TrainBody>(p, g, t, *train_cmd, ta, ds, out);
    }
    if (predict_cmd->parsed())
      return dispatch<PredictBody>(
          model_precision(g, or_default(pa.checkpoint, g, "checkpoint.bin")), g, c, pa, out);
    if (eval_cmd->parsed())
      return dispatch<EvalBody>(
          model_precision(g, or_default(ea.checkpoint, g, "checkpoint.bin")), g, c, ea, out);
    if (bench->parsed()) {
      apply_scenario(bench, c.scenario);
      const Precision p = ba.checkpoint.empty() ? c.train.precision
                                                : model_precision(g, ba.checkpoint);
      return dispatch<BenchBody>(p, g, c, ba, out);
    }
    return fail(err, kExitUsage, "usage", "no subcommand");
  } catch (const CorruptFileError& e) {
    return fail(err, kExitCorrupt, "corrupt", e.what());
  } catch (const VersionError& e) {
    return fail(err, kExitVersion, "version", e.what());
  } catch (const ConfigError& e) {
    return fail(err, kExitConfig, "config", e.what());
  } catch (const DimensionError& e) {
    return fail(err, kExitDimension, "dimension", e.what());
  } catch (const NumericalError& e) {
    return fail(err, kExitNumerical, "numerical", e.what());
  } catch (const IoError& e) {
    return fail(err, kExitIo, "io", e.what());
  } catch (const std::exception& e) {
    return fail(err, kExitInternal, "internal", e.what());
  }
}

}  // namespace beamcast

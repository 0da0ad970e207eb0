// SPDX-License-Identifier: Apache-2.0
//
// bevpool: geometry precompute, kernel verification and benchmarks for
// camera-to-BEV pooling.
//
// Exit codes: 0 success, 1 domain failure, 2 usage or input error.

#include "bevpool/bench.hpp"
#include "bevpool/config.hpp"
#include "bevpool/plan.hpp"
#include "bevpool/synthetic.hpp"
#include "bevpool/verify.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

namespace {

constexpr int kOk = 0;
constexpr int kDomainFailure = 1;
constexpr int kUsageError = 2;

bool write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << contents;
  out.close();
  return static_cast<bool>(out);
}

struct GenArgs {
  std::uint64_t seed = 0;
  int views = 6;
  std::string out;
  int feat_h = 16;
  int feat_w = 44;
  int downsample = 16;
};

int cmd_gen(const GenArgs& a) {
  const bevpool::CameraRig rig = bevpool::make_surround_rig(
      a.views, a.feat_h * a.downsample, a.feat_w * a.downsample, a.seed);
  bevpool::FrustumSpec frustum;
  frustum.feat_h = a.feat_h;
  frustum.feat_w = a.feat_w;
  frustum.downsample = a.downsample;
  frustum.depth_start = 1.0;
  frustum.depth_end = 60.0;
  frustum.depth_step = 1.0;

  std::ostringstream os;
  os << "# synthetic surround rig, seed " << a.seed << "\n\n"
     << bevpool::format_rig(rig) << "# ego-centered BEV grid\n"
     << bevpool::format_grid(bevpool::default_bev_grid()) << '\n'
     << bevpool::format_frustum(frustum);
  if (!write_file(a.out, os.str())) {
    std::cerr << "error: cannot write '" << a.out << "'\n";
    return kDomainFailure;
  }
  std::cout << "wrote " << a.views << " views to " << a.out << '\n';
  return kOk;
}

struct PlanArgs {
  std::string rig;
  std::string frustum;
  std::string grid;
  std::string out;
  std::uint32_t channels = 0;
  int workers = 1;
};

int cmd_plan(const PlanArgs& a) {
  bevpool::CameraRig rig;
  bevpool::FrustumSpec frustum;
  bevpool::VoxelGridSpec grid;
  try {
    rig = bevpool::rig_from_config(bevpool::load_config(a.rig));
    frustum = bevpool::frustum_from_config(bevpool::load_config(a.frustum));
    grid = bevpool::grid_from_config(bevpool::load_config(a.grid));
  } catch (const bevpool::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  }
  const bevpool::PoolingPlan plan = bevpool::build_plan(
      bevpool::compute_voxel_map(rig, frustum, grid), a.channels, a.workers);
  const auto bytes = bevpool::serialize_plan(plan);
  if (!write_file(a.out, std::string(bytes.begin(), bytes.end()))) {
    std::cerr << "error: cannot write '" << a.out << "'\n";
    return kDomainFailure;
  }
  if (plan.num_points() == 0) {
    std::cerr << "warning: empty plan (no frustum point lands in the grid)\n";
  }
  std::cout << "P=" << plan.num_points() << " M=" << plan.num_intervals()
            << " bytes=" << bytes.size() << " digest=" << std::hex
            << plan.meta.digest << std::dec << '\n';
  return kOk;
}

struct VerifyArgs {
  std::uint64_t seed = 0;
  int cases = 1;
  int workers = 0;
  std::string mutate = "none";
};

int cmd_verify(const VerifyArgs& a) {
  bevpool::VerifyOptions opts;
  opts.seed = a.seed;
  opts.cases = a.cases;
  opts.workers = a.workers;
  opts.mutation = a.mutate == "interval-off-by-one"
                      ? bevpool::Mutation::kIntervalOffByOne
                      : bevpool::Mutation::kNone;
  const bevpool::VerifyResult r = bevpool::run_verification(opts);
  std::cout << "cases=" << r.cases_run
            << " max_relative_error=" << r.max_relative_error
            << " tolerance=" << bevpool::kEquivalenceRelTol << '\n';
  if (!r.passed) {
    std::cout << "FAIL: " << r.failure << '\n'
              << "reproduce with: verify --seed " << *r.failing_seed
              << " --cases 1\n";
    return kDomainFailure;
  }
  std::cout << "PASS\n";
  return kOk;
}

struct BenchArgs {
  std::string config;
  std::string out;
  std::string format = "csv";
};

int cmd_bench(const BenchArgs& a) {
  const auto format = bevpool::parse_report_format(a.format);
  if (!format) {
    std::cerr << "error: unknown format '" << a.format
              << "' (expected csv or json)\n";
    return kUsageError;
  }
  bevpool::BenchConfig config;
  try {
    config = bevpool::bench_config_from_config(bevpool::load_config(a.config));
  } catch (const bevpool::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  }
  const auto records = bevpool::sweep(config);
  if (!write_file(a.out, bevpool::emit_report(records, *format))) {
    std::cerr << "error: cannot write '" << a.out << "'\n";
    return kDomainFailure;
  }
  std::cout << bevpool::render_table(records);
  return kOk;
}

int cmd_report(const std::string& in) {
  std::ifstream file(in, std::ios::binary);
  if (!file) {
    std::cerr << "error: cannot open '" << in << "'\n";
    return kUsageError;
  }
  std::ostringstream ss;
  ss << file.rdbuf();
  std::vector<bevpool::BenchRecord> records;
  try {
    records = bevpool::parse_report(ss.str());
  } catch (const std::exception& e) {
    std::cerr << "error: malformed report: " << e.what() << '\n';
    return kUsageError;
  }
  if (records.empty()) {
    std::cerr << "error: report has no records\n";
    return kUsageError;
  }
  std::cout << bevpool::render_table(records);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Camera-to-BEV pooling: plans, kernels and benchmarks"};
  app.require_subcommand(1);
  std::function<int()> action;

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "write a synthetic rig/grid config");
  gen_cmd->add_option("--seed", gen.seed, "RNG seed")->required();
  gen_cmd->add_option("--views", gen.views, "number of cameras")
      ->check(CLI::Range(1, 64));
  gen_cmd->add_option("--out", gen.out, "output config path")->required();
  gen_cmd->add_option("--feat-h", gen.feat_h, "feature rows")
      ->check(CLI::PositiveNumber);
  gen_cmd->add_option("--feat-w", gen.feat_w, "feature columns")
      ->check(CLI::PositiveNumber);
  gen_cmd->add_option("--downsample", gen.downsample, "pixels per feature cell")
      ->check(CLI::PositiveNumber);
  gen_cmd->callback([&] { action = [&] { return cmd_gen(gen); }; });

  PlanArgs plan;
  auto* plan_cmd =
      app.add_subcommand("plan", "precompute and serialize a pooling plan");
  plan_cmd->add_option("--rig", plan.rig, "config with view.* keys")
      ->required();
  plan_cmd->add_option("--frustum", plan.frustum, "config with frustum.* keys")
      ->required();
  plan_cmd->add_option("--grid", plan.grid, "config with grid.* keys")
      ->required();
  plan_cmd->add_option("--out", plan.out, "output plan path")->required();
  plan_cmd->add_option("--channels", plan.channels,
                       "expected feature channels (0 = any)");
  plan_cmd->add_option("--workers", plan.workers, "sort workers (0 = all)")
      ->check(CLI::NonNegativeNumber);
  plan_cmd->callback([&] { action = [&] { return cmd_plan(plan); }; });

  VerifyArgs verify;
  auto* verify_cmd = app.add_subcommand(
      "verify", "fuzz all kernels against the float64 oracle");
  verify_cmd->add_option("--seed", verify.seed, "base seed")->required();
  verify_cmd->add_option("--cases", verify.cases, "number of random instances")
      ->required()
      ->check(CLI::PositiveNumber);
  verify_cmd->add_option("--workers", verify.workers, "kernel workers (0 = all)")
      ->check(CLI::NonNegativeNumber);
  verify_cmd
      ->add_option("--mutate", verify.mutate,
                   "inject a known fault to check the suite catches it")
      ->check(CLI::IsMember({"none", "interval-off-by-one"}));
  verify_cmd->callback([&] { action = [&] { return cmd_verify(verify); }; });

  BenchArgs bench;
  auto* bench_cmd =
      app.add_subcommand("bench", "run the latency/memory resolution sweep");
  bench_cmd->add_option("--config", bench.config, "bench config file")
      ->required();
  bench_cmd->add_option("--out", bench.out, "report path")->required();
  bench_cmd->add_option("--format", bench.format, "csv or json");
  bench_cmd->callback([&] { action = [&] { return cmd_bench(bench); }; });

  std::string report_in;
  auto* report_cmd =
      app.add_subcommand("report", "render a bench report as a text table");
  report_cmd->add_option("--in", report_in, "CSV or JSON report")->required();
  report_cmd->callback([&] { action = [&] { return cmd_report(report_in); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsageError;
  }
  try {
    return action();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDomainFailure;
  }
}

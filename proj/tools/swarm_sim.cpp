// Command-line driver for the swarm colony simulator.
//
//   swarm_sim run --preset sim2 --out out/sim2
//   swarm_sim run --config my.cfg --dt 0.02 --snapshot-every 10
//   swarm_sim compare --preset sim1 --dts 0.04,0.02,0.01 --at 25 --out out/conv
//
// Exit status: 0 on success, 1 when the configuration is rejected, 2 when the
// scheme aborts.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "swarm/config.hpp"
#include "swarm/runner.hpp"

namespace {

struct Source {
  std::string preset;
  std::string config;
};

swarm::RunConfig resolve(const Source& src) {
  if (!src.preset.empty() && !src.config.empty())
    throw swarm::InvalidArgument("source", "give either --preset or --config, not both");
  if (src.preset.empty() && src.config.empty())
    throw swarm::InvalidArgument("source", "one of --preset or --config is required");
  if (!src.preset.empty()) {
    if (src.preset != "sim1" && src.preset != "sim2" && src.preset != "sim3")
      throw swarm::InvalidArgument("preset", "unknown preset '" + src.preset + "'");
    return swarm::load_config(src.preset);
  }
  return swarm::load_config(src.config);
}

void print_summary(const swarm::RunConfig& cfg, const swarm::RunSummary& s) {
  std::printf("steps               %zu\n", s.steps);
  std::printf("final time          %.6g\n", static_cast<double>(s.steps) * cfg.grid.dt);
  std::printf("max ledger residual %.3e (relative)\n", s.max_relative_residual);
  std::printf("max CFL number      %.4f\n", s.max_cfl);
  std::printf("water clamps        %zu\n", s.water_clamps);
  std::printf("final front         %.6g\n", s.final_front);
  std::printf("terraces            %zu\n", s.final_terraces);
  std::size_t consolidations = 0;
  for (const auto& ph : s.phases.phases)
    if (ph.kind == swarm::PhaseKind::consolidation) ++consolidations;
  std::printf("consolidations      %zu\n", consolidations);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Age-structured swarm colony simulator"};
  app.require_subcommand(1);

  Source run_src;
  std::optional<double> dt;
  std::optional<std::size_t> steps;
  std::optional<std::size_t> stride;
  std::optional<int> sign;
  std::optional<std::string> out_dir;
  std::optional<std::size_t> snapshot_every;

  auto* run = app.add_subcommand("run", "Run one simulation and write its output files");
  run->add_option("--preset", run_src.preset, "sim1, sim2 or sim3");
  run->add_option("--config", run_src.config, "Configuration file");
  run->add_option("--dt", dt, "Time step (the horizon is kept unless --steps is given)");
  run->add_option("--steps", steps, "Number of time steps");
  run->add_option("--stride", stride,
                  "Ageing stride nu; without --dt the time step is divided by nu so the age "
                  "step and the horizon are kept");
  run->add_option("--sign", sign, "Transport sign, -1 (down-gradient) or +1");
  run->add_option("--out", out_dir, "Output directory");
  run->add_option("--snapshot-every", snapshot_every, "Snapshot stride in steps");

  Source cmp_src;
  std::string dts_text;
  double at = 0.0;
  std::string cmp_out = "out";
  auto* cmp = app.add_subcommand("compare", "Compare thickness profiles across time steps");
  cmp->add_option("--preset", cmp_src.preset, "sim1, sim2 or sim3");
  cmp->add_option("--config", cmp_src.config, "Configuration file");
  cmp->add_option("--dts", dts_text, "Comma-separated time steps")->required();
  cmp->add_option("--at", at, "Comparison time")->required();
  cmp->add_option("--out", cmp_out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*run) {
      swarm::RunConfig cfg = resolve(run_src);
      const double horizon = cfg.horizon();
      if (stride) {
        if (*stride == 0) throw swarm::InvalidArgument("grid.nu", "must be >= 1");
        if (!dt) {
          cfg.grid.dt /= static_cast<double>(*stride);
          cfg.grid.n_steps *= *stride;
        }
        cfg.grid.nu = *stride;
      }
      if (dt) {
        cfg.grid.dt = *dt;
        cfg.grid.n_steps = static_cast<std::size_t>(std::llround(horizon / *dt));
      }
      if (steps) cfg.grid.n_steps = *steps;
      if (sign) cfg.scheme.transport_sign = *sign;
      if (out_dir) cfg.outputs.dir = *out_dir;
      if (snapshot_every) cfg.outputs.snapshot_every = *snapshot_every;
      swarm::resize_grid(cfg);
      swarm::validate(cfg);
      const auto summary = swarm::run(cfg);
      print_summary(cfg, summary);
      return 0;
    }

    swarm::RunConfig cfg = resolve(cmp_src);
    std::vector<double> dts;
    std::size_t pos = 0;
    while (pos <= dts_text.size()) {
      const auto comma = dts_text.find(',', pos);
      const auto item = dts_text.substr(pos, comma == std::string::npos ? std::string::npos
                                                                        : comma - pos);
      if (!item.empty()) dts.push_back(swarm::detail::parse_double("--dts", item));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    const auto rows = dts.size() < 2 ? std::vector<swarm::ConvergenceRow>{}
                                     : swarm::compare(cfg, dts, at);
    std::filesystem::create_directories(cmp_out);
    const std::string table = swarm::format_convergence(rows);
    swarm::write_text(std::filesystem::path(cmp_out) / "convergence.csv", table);
    std::cout << table;
    return 0;
  } catch (const swarm::InvalidArgument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "numerical abort: " << e.what() << "\n";
    return 2;
  }
}

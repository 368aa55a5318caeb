// romnet: command-line driver of the ROM-net workflow.

#include "romnet/pipeline.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <optional>

namespace {

struct CommonFlags {
  std::string config;
  std::string out = "romnet-store";
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  bool force = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "JSON configuration file (defaults are used when omitted)");
  cmd->add_option("--out", f.out, "artifact store directory")->capture_default_str();
  cmd->add_option("--seed", f.seed, "seed of the command's random input (overrides the configuration)");
  cmd->add_option("--workers", f.workers, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_flag("--force", f.force, "recompute even when the artifact is up to date");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"romnet: dictionary-based ROM-net for a thermo-mechanical toy blade"};
  app.require_subcommand(1);
  CommonFlags flags;
  int sample = -1;
  int cluster = -1;
  std::optional<int> draws;

  struct Cmd {
    const char* name;
    const char* help;
  };
  const Cmd cmds[] = {
      {"mesh", "generate the blade mesh"},
      {"thermal-build", "build the stochastic temperature model"},
      {"doe", "build the MaxProj LHS and Sobol designs"},
      {"hfm-run", "run high-fidelity solves of the DoE samples"},
      {"cluster", "k-medoids clustering of the MaxProj snapshots"},
      {"train-rom", "train the local hyper-reduced ROMs"},
      {"train-classifier", "feature selection and ROM recommendation classifier"},
      {"train-gappy", "train the Gappy surrogates"},
      {"uq", "Monte Carlo uncertainty quantification with the ROM-net"},
      {"validate", "compare the ROM-net with the HFM on new loadings"},
      {"report", "print a summary of every artifact"},
      {"all", "run every stage in order"},
  };
  std::map<std::string, CLI::App*> sub;
  for (const auto& c : cmds) {
    CLI::App* s = app.add_subcommand(c.name, c.help);
    add_common(s, flags);
    sub[c.name] = s;
  }
  sub["hfm-run"]->add_option("--sample", sample, "single DoE sample id (all samples when omitted)");
  sub["train-rom"]->add_option("--cluster", cluster, "single cluster id (all clusters when omitted)");
  sub["uq"]->add_option("--draws", draws, "number of Monte Carlo draws")->check(CLI::NonNegativeNumber);
  sub["validate"]->add_option("--draws", draws, "number of new loadings")->check(CLI::NonNegativeNumber);
  sub["all"]->add_option("--draws", draws, "number of Monte Carlo draws")->check(CLI::NonNegativeNumber);

  CLI11_PARSE(app, argc, argv);
  std::cout << std::unitbuf;
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    romnet::PipelineConfig cfg = romnet::load_config(flags.config);
    if (flags.workers) cfg.workers = *flags.workers;
    if (flags.seed) {
      if (command == "doe") cfg.seeds.doe = *flags.seed;
      else if (command == "cluster") cfg.seeds.cluster = *flags.seed;
      else if (command == "train-classifier" || command == "train-gappy") cfg.seeds.cv = *flags.seed;
      else if (command == "uq" || command == "all") cfg.seeds.mc = *flags.seed;
      else if (command == "validate") cfg.seeds.validation = *flags.seed;
      else std::cerr << "note: '" << command << "' has no random input; --seed ignored\n";
    }
    if (draws) {
      if (command == "validate") cfg.validation.draws = *draws;
      else cfg.uq.draws = *draws;
    }
    romnet::Pipeline p(cfg, flags.out, std::cout);
    const bool f = flags.force;
    if (command == "mesh") p.run_mesh(f);
    else if (command == "thermal-build") p.run_thermal(f);
    else if (command == "doe") p.run_doe(f);
    else if (command == "hfm-run") p.run_hfm(f, sample);
    else if (command == "cluster") p.run_cluster(f);
    else if (command == "train-rom") p.run_train_rom(f, cluster);
    else if (command == "train-classifier") p.run_train_classifier(f);
    else if (command == "train-gappy") p.run_train_gappy(f);
    else if (command == "uq") p.run_uq(f);
    else if (command == "validate") p.run_validate(f);
    else if (command == "report") std::cout << p.report();
    else if (command == "all") p.run_all(f);
  } catch (const romnet::StaleArtifactError& e) {
    std::cerr << "romnet " << command << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "romnet " << command << ": " << e.what() << "\n";
    return 1;
  }
  return 0;
}

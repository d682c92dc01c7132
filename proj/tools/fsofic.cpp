// Command-line front end: fsofic <command> [options].

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "fsofic/harness.hpp"

namespace fs = std::filesystem;
using namespace fsofic;

namespace {

struct CommonFlags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  std::optional<std::uint64_t> cap_exact;
  std::optional<std::uint64_t> cap_labels;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "JSON experiment config");
    app->add_option("--seed", seed, "RNG seed (overrides the config)");
    app->add_option("--threads", threads, "worker threads, 0 = all cores")->capture_default_str();
    app->add_option("--cap-exact", cap_exact, "max n!^r actions for exact enumeration");
    app->add_option("--cap-labels", cap_labels, "max |A|^n labelings per action");
    app->add_option("--out", out, "write the result here instead of stdout");
  }

  RunOptions run_options() const {
    RunOptions options;
    options.seed = seed;
    options.threads = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
    options.cap_exact = cap_exact;
    options.cap_labels = cap_labels;
    return options;
  }
};

bool is_keyword(const std::string& key, const Json& value) {
  return key == "sft" && value.is_string() && (value == "full" || value == "full_shift");
}

// Replaces file references (relative to `base`) with the files' contents.
void resolve_references(Json& config, const fs::path& base) {
  for (const char* key : {"weight", "marginals", "other", "sft", "sigma", "automorphism"}) {
    if (!config.contains(key)) continue;
    Json& value = config[key];
    if (!value.is_string() || is_keyword(key, value)) continue;
    const fs::path path = fs::path(value.get<std::string>());
    value = load_json(path.is_absolute() ? path : base / path);
  }
}

Json load_config(const CommonFlags& flags) {
  if (flags.config.empty()) return Json::object();
  Json config = load_json(flags.config);
  if (!config.is_object()) throw InputError("config must be a JSON object");
  resolve_references(config, fs::path(flags.config).parent_path());
  return config;
}

void set_file(Json& config, const char* key, const std::string& path) {
  if (path.empty()) return;
  config[key] = path;
  resolve_references(config, fs::current_path());
}

int emit(const Report& report, const std::string& out) {
  if (out.empty()) {
    std::cout << report.text;
  } else {
    std::ofstream file(out, std::ios::binary);
    if (!file) throw InputError("cannot write '" + out + "'");
    file << report.text;
  }
  if (report.code != ExitCode::kSuccess) std::cerr << "fsofic: check failed (exit " << static_cast<int>(report.code) << ")\n";
  return static_cast<int>(report.code);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"f-invariant and microstate toolkit for free-group shifts"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string weight_path, other_path, sft_path;
  std::optional<int> rho_max, m;
  std::optional<std::uint64_t> q;

  auto* f_exact = app.add_subcommand("f-exact", "f of a Markov weight with the F constancy table");
  flags.attach(f_exact);
  f_exact->add_option("weight", weight_path, "weight JSON");
  f_exact->add_option("--rho-max", rho_max, "largest join radius in the constancy table");

  auto* f_est = app.add_subcommand("f-estimate", "microstate-count estimates per n, as CSV");
  flags.attach(f_est);
  f_est->add_option("--sft", sft_path, "SFT restriction: JSON file or 'full'");

  auto* rearrange = app.add_subcommand("rearrange", "build tau from (sigma, x) and verify the transport identities");
  flags.attach(rearrange);

  auto* verify = app.add_subcommand("sft-verify", "check a configuration against an SFT (default Z_rho)");
  flags.attach(verify);

  auto* weight = app.add_subcommand("weight", "weight tools");
  weight->require_subcommand(1);
  auto* validate = weight->add_subcommand("validate", "check Balanced and Normalized");
  auto* rationalize = weight->add_subcommand("rationalize", "nearby weight with denominators <= q");
  auto* markovize = weight->add_subcommand("markovize", "Markov weight from marginals on B(e, m+1)");
  auto* distance = weight->add_subcommand("distance", "l1 distance between edge tables");
  for (auto* sub : {validate, rationalize, markovize, distance}) {
    flags.attach(sub);
    sub->add_option("input", weight_path, "weight (or marginals) JSON");
  }
  rationalize->add_option("--q", q, "denominator bound");
  rationalize->add_option("--sft", sft_path, "nearest-neighbour SFT whose allowed edges bound the support");
  markovize->add_option("--m", m, "inner radius m");
  distance->add_option("other", other_path, "second weight JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ExitCode::kInputError);
  }

  try {
    Json config = load_config(flags);
    const RunOptions options = flags.run_options();
    Report report;
    if (f_exact->parsed()) {
      set_file(config, "weight", weight_path);
      if (rho_max) config["rho_max"] = *rho_max;
      report = cmd_f_exact(config, options);
    } else if (f_est->parsed()) {
      if (!sft_path.empty()) set_file(config, "sft", sft_path);
      report = cmd_f_estimate(config, options);
    } else if (rearrange->parsed()) {
      report = cmd_rearrange(config, options);
    } else if (verify->parsed()) {
      report = cmd_sft_verify(config, options);
    } else {
      const CLI::App* action = weight->get_subcommands().front();
      config["action"] = action->get_name();
      if (!weight_path.empty()) {
        const fs::path path(weight_path);
        const Json input = load_json(path);
        const bool marginals = input.is_object() && input.contains("entries");
        config[marginals ? "marginals" : "weight"] = input;
      }
      set_file(config, "other", other_path);
      set_file(config, "sft", sft_path);
      if (q) config["q"] = *q;
      if (m) config["m"] = *m;
      report = cmd_weight(config, options);
    }
    return emit(report, flags.out);
  } catch (const Error& e) {
    std::cerr << "fsofic: " << e.what() << "\n";
    return static_cast<int>(e.exit_code());
  } catch (const std::exception& e) {
    std::cerr << "fsofic: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kInputError);
  }
}

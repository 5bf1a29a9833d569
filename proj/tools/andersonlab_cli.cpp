#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include <andersonlab/andersonlab.hpp>

namespace {

struct CliState {
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir;
  int workers = 0;
};

void add_common_options(CLI::App* sub, CliState& st) {
  sub->add_option("--config", st.config_path, "path to the JSON run configuration")
      ->required()
      ->check(CLI::ExistingFile);
  sub->add_option("--seed", st.seed, "override the config's master seed");
  sub->add_option("--out", st.out_dir, "override the config's output directory");
  sub->add_option("--workers", st.workers, "override the config's worker count");
}

int run(const CLI::App* sub, const CliState& st) {
  const std::string text = andersonlab::read_text_file(st.config_path);
  andersonlab::json echo;
  try {
    echo = andersonlab::json::parse(text);
  } catch (const andersonlab::json::exception& e) {
    throw andersonlab::ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  const andersonlab::Config cfg = andersonlab::parse_config(echo);

  andersonlab::RunOverrides ov;
  if (sub->count("--seed") > 0) ov.seed = st.seed;
  if (sub->count("--out") > 0) ov.out_dir = st.out_dir;
  if (sub->count("--workers") > 0) ov.workers = st.workers;

  const andersonlab::RunResult res = andersonlab::run_subcommand(sub->get_name(), cfg, echo, ov);
  for (const auto& f : res.files) std::cout << (res.out_dir / f).string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"finite-volume spectral statistics for random Schrodinger operators"};
  app.set_version_flag("--version", std::string(andersonlab::version_string));
  app.require_subcommand(1);

  CliState st;
  const char* names[] = {"counts", "ids", "verify", "localize", "compare"};
  const char* descs[] = {
      "rescaled eigenvalue counts and Poisson diagnostics",
      "integrated density of states and its fractional derivative ladder",
      "Wegner, Minami, and diagonal Green function bounds",
      "fractional-moment decay of the Green function",
      "full-box vs block-sum count laws along a box ladder",
  };
  for (int i = 0; i < 5; ++i) add_common_options(app.add_subcommand(names[i], descs[i]), st);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // bad invocation is a configuration error
  }

  const CLI::App* sub = app.get_subcommands().front();
  try {
    return run(sub, st);
  } catch (const andersonlab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const andersonlab::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

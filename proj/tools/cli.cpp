#include "cli.hpp"

#include <CLI11.hpp>

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mtmrc/bench.hpp"
#include "mtmrc/convolution.hpp"
#include "mtmrc/errors.hpp"
#include "mtmrc/inversion.hpp"
#include "mtmrc/io.hpp"
#include "mtmrc/renewal.hpp"
#include "mtmrc/simulate.hpp"

namespace mtmrc {

namespace {

std::vector<std::size_t> parse_corner(const std::string& text, const char* flag) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t pos = 0;
    long long v = -1;
    try {
      v = std::stoll(item, &pos);
    } catch (const std::exception&) {
      throw ArgumentError(std::string(flag) + ": '" + text + "' is not a comma-separated list of integers");
    }
    if (pos != item.size() || v < 0) throw ArgumentError(std::string(flag) + ": bad entry '" + item + "'");
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw ArgumentError(std::string(flag) + ": empty corner");
  return out;
}

void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-")
    out << text;
  else
    write_text_file(path, text);
}

ConvolveMethod parse_convolve_method(const std::string& m) {
  if (m == "direct") return ConvolveMethod::direct;
  if (m == "fft") return ConvolveMethod::fft;
  if (m == "auto") return ConvolveMethod::automatic;
  throw ArgumentError("--method must be direct, fft or auto");
}

SemiMarkovKernel read_kernel(const std::string& path, const std::string& grid_text,
                             std::optional<ParametricKernelSpec>* spec_out = nullptr) {
  const KernelFile kf = kernel_file_from_json(read_json_file(path));
  std::optional<Grid> grid;
  if (!grid_text.empty()) grid = Grid(parse_corner(grid_text, "--grid"));
  if (spec_out && !kf.dense) *spec_out = kf.parametric;
  return load_kernel(kf, grid);
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Discrete multi-time Markov renewal chains: convolution algebra, inversion, analysis, simulation"};
  app.require_subcommand(1);

  std::string a_path, b_path, out_path, fact_path, method = "auto", inv_method = "gauss-jordan";
  auto* conv = app.add_subcommand("convolve", "Convolve two matrix sequences");
  conv->add_option("A", a_path, "First operand (JSON)")->required();
  conv->add_option("B", b_path, "Second operand (JSON)")->required();
  conv->add_option("--method", method, "direct, fft or auto")->check(CLI::IsMember({"direct", "fft", "auto"}));
  conv->add_option("--out", out_path, "Output file (stdout if omitted)");

  auto* inv = app.add_subcommand("invert", "Convolutional inverse of a matrix sequence");
  inv->add_option("A", a_path, "Input (JSON)")->required();
  inv->add_option("--method", inv_method, "series, recurrence, newton or gauss-jordan")
      ->check(CLI::IsMember({"series", "recurrence", "newton", "gauss-jordan"}));
  inv->add_option("--out", out_path, "Output file (stdout if omitted)");
  inv->add_option("--factorization-out", fact_path, "Write the Gauss-Jordan factorization here");

  std::string kernel_path, grid_text;
  auto* ana = app.add_subcommand("analyze", "Renewal analysis of a semi-Markov kernel");
  ana->add_option("kernel", kernel_path, "Kernel file (JSON)")->required();
  ana->add_option("--grid", grid_text, "Grid corner, e.g. 40,40");
  ana->add_option("--out", out_path, "Write the full analysis JSON here");
  ana->add_option("--method", inv_method, "Inversion method for u")
      ->check(CLI::IsMember({"series", "recurrence", "newton", "gauss-jordan"}));

  std::size_t paths = 200000;
  std::uint64_t seed = 1;
  std::string horizon_text;
  std::vector<std::string> targets;
  auto* sim = app.add_subcommand("simulate", "Monte Carlo estimates from a kernel");
  sim->add_option("kernel", kernel_path, "Kernel file (JSON)")->required();
  sim->add_option("--grid", grid_text, "Grid corner for a parametric kernel");
  sim->add_option("--paths", paths, "Paths per target")->check(CLI::Range(std::size_t{100}, std::size_t{1} << 40));
  sim->add_option("--seed", seed, "Master seed");
  sim->add_option("--horizon", horizon_text, "Time-out corner for passage-time targets (default 200 per axis)");
  sim->add_option("--targets", targets,
                  "Targets (1-based): P:i:j:k1,k2  U:i:j:k1,k2  G:i:j:k1,k2  mu:i:j:u  mu2:j:u:v");
  sim->add_option("--out", out_path, "JSONL output file (stdout if omitted)");

  std::string suite = "conv1d";
  std::size_t reps = 10, bench_states = 3;
  std::vector<std::size_t> sizes;
  auto* bench = app.add_subcommand("bench", "Timing comparison of the convolution and inversion methods");
  bench->add_option("--suite", suite, "conv1d, conv2d, inv1d or inv2d")
      ->check(CLI::IsMember({"conv1d", "conv2d", "inv1d", "inv2d"}));
  bench->add_option("--reps", reps, "Replications per method")->check(CLI::PositiveNumber);
  bench->add_option("--sizes", sizes, "Lengths (1-d) or per-axis bounds (2-d)");
  bench->add_option("--seed", seed, "Fixture seed");
  bench->add_option("--states", bench_states, "State count s")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::shape);
  }

  try {
    if (conv->parsed()) {
      const MatrixSeq a = matrix_seq_from_json(read_json_file(a_path));
      const MatrixSeq b = matrix_seq_from_json(read_json_file(b_path));
      emit(out_path, to_json(convolve(a, b, parse_convolve_method(method))).dump() + "\n", out);
    } else if (inv->parsed()) {
      const MatrixSeq a = matrix_seq_from_json(read_json_file(a_path));
      const InverseMethod m = parse_inverse_method(inv_method);
      if (m == InverseMethod::gauss_jordan) {
        auto [inverse, fact] = inverse_gauss_jordan(a);
        if (!fact_path.empty()) write_text_file(fact_path, to_json(fact).dump() + "\n");
        emit(out_path, to_json(inverse).dump() + "\n", out);
      } else {
        if (!fact_path.empty()) throw ArgumentError("--factorization-out needs --method gauss-jordan");
        emit(out_path, to_json(invert(a, m)).dump() + "\n", out);
      }
    } else if (ana->parsed()) {
      std::optional<ParametricKernelSpec> spec;
      const SemiMarkovKernel q = read_kernel(kernel_path, grid_text, &spec);
      AnalysisOptions opts;
      opts.method = parse_inverse_method(inv_method);
      opts.parametric = spec;
      const MrcAnalysis res = analyze(q, opts);
      if (!res.ergodic) err << "warning: " << res.warning << '\n';
      out << summary_table(res);
      if (!out_path.empty()) write_text_file(out_path, to_json(res).dump() + "\n");
    } else if (sim->parsed()) {
      const SemiMarkovKernel q = read_kernel(kernel_path, grid_text);
      EstimateOptions opts;
      opts.paths = paths;
      opts.seed = seed;
      if (!horizon_text.empty()) opts.passage_horizon = parse_corner(horizon_text, "--horizon");
      std::vector<EstimateTarget> parsed;
      for (const auto& t : targets) parsed.push_back(parse_target(t, q.states(), q.grid().dims()));
      std::string text;
      for (const auto& r : estimate(q, parsed, opts)) text += to_json(r).dump() + "\n";
      emit(out_path, text, out);
    } else if (bench->parsed()) {
      out << format_bench(run_bench(parse_bench_suite(suite), reps, sizes, seed, bench_states));
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(e.exit_code());
  } catch (const json::exception& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::shape);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace mtmrc

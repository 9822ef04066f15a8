// qgraph: spectra of metric graphs and spectrum-driven graph evolution.
//
//   qgraph spectrum GRAPH [--k-max K] [--mode auto|scan|rational] [--bind c1=..]
//   qgraph plot-dk GRAPH --k-range a:b:n [--bind c1=..]
//   qgraph evolve CONFIG --out DIR
//   qgraph experiments [NAME...] --out DIR
//   qgraph serve [--host H] [--port P] [--graph FILE] [--static DIR]
//
// Exit codes: 0 ok, 1 runtime failure, 2 invalid input.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "qgraph/commands.hpp"
#include "qgraph/config.hpp"
#include "qgraph/error.hpp"
#include "qgraph/server.hpp"
#include "qgraph/text.hpp"

namespace fs = std::filesystem;
using namespace qgraph;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitInput = 2;

bool is_input_error(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidGraph:
    case ErrorKind::UnboundParameter:
    case ErrorKind::ParseError:
    case ErrorKind::InvalidConfig:
      return true;
    default:
      return false;
  }
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw Error(ErrorKind::InvalidConfig, "cannot write " + out_path);
  out << text;
}

ParameterBinding binding(const std::string& text) {
  return text.empty() ? ParameterBinding{} : ParameterBinding::parse(text);
}

// Runs a config to completion, streaming the log into `dir`.
int evolve(const RunConfig& config, const fs::path& dir) {
  EvolutionRun run(config);
  RunWriter writer(dir, run.log());
  while (!run.done()) {
    try {
      const EvolutionStep& st = run.advance();
      writer.append(st);
      std::cerr << config.name << ": step " << st.index + 1 << '/' << config.steps << " score "
                << format_double(st.score) << '\n';
    } catch (const Error& e) {
      std::cerr << "error: " << e.what() << '\n';
      break;
    }
  }
  writer.finish(run.log());
  return run.log().aborted ? kExitRuntime : 0;
}

fs::path experiment_path(const fs::path& dir, std::string name) {
  if (name.size() == 1 && name[0] >= '1' && name[0] <= '5') name = "exp" + name;
  return dir / (name + ".json");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectra of metric graphs and spectrum-driven graph evolution"};
  app.require_subcommand(1);

  std::string graph_file, bind_text, mode_text = "auto", format = "csv", out_file, k_range;
  double k_max = RootSearchOptions{}.k_max;
  std::string k_max_text;
  bool raw = false;

  auto* spectrum = app.add_subcommand("spectrum", "Laplacian spectrum of a graph file as CSV or JSON");
  spectrum->add_option("graph", graph_file, "Graph file")->required();
  spectrum->add_option("--k-max", k_max_text, "Upper end of the k window (pi-aware, default 12pi)");
  spectrum->add_option("--mode", mode_text, "auto, scan or rational")->check(CLI::IsMember({"auto", "scan", "rational"}));
  spectrum->add_option("--bind", bind_text, "Parameter values, e.g. c1=pi,c2=2");
  spectrum->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  spectrum->add_flag("--raw", raw, "Do not rescale to total length one");
  spectrum->add_option("-o,--output", out_file, "Write to a file instead of stdout");

  auto* plot = app.add_subcommand("plot-dk", "Sample sigma_min(k) and D(k) over a k range as CSV");
  plot->add_option("graph", graph_file, "Graph file")->required();
  plot->add_option("--k-range", k_range, "a:b:n, e.g. 0:4pi:1000")->required();
  plot->add_option("--bind", bind_text, "Parameter values; zero contracts the edge");
  plot->add_flag("--raw", raw, "Do not rescale to total length one");
  plot->add_option("-o,--output", out_file, "Write to a file instead of stdout");

  std::string config_file, out_dir;
  auto* evolve_cmd = app.add_subcommand("evolve", "Run an evolution config");
  evolve_cmd->add_option("config", config_file, "Run config file")->required();
  evolve_cmd->add_option("--out", out_dir, "Output directory")->required();

  std::vector<std::string> names;
  std::string experiments_dir = QGRAPH_EXPERIMENTS_DIR;
  auto* experiments = app.add_subcommand("experiments", "Run built-in experiment configs (1-5, program)");
  experiments->add_option("names", names, "Experiments to run (default: all)");
  experiments->add_option("--out", out_dir, "Output directory; one subdirectory per experiment")->required();
  experiments->add_option("--dir", experiments_dir, "Directory holding the configs");

  ServeOptions serve_opts;
  std::string static_dir;
  auto* serve_cmd = app.add_subcommand("serve", "HTTP/JSON service for the web UI");
  serve_cmd->add_option("--host", serve_opts.host, "Bind address");
  serve_cmd->add_option("--port", serve_opts.port, "Port");
  serve_cmd->add_option("--graph", graph_file, "Initial session graph");
  serve_cmd->add_option("--static", static_dir, "Directory of web UI assets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (*spectrum) {
      if (!k_max_text.empty()) k_max = parse_real(k_max_text);
      const MetricGraph g = prepare_graph(read_graph_file(graph_file), binding(bind_text), !raw);
      const auto r = spectrum_of(g, k_max, parse_mode(mode_text));
      for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
      emit(format == "json" ? spectrum_to_json(r.spectrum).dump(2) + "\n" : spectrum_csv(r.spectrum), out_file);
    } else if (*plot) {
      const KRange range = parse_k_range(k_range);
      const MetricGraph g = prepare_graph(read_graph_file(graph_file), binding(bind_text), !raw);
      emit(secular_csv(plot_dk(g, range)), out_file);
    } else if (*evolve_cmd) {
      return evolve(read_config_file(config_file), out_dir);
    } else if (*experiments) {
      if (names.empty()) names = {"exp1", "exp2", "exp3", "exp4", "exp5", "program"};
      int status = 0;
      for (const auto& name : names) {
        const fs::path path = experiment_path(experiments_dir, name);
        const RunConfig config = read_config_file(path);
        status = std::max(status, evolve(config, fs::path(out_dir) / path.stem()));
      }
      return status;
    } else if (*serve_cmd) {
      MetricGraph g = graph_file.empty() ? families::cycle(3, 1.0 / 3.0) : read_graph_file(graph_file);
      if (!static_dir.empty()) serve_opts.static_dir = static_dir;
      std::cerr << "serving on http://" << serve_opts.host << ':' << serve_opts.port << '\n';
      const int rc = serve(serve_opts, std::move(g));
      if (rc != 0) std::cerr << "error: cannot listen on " << serve_opts.host << ':' << serve_opts.port << '\n';
      return rc == 0 ? 0 : kExitRuntime;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return is_input_error(e.kind()) ? kExitInput : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}

#pragma once

// Command-line front end. run_cli is separate from main() so tests can
// drive it in-process and inspect output and exit codes.
//
// Exit codes: 0 success, 1 model/domain error, 2 usage error.

#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "dbobs/dbobs.hpp"

namespace dbobs::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitModel = 1;
inline constexpr int kExitUsage = 2;

/// Systems the `example` subcommand can write out.
inline std::map<std::string, LinearSystem> named_systems() {
  std::map<std::string, LinearSystem> out;
  Matrix rot(2, 2);
  rot << 0, -1, 1, 0;
  Matrix c01(1, 2);
  c01 << 0, 1;
  out.emplace("rotation", LinearSystem(rot, c01));

  Matrix shift(3, 3);
  shift << 0, 1, 0, 0, 0, 1, 1, 0, 0;
  Matrix c100(1, 3);
  c100 << 1, 0, 0;
  out.emplace("cyclic", LinearSystem(shift, c100));

  Matrix c10(1, 2);
  c10 << 1, 0;
  out.emplace("unobservable", LinearSystem(Matrix::Identity(2, 2), c10));

  Matrix nil(2, 2);
  nil << 0, 1, 0, 0;
  out.emplace("nilpotent", LinearSystem(nil, c10));
  return out;
}

namespace detail {

inline std::string join(const std::vector<Eigen::Index>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(v[i]);
  }
  return s;
}

inline std::string vec_str(const Matrix& v) {
  std::string s = "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += format_double(v(i));
  }
  return s + "]";
}

/// Writes `text` to `path`, or to `out` when path is "-".
inline void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path);
  if (!f) throw InvalidInput("cannot write '" + path + "'");
  f << text;
}

}  // namespace detail

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Deadbeat observers via iterated set intersection"};
  app.require_subcommand(1);
  double tol = kDefaultSystemTol;
  app.add_option("--tol", tol, "Relative rank tolerance for structural decisions")->check(CLI::PositiveNumber);

  // check
  auto* check = app.add_subcommand("check", "PBH and subspace-chain deadbeat observability tests");
  std::string check_file;
  check->add_option("system", check_file, "System JSON file")->required();

  // gain
  auto* gain = app.add_subcommand("gain", "Deadbeat observer gain (scalar output)");
  std::string gain_file;
  std::string gain_method = "both";
  gain->add_option("system", gain_file, "System JSON file")->required();
  gain->add_option("--method", gain_method, "alg1 | ackermann | both")
      ->check(CLI::IsMember({"alg1", "ackermann", "both"}));

  // simulate
  auto* sim = app.add_subcommand("simulate", "Simulate plant and observer");
  std::string sim_file;
  std::string sim_x0;
  std::string sim_xhat0;
  int sim_steps = 0;
  bool sim_geometric = false;
  std::string sim_method = "alg1";
  std::string sim_out = "-";
  sim->add_option("system", sim_file, "System JSON file")->required();
  sim->add_option("--x0", sim_x0, "Initial plant state, comma separated")->required();
  sim->add_option("--xhat0", sim_xhat0, "Initial observer state, comma separated")->required();
  sim->add_option("--steps", sim_steps, "Number of steps (at least n)")->required();
  sim->add_flag("--geometric", sim_geometric, "Use the set-intersection observer instead of a gain");
  sim->add_option("--method", sim_method, "Gain when not geometric: alg1 | ackermann | zero")
      ->check(CLI::IsMember({"alg1", "ackermann", "zero"}));
  sim->add_option("--out", sim_out, "Trace CSV path ('-' for stdout)");

  // nonlinear
  auto* nl = app.add_subcommand("nonlinear", "Run one of the packaged nonlinear deadbeat observers");
  std::string nl_example;
  std::string nl_x0;
  std::string nl_xhat0;
  int nl_steps = 0;
  std::string nl_u;
  std::string nl_out = "-";
  nl->add_option("--example", nl_example, "homogeneous | with-input")
      ->required()
      ->check(CLI::IsMember({"homogeneous", "with-input"}));
  nl->add_option("--x0", nl_x0, "Initial plant state")->required();
  nl->add_option("--xhat0", nl_xhat0, "Initial observer state")->required();
  nl->add_option("--steps", nl_steps, "Number of steps (at least 3)")->required();
  nl->add_option("--u", nl_u, "Constant input value, or a file of input values");
  nl->add_option("--out", nl_out, "Trace CSV path ('-' for stdout)");

  // bench
  auto* bench = app.add_subcommand("bench", "Subspace-iteration gain vs Ackermann on random pairs");
  BenchConfig cfg;
  std::string bench_out;
  std::string bench_table_out;
  unsigned workers = 1;
  bench->add_option("--n-min", cfg.n_min, "Smallest dimension (>= 3)");
  bench->add_option("--n-max", cfg.n_max, "Largest dimension");
  bench->add_option("--trials", cfg.trials, "Trials per dimension");
  bench->add_option("--seed", cfg.seed, "Seed");
  bench->add_option("--workers", workers, "Worker threads (0 = all cores); results do not depend on it");
  bench->add_option("--out", bench_out, "CSV report path");
  bench->add_option("--table", bench_table_out, "Text table path");

  // example
  auto* example = app.add_subcommand("example", "Write a named example system as JSON");
  std::string example_name;
  std::string example_out = "-";
  example->add_option("name", example_name, "rotation | cyclic | unobservable | nilpotent")
      ->required()
      ->check(CLI::IsMember({"rotation", "cyclic", "unobservable", "nilpotent"}));
  example->add_option("--out", example_out, "Output path ('-' for stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*check) {
      const LinearSystem sys = read_system_file(check_file, tol);
      const bool pbh = pbh_deadbeat_observable(sys);
      const SubspaceChain chain = subspace_chain(sys);
      const bool sets = chain.last().is_zero();
      out << "pbh: " << (pbh ? "yes" : "no") << '\n';
      out << "subspace chain: " << (sets ? "yes" : "no") << '\n';
      out << "tests agree: " << (pbh == sets ? "yes" : "no") << '\n';
      out << "deadbeat observable: " << (sets ? "yes" : "no") << "; dims S: " << detail::join(chain.dims()) << '\n';
      return pbh == sets ? kExitOk : kExitModel;
    }

    if (*gain) {
      const LinearSystem sys = read_system_file(gain_file, tol);
      auto report = [&](const char* name, const ObserverGain& g) {
        out << name << ": L = " << detail::vec_str(g.L) << "; residual = " << format_double(g.residual) << '\n';
      };
      if (gain_method == "alg1" || gain_method == "both") report("alg1", deadbeat_gain(sys));
      if (gain_method == "ackermann" || gain_method == "both") report("ackermann", ackermann_gain(sys));
      return kExitOk;
    }

    if (*sim) {
      const LinearSystem sys = read_system_file(sim_file, tol);
      ObserverStrategy strategy = GeometricStrategy{};
      if (!sim_geometric) {
        Matrix l;
        if (sim_method == "alg1") {
          l = deadbeat_gain(sys).L;
        } else if (sim_method == "ackermann") {
          l = ackermann_gain(sys).L;
        } else {
          l = Matrix::Zero(sys.n(), sys.m());
        }
        strategy = GainStrategy{l};
      }
      const ObserverTrace trace = simulate_cascade(sys, strategy, parse_vector(sim_x0), parse_vector(sim_xhat0), sim_steps);
      std::ostringstream csv;
      write_trace_csv(csv, trace);
      detail::emit(sim_out, csv.str(), out);
      std::ostream& note = sim_out == "-" ? err : out;
      note << "deadbeat horizon: "
           << (trace.deadbeat_horizon ? std::to_string(*trace.deadbeat_horizon) : std::string("none")) << '\n';
      return kExitOk;
    }

    if (*nl) {
      const ObservedSystem sys = system_by_name(nl_example);
      const Vector x0 = parse_vector(nl_x0);
      const Vector xhat0 = parse_vector(nl_xhat0);
      if (x0.size() != 3 || xhat0.size() != 3) throw InvalidInput("--x0 and --xhat0 need three components");
      std::vector<double> inputs;
      if (sys.has_input) {
        if (nl_u.empty()) throw InvalidInput("--u is required for the with-input example");
        std::size_t used = 0;
        double constant = 0.0;
        bool is_number = false;
        try {
          constant = std::stod(nl_u, &used);
          is_number = used == nl_u.size();
        } catch (const std::exception&) {
        }
        if (is_number) {
          inputs.assign(static_cast<std::size_t>(std::max(nl_steps, 0)) + 1, constant);
        } else {
          inputs = read_sequence_file(nl_u);
        }
        for (const auto& [name, v] : {std::pair{"x0", x0}, std::pair{"xhat0", xhat0}}) {
          for (Eigen::Index i = 0; i < 3; ++i) {
            if (!(v(i) > kPositiveFloor)) {
              throw DomainError(std::string(name) + " component " + std::to_string(i + 1) + " is not positive (" +
                                format_double(v(i)) + ")");
            }
          }
        }
        for (std::size_t k = 0; k < inputs.size() && k < static_cast<std::size_t>(std::max(nl_steps, 0)); ++k) {
          if (!(inputs[k] > kPositiveFloor)) {
            throw DomainError("input u(" + std::to_string(k) + ") is not positive (" + format_double(inputs[k]) + ")");
          }
        }
      }
      const NonlinearTrace trace = run_observer(sys, x0, xhat0, inputs, nl_steps);
      std::ostringstream csv;
      write_trace_csv(csv, trace);
      detail::emit(nl_out, csv.str(), out);
      std::ostream& note = nl_out == "-" ? err : out;
      note << "deadbeat horizon: "
           << (trace.deadbeat_horizon ? std::to_string(*trace.deadbeat_horizon) : std::string("none")) << '\n';
      return kExitOk;
    }

    if (*bench) {
      const BenchReport report = run_benchmark(cfg, workers);
      if (!bench_out.empty()) detail::emit(bench_out, bench_csv(report), out);
      const std::string table = bench_table(report);
      if (!bench_table_out.empty()) detail::emit(bench_table_out, table, out);
      out << table;
      return kExitOk;
    }

    if (*example) {
      detail::emit(example_out, system_to_json(named_systems().at(example_name)), out);
      return kExitOk;
    }
  } catch (const InvalidInput& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitModel;
  }
  return kExitUsage;
}

}  // namespace dbobs::cli

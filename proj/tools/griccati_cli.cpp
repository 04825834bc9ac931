// Command-line front end: runs declarative scenarios (bundled or from JSON
// files) and reports their self-check residuals against the scenario gate.
//
// Exit codes: 0 all checks passed, 1 a residual exceeded the gate,
// 2 usage/parse errors, 3 numeric failures (blow-up, lost factorization
// chart, divergence, incompatible data).

#include <griccati/scenario.hpp>

#include <CLI11.hpp>

#include "builtin_scenarios.inc"

#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <iostream>

namespace {

std::string fmt_gate(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

const std::string* find_builtin(const std::string& name) {
  for (const auto& [key, text] : builtin_scenario_table())
    if (key == name) return &text;
  return nullptr;
}

int list_examples() {
  for (const auto& [name, text] : builtin_scenario_table()) {
    std::string kind = "?";
    std::string desc;
    try {
      const auto j = griccati::ordered_json::parse(text);
      kind = j.value("kind", "?");
      desc = j.value("description", "");
    } catch (...) {
    }
    std::cout << name << " (" << kind << ")";
    if (!desc.empty()) std::cout << ": " << desc;
    std::cout << "\n";
  }
  return 0;
}

int run_target(const std::string& target, const griccati::RunOptions& opt) {
  std::string text;
  if (target.rfind("builtin:", 0) == 0) {
    const std::string name = target.substr(8);
    const std::string* body = find_builtin(name);
    if (!body) {
      std::cerr << "error: no bundled scenario named '" << name << "'\n";
      return 2;
    }
    text = *body;
  } else if (std::filesystem::exists(target)) {
    text = griccati::read_text_file(target);
  } else if (const std::string* body = find_builtin(target)) {
    text = *body;
  } else {
    std::cerr << "error: '" << target
              << "' is neither a file nor a bundled scenario\n";
    return 2;
  }

  griccati::RunResult res;
  try {
    res = griccati::run_scenario_text(text, opt);
  } catch (const griccati::ShapeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const griccati::BlowupError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const griccati::DivergenceError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const griccati::NotDecomposableError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const griccati::SingularError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const griccati::NotIntegrableError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const griccati::IntegrabilityError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  }

  std::cout << "scenario: " << res.name << " (" << res.kind << ")\n";
  std::cout << "gate: " << fmt_gate(res.gate) << "\n";
  for (const auto& [label, value] : res.residuals.entries) {
    const bool ok = value < res.gate;
    std::cout << "  " << (ok ? "ok  " : "FAIL") << "  " << std::left
              << std::setw(22) << label << "  " << griccati::fmt_g17(value)
              << "\n";
  }
  if (!res.outputs.empty()) {
    std::cout << "outputs:";
    for (const auto& f : res.outputs) std::cout << " " << f;
    std::cout << "\n";
  }
  std::cout << (res.pass() ? "PASS " : "FAIL ") << res.name << "\n";
  return res.pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"graded matrix Riccati toolkit"};
  app.require_subcommand(1);

  auto* list = app.add_subcommand("list-examples", "list bundled scenarios");

  std::string target, out_dir;
  int steps = -1, grid = -1;
  double gate = -1;
  auto* run = app.add_subcommand("run", "run a scenario (file or bundled name)");
  run->add_option("scenario", target,
                  "path to a scenario JSON, a bundled name, or builtin:<name>")
      ->required();
  run->add_option("--out-dir", out_dir, "write CSV/JSON outputs here");
  run->add_option("--steps", steps, "override the step count");
  run->add_option("--grid", grid, "override every axis node count");
  run->add_option("--gate", gate, "override the pass/fail gate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (list->parsed()) return list_examples();

  griccati::RunOptions opt;
  opt.out_dir = out_dir;
  opt.steps_override = steps;
  opt.grid_override = grid;
  opt.gate_override = gate;
  return run_target(target, opt);
}

// thermo: command-line front end. See README.md for the spec format and the
// CSV columns of each command.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "thermo/driver.hpp"
#include "thermo/error.hpp"

namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw thermo::Error("cannot write " + path.string());
  out << contents;
}

int run(const std::string& command, const std::string& spec_path, const std::string& out_dir,
        const std::string& format, const thermo::RunFlags& flags) {
  thermo::ToolSpec spec = thermo::load_spec(spec_path);
  if (spec.scale_cap && !std::getenv("THERMO_SCALE_CAP")) thermo::set_scale_cap(*spec.scale_cap);

  const thermo::CommandOutput result = thermo::run_command(command, spec, flags);
  const bool jsonl = format == "jsonl";
  const bool many = result.tables.size() > 1;
  for (const auto& [name, table] : result.tables) {
    const std::string body = jsonl ? table.to_jsonl() : table.to_csv();
    if (out_dir.empty()) {
      if (many && !jsonl) std::cout << "# " << name << "\n";
      std::cout << body;
    } else {
      write_file(fs::path(out_dir) / (name + (jsonl ? ".jsonl" : ".csv")), body);
    }
  }
  if (!out_dir.empty())
    for (const auto& [name, contents] : result.files) write_file(fs::path(out_dir) / name, contents);
  return result.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Thermodynamic formalism toolkit for subshifts over Z and Z^2"};
  app.require_subcommand(1);

  std::string spec_path;
  std::string out_dir;
  std::string format = "csv";
  int max_radius = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> cases;

  for (const auto& name : thermo::command_names()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("spec,--spec", spec_path, "Spec file")->check(CLI::ExistingFile);
    sub->add_option("--out-dir", out_dir, "Write tables and artifacts into this directory");
    sub->add_option("--max-radius", max_radius, "Extender search radius")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "Root seed for sampling");
    sub->add_option("--cases", cases, "Case ids to run")->delimiter(',');
    sub->add_option("--format", format, "Output format")->check(CLI::IsMember({"csv", "jsonl"}));
  }

  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();
  auto* sub = app.get_subcommands().front();
  if (spec_path.empty()) {
    std::cerr << "error: a spec file is required\n";
    return 2;
  }

  thermo::RunFlags flags;
  if (sub->count("--max-radius")) flags.max_radius = max_radius;
  if (sub->count("--seed")) flags.seed = seed;
  flags.cases = cases;

  try {
    if (!out_dir.empty()) fs::create_directories(out_dir);
    return run(command, spec_path, out_dir, format, flags);
  } catch (const thermo::ScaleCapError& e) {
    std::cerr << "error: " << e.what() << " (requested " << e.requested() << ")\n";
    return 3;
  } catch (const thermo::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

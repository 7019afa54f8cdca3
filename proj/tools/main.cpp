#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tipping/run.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Rate-induced tipping and tracking experiments for scalar nonautonomous ODEs"};
  app.set_version_flag("--version", std::string(tipping::cli::kVersion));
  app.require_subcommand(1);

  struct Args {
    std::string config;
    std::vector<std::string> overrides;
    std::string out;
  };
  std::map<std::string, Args> args;
  for (const auto& name : tipping::cli::subcommands()) {
    auto* sub = app.add_subcommand(name);
    auto& a = args[name];
    sub->add_option("--config", a.config, "JSON run configuration (a manifest.json also works)")->required();
    sub->add_option("--set", a.overrides, "override a leaf by dotted path, key=value")->take_all();
    sub->add_option("--out", a.out, "output directory (overrides output.dir)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : tipping::cli::ExitCode::failure;
  }

  for (const auto* sub : app.get_subcommands()) {
    const auto& a = args[sub->get_name()];
    tipping::config::json doc;
    try {
      doc = tipping::cli::load_document(a.config);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return tipping::cli::ExitCode::failure;
    }
    const std::optional<std::string> out = a.out.empty() ? std::nullopt : std::optional<std::string>(a.out);
    return tipping::cli::run(sub->get_name(), doc, a.overrides, out, std::cerr);
  }
  return tipping::cli::ExitCode::failure;
}

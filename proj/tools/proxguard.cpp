// proxguard: keygen, simulate, analyze, serve, client.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "proxguard/cli.hpp"
#include "proxguard/error.hpp"

using namespace proxguard;

namespace {

std::vector<double> parse_ratios(const std::string& text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = text.find(',', pos);
    const std::string item = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    // "a..b" expands to the integers a, a+1, ..., b
    if (const auto dots = item.find(".."); dots != std::string::npos) {
      const int lo = std::stoi(item.substr(0, dots));
      const int hi = std::stoi(item.substr(dots + 2));
      if (hi < lo) throw UsageError("empty ratio range '" + item + "'");
      for (int r = lo; r <= hi; ++r) out.push_back(r);
    } else {
      std::size_t used = 0;
      const double v = std::stod(item, &used);
      if (used != item.size()) throw UsageError("invalid ratio '" + item + "'");
      out.push_back(v);
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

std::vector<Semantics> parse_semantics_list(const std::string& text) {
  std::vector<Semantics> out;
  std::size_t pos = 0;
  while (true) {
    const auto comma = text.find(',', pos);
    const std::string item = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    try {
      out.push_back(parse_semantics(item));
    } catch (const ParameterError& e) {
      throw UsageError(e.what());
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

int fail(const std::string& kind, const std::string& what) {
  std::cerr << "error: " << kind << ": " << what << std::endl;
  return kind == "usage" ? 2 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Privacy-preserving proximity detection toolkit"};
  app.require_subcommand(1);

  auto* keygen = app.add_subcommand("keygen", "Generate one shared key per user");
  std::uint32_t key_users = 0;
  std::string key_graph, key_out;
  std::optional<std::uint64_t> key_seed;
  keygen->add_option("-n,--users", key_users, "Number of users")->required();
  keygen->add_option("--graph", key_graph, "Buddy graph to validate against");
  keygen->add_option("--seed", key_seed, "Deterministic seed");
  keygen->add_option("-o,--out", key_out, "Key file (default: stdout)");

  auto* simulate = app.add_subcommand("simulate", "Run every scenario of a manifest");
  std::string manifest_path, out_override;
  simulate->add_option("manifest", manifest_path, "Run manifest")->required();
  simulate->add_option("-o,--output-dir", out_override, "Overrides the manifest output_dir");

  auto* analyze = app.add_subcommand("analyze", "Emit expected precision/recall and uncertainty bounds");
  std::string ratios_text = "1..10", semantics_text = "min-dist,max-dist", aggregation = "minimum";
  AnalyzeRequest req;
  analyze->add_option("--ratios", ratios_text, "Comma list, a..b for integer ranges");
  analyze->add_option("--semantics", semantics_text, "Comma list of min-dist, max-dist, mostly");
  analyze->add_option("--trials", req.trials, "Buddy placements per estimate");
  analyze->add_option("--aggregation", aggregation, "minimum or pooled");
  analyze->add_option("--seed", req.seed, "Monte Carlo seed");
  analyze->add_option("-o,--output-dir", req.output_dir, "Output directory");

  auto* serve = app.add_subcommand("serve", "Run the service provider over TCP");
  ServeOptions sopts;
  serve->add_option("--host", sopts.host, "Bind address");
  serve->add_option("--port", sopts.port, "Port (0 picks one)");
  serve->add_option("--graph", sopts.graph_path, "Buddy graph")->required();
  serve->add_option("--group", sopts.group, "Commutative group: sim512 or modp2048");

  auto* client = app.add_subcommand("client", "Replay a trace against a live server");
  ClientOptions copts;
  std::string protocol_text = "c-hide-seek", client_semantics = "min-dist";
  client->add_option("--host", copts.host, "Server address");
  client->add_option("--port", copts.port, "Server port");
  client->add_option("--keys", copts.key_path, "Key file")->required();
  client->add_option("--graph", copts.graph_path, "Buddy graph")->required();
  client->add_option("--trace", copts.trace_path, "Trace file")->required();
  client->add_option("--protocol", protocol_text, "c-hide-seek or c-hide-hash");
  client->add_option("--semantics", client_semantics, "min-dist, max-dist or mostly");
  client->add_option("--delta", copts.delta, "Proximity threshold (m)");
  client->add_option("--cell-edge", copts.cell_edge, "Granule edge (m)");
  client->add_option("--width", copts.domain_width, "Domain width (m)");
  client->add_option("--height", copts.domain_height, "Domain height (m)");
  client->add_option("--interval", copts.update_interval, "Update interval T (s)");
  client->add_option("--request-period", copts.request_period, "Seconds between requests");
  client->add_option("--group", copts.group, "Commutative group: sim512 or modp2048");
  client->add_option("--seed", copts.seed, "Client randomness seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what());
  }

  try {
    if (keygen->parsed()) {
      const KeyFile keys =
          cmd_keygen(key_users, key_graph.empty() ? std::nullopt : std::optional(key_graph), key_seed);
      if (key_out.empty()) {
        write_key_file(std::cout, keys);
      } else {
        std::ofstream out(key_out, std::ios::trunc);
        if (!out) throw IoError("cannot write '" + key_out + "'");
        write_key_file(out, keys);
      }
      return 0;
    }
    if (simulate->parsed()) {
      RunManifest m = load_manifest(manifest_path);
      apply_seed_override(m);
      if (!out_override.empty()) m.output_dir = out_override;
      const SweepOutcome o = cmd_simulate(m);
      std::cout << o.runs << " runs, " << o.failures << " failed; results in " << m.output_dir << std::endl;
      if (o.failures > 0) return fail("run", std::to_string(o.failures) + " run(s) failed, see failures.csv");
      return 0;
    }
    if (analyze->parsed()) {
      req.ratios = parse_ratios(ratios_text);
      req.semantics = parse_semantics_list(semantics_text);
      if (aggregation == "minimum") req.aggregation = Aggregation::kMinimum;
      else if (aggregation == "pooled") req.aggregation = Aggregation::kPooled;
      else throw UsageError("aggregation must be minimum or pooled");
      cmd_analyze(req);
      return 0;
    }
    if (serve->parsed()) return cmd_serve(sopts, std::cout);
    if (client->parsed()) {
      copts.protocol = parse_protocol(protocol_text);
      try {
        copts.semantics = parse_semantics(client_semantics);
      } catch (const ParameterError& e) {
        throw UsageError(e.what());
      }
      return cmd_client(copts, std::cout);
    }
  } catch (const Error& e) {
    return fail(e.kind(), e.what());
  } catch (const std::invalid_argument& e) {
    return fail("usage", std::string("invalid number: ") + e.what());
  } catch (const std::exception& e) {
    return fail("internal", e.what());
  }
  return 0;
}

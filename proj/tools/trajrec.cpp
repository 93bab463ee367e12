// Command-line front end: ingest -> mask -> fetch-net -> run -> eval -> report.

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "trajrec/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"GPS trajectory gap reconstruction toolkit"};
  app.require_subcommand(1);

  // ingest
  std::string gpx_dir, region_map, dataset_out = "dataset.jsonl", rejects_out;
  auto* ingest = app.add_subcommand("ingest", "Parse GPX files into a trajectory dataset");
  ingest->add_option("--gpx-dir", gpx_dir, "Directory of .gpx files")->required();
  ingest->add_option("--region-map", region_map, "JSON file mapping file name to region");
  ingest->add_option("--out", dataset_out, "Output dataset JSONL");
  ingest->add_option("--rejects", rejects_out, "Rejection log JSONL");

  // mask
  std::string mask_dataset, tasks_out = "tasks.jsonl", failures_out;
  std::uint64_t seed = 0;
  auto* mask = app.add_subcommand("mask", "Derive masked gap tasks from a dataset");
  mask->add_option("--dataset", mask_dataset, "Dataset JSONL from ingest")->required();
  mask->add_option("--out", tasks_out, "Output tasks JSONL");
  mask->add_option("--failures", failures_out, "Infeasible-mask log JSONL");
  mask->add_option("--seed", seed, "Gap placement seed");

  // fetch-net
  std::string fetch_tasks, cache_dir = "cache", endpoint = trajrec::kDefaultOverpassEndpoint,
              fetch_log;
  auto* fetch = app.add_subcommand("fetch-net", "Download road networks for each task");
  fetch->add_option("--tasks", fetch_tasks, "Tasks JSONL from mask")->required();
  fetch->add_option("--cache-dir", cache_dir, "Query cache directory (doubles as resume state)");
  fetch->add_option("--endpoint", endpoint, "Query endpoint URL");
  fetch->add_option("--log", fetch_log, "Fetch log JSONL");

  // run
  trajrec::RunConfig run_cfg;
  std::string run_provider, run_repr = "topology_direction";
  auto* run = app.add_subcommand("run", "Reconstruct masked gaps with a method");
  run->add_option("--tasks", run_cfg.tasks_path, "Tasks JSONL")->required();
  run->add_option("--method", run_cfg.method,
                  "linear | linear-hmm | llm:<provider> | polyline-file:<path>");
  run->add_option("--provider", run_provider, "Provider name (shorthand for --method llm:<name>)");
  run->add_option("--config", run_cfg.config_path, "Provider registry JSON");
  run->add_option("--cache-dir", run_cfg.cache_dir, "Network cache directory");
  run->add_option("--out", run_cfg.out_dir, "Output directory");
  run->add_option("--seed", run_cfg.seed, "Run seed (recorded in the manifest)");
  run->add_option("--tau", run_cfg.tau, "PoT tolerance recorded in the manifest");
  run->add_option("--parallelism", run_cfg.parallelism, "Concurrent reconstructions");
  run->add_option("--representation", run_repr,
                  "raw_json | adjacency_list | topology_only | topology_direction");
  run->add_flag("--resume", run_cfg.resume, "Keep completed tasks, append the rest");

  // eval
  std::string eval_tasks, eval_recon, records_out = "records.jsonl", summary_out,
              eval_cache = "cache";
  double tau = 10.0;
  auto* eval = app.add_subcommand("eval", "Score reconstructions against ground truth");
  eval->add_option("--tasks", eval_tasks, "Tasks JSONL")->required();
  eval->add_option("--recon", eval_recon, "Reconstruction JSONL from run")->required();
  eval->add_option("--records", records_out, "Output per-task records JSONL");
  eval->add_option("--summary", summary_out, "Output summary CSV");
  eval->add_option("--tau", tau, "PoT tolerance in meters");
  eval->add_option("--cache-dir", eval_cache, "Network cache directory (plan diagnostics)");

  // report
  std::string report_records, report_out = "report", report_tasks, report_recon;
  auto* report = app.add_subcommand("report", "Aggregate records into breakdown CSVs and GeoJSON");
  report->add_option("--records", report_records, "Records JSONL from eval")->required();
  report->add_option("--out", report_out, "Output directory");
  report->add_option("--tasks", report_tasks, "Tasks JSONL (enables GeoJSON export)");
  report->add_option("--recon", report_recon, "Reconstruction JSONL (enables GeoJSON export)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) {
      const auto stats = trajrec::cmd_ingest(gpx_dir, region_map, dataset_out, rejects_out);
      std::cout << "accepted " << stats.accepted << ", rejected " << stats.rejected
                << ", unreadable " << stats.unreadable << "\n";
    } else if (*mask) {
      const auto stats = trajrec::cmd_mask(mask_dataset, tasks_out, failures_out, seed);
      std::cout << "tasks " << stats.tasks << ", infeasible " << stats.infeasible << "\n";
    } else if (*fetch) {
      const auto stats = trajrec::cmd_fetch_net(fetch_tasks, cache_dir, endpoint, fetch_log);
      std::cout << "fetched " << stats.fetched << ", failed " << stats.failed << "\n";
    } else if (*run) {
      if (!run_provider.empty()) run_cfg.method = "llm:" + run_provider;
      run_cfg.representation = trajrec::representation_from_name(run_repr);
      const auto stats = trajrec::cmd_run(run_cfg);
      std::cout << "completed " << stats.completed << ", skipped " << stats.skipped
                << ", fallbacks " << stats.fallbacks << " -> " << stats.recon_path << "\n";
    } else if (*eval) {
      const auto records =
          trajrec::cmd_eval(eval_tasks, eval_recon, records_out, summary_out, tau, eval_cache);
      std::cout << "scored " << records.size() << " tasks -> " << records_out << "\n";
    } else if (*report) {
      trajrec::cmd_report(report_records, report_out, report_tasks, report_recon);
      std::cout << "report written to " << report_out << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

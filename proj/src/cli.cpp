#include "screplay/cli.hpp"

#include "screplay/error.hpp"
#include "screplay/experiment_config.hpp"
#include "screplay/gradient_suites.hpp"
#include "screplay/memory.hpp"
#include "screplay/report.hpp"
#include "screplay/results_io.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

namespace screplay {

namespace {

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::mutex log_mutex;

void log_line(const std::string& msg) {
  std::lock_guard lock(log_mutex);
  std::cerr << msg << '\n';
}

RunOptions cli_run_options() {
  RunOptions options;
  options.warn = [](const std::string& msg) { log_line("warning: " + msg); };
  return options;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  os << text;
}

/// Runs one configuration and writes the run directory, checkpoint and buffer dump.
double execute_run(const ExperimentConfig& cfg, const std::filesystem::path& out) {
  auto run = run_configured(cfg, cli_run_options());
  const auto& result = run.outcome.result;
  write_run(out, cfg, result);
  const auto& learner = *run.outcome.learner;
  save_checkpoint(out / "model.clms", learner.model());
  dump_buffer(out / "buffer.clds", learner.memory(), cfg.model.input_dim, cfg.data.classes);
  return average_accuracy(result.accuracy);
}

template <typename T>
std::vector<T> parse_list(const std::string& text, T (*parse)(const std::string&, const std::string&),
                          const std::string& what) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(parse(item, what));
  }
  if (out.empty()) throw ConfigError(what + ": empty list");
  return out;
}

std::size_t count_item(const std::string& s, const std::string& what) { return parse_count(s, what); }
double real_item(const std::string& s, const std::string& what) { return parse_real(s, what); }
Method method_item(const std::string& s, const std::string&) { return parse_method(s); }

} // namespace

int cli_run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return cli_run(args);
}

int cli_run(const std::vector<std::string>& args) {
  CLI::App app{"Online class-incremental learning with supervised contrastive replay", "screplay"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "Write synthetic train/test splits as CLDS1 files");
  std::string gen_config;
  std::size_t gen_classes = 10, gen_dim = 32, gen_train = 500, gen_test = 100;
  double gen_separation = 5.0;
  std::uint64_t gen_seed = 0;
  std::string gen_out_train = "train.clds", gen_out_test = "test.clds";
  gen->add_option("--config", gen_config, "Take data parameters from a config file");
  gen->add_option("--classes", gen_classes, "Number of classes");
  gen->add_option("--dim", gen_dim, "Input dimension");
  gen->add_option("--per-class-train", gen_train, "Training examples per class");
  gen->add_option("--per-class-test", gen_test, "Test examples per class");
  gen->add_option("--separation", gen_separation, "Distance of class centers from the origin");
  gen->add_option("--seed", gen_seed, "Seed (with --config: the run seed)");
  gen->add_option("--train-out", gen_out_train, "Training split output");
  gen->add_option("--test-out", gen_out_test, "Test split output");

  // run
  auto* run = app.add_subcommand("run", "Run one configured experiment");
  std::string run_config;
  std::optional<std::uint64_t> run_seed;
  std::string run_out = "run";
  run->add_option("--config", run_config, "Config file (key = value)")->required();
  run->add_option("--seed", run_seed, "Override the config seed");
  run->add_option("--out", run_out, "Output directory");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Grid over method x mem_size x tau x mem_batch x seed");
  std::string sweep_config, sweep_methods, sweep_mem_sizes, sweep_taus, sweep_mem_batches;
  std::string sweep_seeds = "0";
  std::string sweep_out = "sweep";
  std::size_t sweep_jobs = 1;
  sweep->add_option("--config", sweep_config, "Base config file")->required();
  sweep->add_option("--methods", sweep_methods, "Comma-separated methods");
  sweep->add_option("--mem-sizes", sweep_mem_sizes, "Comma-separated memory sizes");
  sweep->add_option("--taus", sweep_taus, "Comma-separated temperatures");
  sweep->add_option("--mem-batches", sweep_mem_batches, "Comma-separated memory batch sizes");
  sweep->add_option("--seeds", sweep_seeds, "Comma-separated seeds");
  sweep->add_option("--out", sweep_out, "Output root directory");
  sweep->add_option("--jobs", sweep_jobs, "Worker threads")->check(CLI::PositiveNumber);

  // grad-check
  auto* grad = app.add_subcommand("grad-check", "Finite-difference gradient suites");
  std::uint64_t grad_seed = 0;
  grad->add_option("--seed", grad_seed, "Suite seed");

  // report
  auto* report = app.add_subcommand("report", "Aggregate run directories into mean/std tables");
  std::vector<std::string> report_paths;
  std::string report_out, report_curves;
  report->add_option("paths", report_paths, "Run directories or roots to scan")->required();
  report->add_option("--out", report_out, "Write the table here instead of stdout");
  report->add_option("--curves", report_curves, "Write per-task accuracy curves (TSV)");

  // dump-embeddings
  auto* dump = app.add_subcommand("dump-embeddings", "Encode CLDS1 files with a checkpoint");
  std::string dump_checkpoint;
  std::vector<std::string> dump_inputs;
  std::string dump_out = ".";
  dump->add_option("--checkpoint", dump_checkpoint, "CLMS1 checkpoint")->required();
  dump->add_option("--input", dump_inputs, "CLDS1 file to encode (repeatable)")->required();
  dump->add_option("--out-dir", dump_out, "Directory for <stem>_embeddings.clds files");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      std::cout << app.help();
      return kExitOk;
    }
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (*gen) {
      ExperimentConfig cfg;
      if (!gen_config.empty()) {
        cfg = load_config(gen_config);
        if (gen->count("--seed")) cfg.method.seed = gen_seed;
      } else {
        cfg.data.classes = gen_classes;
        cfg.model.input_dim = gen_dim;
        cfg.data.per_class_train = gen_train;
        cfg.data.per_class_test = gen_test;
        cfg.data.separation = gen_separation;
        cfg.method.seed = gen_seed;
      }
      cfg.data.source = DataSource::synthetic;
      const auto data = prepare_data(cfg);
      write_clds(std::filesystem::path(gen_out_train), data.train.examples, data.train.class_count);
      write_clds(std::filesystem::path(gen_out_test), data.test.examples, data.test.class_count);
      return kExitOk;
    }

    if (*run) {
      auto cfg = load_config(run_config);
      if (run_seed) cfg.method.seed = *run_seed;
      const double acc = execute_run(cfg, run_out);
      std::cout << to_string(cfg.method.method) << " seed " << cfg.method.seed
                << " average accuracy " << fixed4(acc) << "\n";
      return kExitOk;
    }

    if (*sweep) {
      const auto base = load_config(sweep_config);
      const auto methods = sweep_methods.empty() ? std::vector<Method>{base.method.method}
                                                 : parse_list<Method>(sweep_methods, method_item, "methods");
      const auto mem_sizes = sweep_mem_sizes.empty() ? std::vector<std::size_t>{base.method.mem_size}
                                                     : parse_list<std::size_t>(sweep_mem_sizes, count_item, "mem-sizes");
      const auto taus = sweep_taus.empty() ? std::vector<double>{base.method.tau}
                                           : parse_list<double>(sweep_taus, real_item, "taus");
      const auto mem_batches = sweep_mem_batches.empty() ? std::vector<std::size_t>{base.method.mem_batch}
                                                         : parse_list<std::size_t>(sweep_mem_batches, count_item, "mem-batches");
      const auto seeds = parse_list<std::size_t>(sweep_seeds, count_item, "seeds");

      std::vector<std::pair<ExperimentConfig, std::filesystem::path>> jobs;
      for (auto m : methods) {
        for (auto ms : mem_sizes) {
          for (auto t : taus) {
            for (auto mb : mem_batches) {
              for (auto s : seeds) {
                auto cfg = base;
                cfg.method.method = m;
                cfg.method.mem_size = ms;
                cfg.method.tau = t;
                cfg.method.mem_batch = mb;
                cfg.method.seed = s;
                cfg.validate();
                const auto name = to_string(m) + "_M" + std::to_string(ms) + "_tau" + format_real(t) +
                                  "_mb" + std::to_string(mb) + "_s" + std::to_string(s);
                jobs.emplace_back(cfg, std::filesystem::path(sweep_out) / name);
              }
            }
          }
        }
      }
      std::atomic<std::size_t> next{0};
      std::atomic<bool> failed{false};
      auto worker = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
          try {
            const double acc = execute_run(jobs[i].first, jobs[i].second);
            log_line(jobs[i].second.filename().string() + ": average accuracy " + fixed4(acc));
          } catch (const std::exception& e) {
            failed = true;
            log_line("error: " + jobs[i].second.filename().string() + ": " + e.what());
          }
        }
      };
      std::vector<std::thread> pool;
      for (std::size_t w = 0; w < std::min(sweep_jobs, jobs.size()); ++w) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
      return failed ? kExitRuntime : kExitOk;
    }

    if (*grad) {
      bool ok = true;
      for (const auto& r : run_gradient_suites(grad_seed)) {
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.trials << " trials, "
                  << r.entries << " entries, max relative error " << r.max_relative_error
                  << " (tolerance " << r.tolerance << ")\n";
        ok = ok && r.passed;
      }
      return ok ? kExitOk : kExitSuiteFailure;
    }

    if (*report) {
      std::vector<std::filesystem::path> roots(report_paths.begin(), report_paths.end());
      for (const auto& r : roots) {
        if (!std::filesystem::exists(r)) {
          std::cerr << "error: no such path: " << r.string() << "\n";
          return kExitUsage;
        }
      }
      const auto dirs = find_run_dirs(roots);
      if (dirs.empty()) {
        std::cerr << "error: no run directories found\n";
        return kExitUsage;
      }
      std::vector<SummaryRow> rows;
      for (const auto& d : dirs) {
        for (auto& r : read_summary(d / kSummaryFile)) rows.push_back(r);
      }
      const auto table = format_report_tsv(aggregate(rows));
      if (report_out.empty()) {
        std::cout << table;
      } else {
        write_file(report_out, table);
      }
      if (!report_curves.empty()) write_file(report_curves, format_curves_tsv(dirs));
      return kExitOk;
    }

    if (*dump) {
      for (const auto& p : dump_inputs) {
        if (!std::filesystem::exists(p)) {
          std::cerr << "error: no such file: " << p << "\n";
          return kExitUsage;
        }
      }
      if (!std::filesystem::exists(dump_checkpoint)) {
        std::cerr << "error: no such file: " << dump_checkpoint << "\n";
        return kExitUsage;
      }
      const auto model = load_checkpoint(dump_checkpoint);
      std::filesystem::create_directories(dump_out);
      for (const auto& input : dump_inputs) {
        const auto ds = read_clds(std::filesystem::path(input));
        Batch emb(model.config().embed_dim, embed_batch(model, ds.examples), ds.examples.labels());
        const auto out = std::filesystem::path(dump_out) /
                         (std::filesystem::path(input).stem().string() + "_embeddings.clds");
        write_clds(out, emb, ds.class_count);
      }
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

} // namespace screplay

#include "screplay/results_io.hpp"

#include "screplay/error.hpp"

#include <fstream>
#include <sstream>

namespace screplay {

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  os << text;
  if (!os) throw FormatError("failed writing " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(line);
  while (std::getline(is, item, sep)) out.push_back(item);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

// Data rows of a CSV file after checking its header.
std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path,
                                               const std::string& header) {
  std::istringstream is(read_text(path));
  std::string line;
  if (!std::getline(is, line) || line != header) {
    throw FormatError(path.string() + ": expected header '" + header + "'");
  }
  std::vector<std::vector<std::string>> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    rows.push_back(split(line, ','));
  }
  return rows;
}

constexpr const char* kResultsHeader = "seed,method,mem_size,task_trained,task_evaluated,accuracy";
constexpr const char* kSummaryHeader = "seed,method,mem_size,mem_batch,tau,tasks,average_accuracy";
constexpr const char* kTasksHeader = "task,classes";
constexpr const char* kFcHeader = "class,task,weight_mean";
constexpr const char* kTimingHeader = "seed,method,wall_clock_seconds";

void expect_columns(const std::vector<std::string>& row, std::size_t n, const char* file) {
  if (row.size() != n) throw FormatError(std::string(file) + ": malformed row");
}

} // namespace

std::string format_results_csv(const RunResult& result) {
  std::string out = std::string(kResultsHeader) + "\n";
  const auto& m = result.accuracy;
  for (std::size_t i = 0; i < m.tasks(); ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      if (auto v = m.get(i, j)) {
        out += std::to_string(result.seed) + "," + to_string(result.method.method) + "," +
               std::to_string(result.method.mem_size) + "," + std::to_string(i + 1) + "," +
               std::to_string(j + 1) + "," + format_real(*v) + "\n";
      }
    }
  }
  return out;
}

void write_run(const std::filesystem::path& dir, const ExperimentConfig& cfg, const RunResult& result) {
  std::filesystem::create_directories(dir);
  write_text(dir / kConfigFile, write_config(cfg));
  write_text(dir / kResultsFile, format_results_csv(result));

  std::string summary = std::string(kSummaryHeader) + "\n";
  summary += std::to_string(result.seed) + "," + to_string(result.method.method) + "," +
             std::to_string(result.method.mem_size) + "," + std::to_string(result.method.mem_batch) +
             "," + format_real(result.method.tau) + "," + std::to_string(result.accuracy.tasks()) +
             "," + format_real(average_accuracy(result.accuracy)) + "\n";
  write_text(dir / kSummaryFile, summary);

  std::string tasks = std::string(kTasksHeader) + "\n";
  for (std::size_t t = 0; t < result.task_classes.size(); ++t) {
    tasks += std::to_string(t + 1) + ",";
    for (std::size_t k = 0; k < result.task_classes[t].size(); ++k) {
      tasks += (k ? " " : "") + std::to_string(result.task_classes[t][k]);
    }
    tasks += "\n";
  }
  write_text(dir / kTasksFile, tasks);

  const auto& cm = result.confusion;
  std::string confusion = "truth";
  for (std::size_t p = 0; p < cm.classes; ++p) confusion += ",pred_" + std::to_string(p);
  confusion += "\n";
  for (std::size_t t = 0; t < cm.classes; ++t) {
    confusion += std::to_string(t);
    for (std::size_t p = 0; p < cm.classes; ++p) confusion += "," + std::to_string(cm.at(t, p));
    confusion += "\n";
  }
  write_text(dir / kConfusionFile, confusion);

  std::string fc = std::string(kFcHeader) + "\n";
  for (const auto& w : result.fc_weight_means) {
    fc += std::to_string(w.label) + "," + std::to_string(w.task + 1) + "," + format_real(w.mean) + "\n";
  }
  write_text(dir / kFcWeightsFile, fc);

  write_text(dir / kTimingFile, std::string(kTimingHeader) + "\n" + std::to_string(result.seed) + "," +
                                    to_string(result.method.method) + "," +
                                    format_real(result.wall_clock_seconds) + "\n");
}

StoredRun read_run(const std::filesystem::path& dir) {
  StoredRun run;
  run.config = parse_config(read_text(dir / kConfigFile));
  auto& r = run.result;
  r.method = run.config.method.normalized();
  r.seed = run.config.method.seed;

  for (const auto& row : read_csv(dir / kTasksFile, kTasksHeader)) {
    expect_columns(row, 2, kTasksFile);
    std::vector<int> classes;
    std::istringstream is(row[1]);
    int c;
    while (is >> c) classes.push_back(c);
    r.task_classes.push_back(std::move(classes));
  }

  r.accuracy = AccuracyMatrix(r.task_classes.size());
  for (const auto& row : read_csv(dir / kResultsFile, kResultsHeader)) {
    expect_columns(row, 6, kResultsFile);
    const auto i = parse_count(row[3], "task_trained");
    const auto j = parse_count(row[4], "task_evaluated");
    if (i == 0 || j == 0) throw FormatError("results.csv task indices are 1-based");
    r.accuracy.set(i - 1, j - 1, parse_real(row[5], "accuracy"));
  }

  {
    std::istringstream is(read_text(dir / kConfusionFile));
    std::string line;
    std::getline(is, line);
    const auto header = split(line, ',');
    if (header.empty() || header[0] != "truth") throw FormatError("confusion.csv: bad header");
    const std::size_t classes = header.size() - 1;
    r.confusion = ConfusionMatrix{classes, std::vector<std::size_t>(classes * classes, 0)};
    std::size_t t = 0;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      const auto cells = split(line, ',');
      if (cells.size() != classes + 1 || t >= classes) throw FormatError("confusion.csv: malformed row");
      for (std::size_t p = 0; p < classes; ++p) r.confusion.counts[t * classes + p] = parse_count(cells[p + 1], "confusion");
      ++t;
    }
  }

  for (const auto& row : read_csv(dir / kFcWeightsFile, kFcHeader)) {
    expect_columns(row, 3, kFcWeightsFile);
    const auto task = parse_count(row[1], "task");
    if (task == 0) throw FormatError("fc_weights.csv task indices are 1-based");
    r.fc_weight_means.push_back({std::stoi(row[0]), task - 1, parse_real(row[2], "weight_mean")});
  }

  const auto timing = read_csv(dir / kTimingFile, kTimingHeader);
  if (timing.size() != 1) throw FormatError("timing.csv: expected one row");
  expect_columns(timing[0], 3, kTimingFile);
  r.wall_clock_seconds = parse_real(timing[0][2], "wall_clock_seconds");
  return run;
}

std::vector<SummaryRow> read_summary(const std::filesystem::path& file) {
  std::vector<SummaryRow> out;
  for (const auto& row : read_csv(file, kSummaryHeader)) {
    expect_columns(row, 7, kSummaryFile);
    SummaryRow s;
    s.seed = parse_count(row[0], "seed");
    s.method = row[1];
    s.mem_size = parse_count(row[2], "mem_size");
    s.mem_batch = parse_count(row[3], "mem_batch");
    s.tau = parse_real(row[4], "tau");
    s.tasks = parse_count(row[5], "tasks");
    s.average_accuracy = parse_real(row[6], "average_accuracy");
    out.push_back(s);
  }
  return out;
}

} // namespace screplay

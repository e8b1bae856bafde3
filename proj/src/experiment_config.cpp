#include "screplay/experiment_config.hpp"

#include "screplay/error.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <system_error>

namespace screplay {

std::string format_real(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw FormatError("cannot format real");
  return std::string(buf, ptr);
}

double parse_real(const std::string& text, const std::string& what) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end) throw ConfigError(what + ": expected a real, got '" + text + "'");
  return v;
}

std::size_t parse_count(const std::string& text, const std::string& what) {
  std::size_t v = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end) {
    throw ConfigError(what + ": expected a non-negative integer, got '" + text + "'");
  }
  return v;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, ',')) out.push_back(trim(item));
  return out;
}

std::string join_counts(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

std::string data_source_name(DataSource s) { return s == DataSource::synthetic ? "synthetic" : "file"; }

struct Key {
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

// Canonical key order for write_config.
const std::vector<std::pair<std::string, Key>>& keys() {
  static const std::vector<std::pair<std::string, Key>> table = [] {
    std::vector<std::pair<std::string, Key>> t;
    auto count = [&](const std::string& name, auto member) {
      t.push_back({name, Key{[name, member](ExperimentConfig& c, const std::string& v) {
                               member(c) = parse_count(v, name);
                             },
                             [member](const ExperimentConfig& c) {
                               return std::to_string(member(const_cast<ExperimentConfig&>(c)));
                             }}});
    };
    auto real = [&](const std::string& name, auto member) {
      t.push_back({name, Key{[name, member](ExperimentConfig& c, const std::string& v) {
                               member(c) = parse_real(v, name);
                             },
                             [member](const ExperimentConfig& c) {
                               return format_real(member(const_cast<ExperimentConfig&>(c)));
                             }}});
    };
    t.push_back({"method", Key{[](ExperimentConfig& c, const std::string& v) { c.method.method = parse_method(v); },
                               [](const ExperimentConfig& c) { return to_string(c.method.method); }}});
    t.push_back({"seed", Key{[](ExperimentConfig& c, const std::string& v) { c.method.seed = parse_count(v, "seed"); },
                             [](const ExperimentConfig& c) { return std::to_string(c.method.seed); }}});
    real("lr", [](ExperimentConfig& c) -> double& { return c.method.lr; });
    count("stream_batch", [](ExperimentConfig& c) -> std::size_t& { return c.method.stream_batch; });
    count("mem_batch", [](ExperimentConfig& c) -> std::size_t& { return c.method.mem_batch; });
    count("mem_size", [](ExperimentConfig& c) -> std::size_t& { return c.method.mem_size; });
    real("tau", [](ExperimentConfig& c) -> double& { return c.method.tau; });
    count("offline_epochs", [](ExperimentConfig& c) -> std::size_t& { return c.method.offline_epochs; });
    t.push_back({"scl_reduction",
                 Key{[](ExperimentConfig& c, const std::string& v) { c.method.scl_reduction = parse_scl_reduction(v); },
                     [](const ExperimentConfig& c) { return to_string(c.method.scl_reduction); }}});

    count("input_dim", [](ExperimentConfig& c) -> std::size_t& { return c.model.input_dim; });
    t.push_back({"encoder_hidden",
                 Key{[](ExperimentConfig& c, const std::string& v) {
                       c.model.encoder_hidden.clear();
                       if (trim(v).empty()) return;
                       for (const auto& item : split_list(v)) {
                         c.model.encoder_hidden.push_back(parse_count(item, "encoder_hidden"));
                       }
                     },
                     [](const ExperimentConfig& c) { return join_counts(c.model.encoder_hidden); }}});
    count("embed_dim", [](ExperimentConfig& c) -> std::size_t& { return c.model.embed_dim; });
    t.push_back({"proj_kind", Key{[](ExperimentConfig& c, const std::string& v) { c.model.proj_kind = parse_proj_kind(v); },
                                  [](const ExperimentConfig& c) { return to_string(c.model.proj_kind); }}});
    count("proj_hidden", [](ExperimentConfig& c) -> std::size_t& { return c.model.proj_hidden; });
    count("proj_dim", [](ExperimentConfig& c) -> std::size_t& { return c.model.proj_dim; });
    count("head_classes", [](ExperimentConfig& c) -> std::size_t& { return c.model.head_classes; });

    t.push_back({"data", Key{[](ExperimentConfig& c, const std::string& v) {
                               if (v == "synthetic") c.data.source = DataSource::synthetic;
                               else if (v == "file") c.data.source = DataSource::file;
                               else throw ConfigError("data: expected synthetic or file, got '" + v + "'");
                             },
                             [](const ExperimentConfig& c) { return data_source_name(c.data.source); }}});
    count("classes", [](ExperimentConfig& c) -> std::size_t& { return c.data.classes; });
    count("per_class_train", [](ExperimentConfig& c) -> std::size_t& { return c.data.per_class_train; });
    count("per_class_test", [](ExperimentConfig& c) -> std::size_t& { return c.data.per_class_test; });
    real("separation", [](ExperimentConfig& c) -> double& { return c.data.separation; });
    t.push_back({"train_file", Key{[](ExperimentConfig& c, const std::string& v) { c.data.train_file = v; },
                                   [](const ExperimentConfig& c) { return c.data.train_file; }}});
    t.push_back({"test_file", Key{[](ExperimentConfig& c, const std::string& v) { c.data.test_file = v; },
                                  [](const ExperimentConfig& c) { return c.data.test_file; }}});
    count("n_tasks", [](ExperimentConfig& c) -> std::size_t& { return c.data.n_tasks; });
    count("classes_per_task", [](ExperimentConfig& c) -> std::size_t& { return c.data.classes_per_task; });

    t.push_back({"aug_mode", Key{[](ExperimentConfig& c, const std::string& v) { c.augment.mode = parse_augment_mode(v); },
                                 [](const ExperimentConfig& c) { return to_string(c.augment.mode); }}});
    real("aug_sigma", [](ExperimentConfig& c) -> double& { return c.augment.sigma; });
    count("aug_pad", [](ExperimentConfig& c) -> std::size_t& { return c.augment.pad; });
    t.push_back({"image_shape",
                 Key{[](ExperimentConfig& c, const std::string& v) {
                       const auto parts = split_list(v);
                       if (parts.size() != 3) throw ConfigError("image_shape: expected channels,height,width");
                       c.augment.image = {parse_count(parts[0], "image_shape"), parse_count(parts[1], "image_shape"),
                                          parse_count(parts[2], "image_shape")};
                     },
                     [](const ExperimentConfig& c) {
                       const auto& s = c.augment.image;
                       return join_counts({s.channels, s.height, s.width});
                     }}});
    return t;
  }();
  return table;
}

} // namespace

void ExperimentConfig::validate() const {
  method.validate();
  model.validate();
  if (data.source == DataSource::file && (data.train_file.empty() || data.test_file.empty())) {
    throw ConfigError("data = file needs train_file and test_file");
  }
  if (data.n_tasks * data.classes_per_task != data.classes) {
    throw ConfigError("n_tasks x classes_per_task must equal classes");
  }
}

ExperimentConfig parse_config(const std::string& text) {
  std::map<std::string, const Key*> lookup;
  for (const auto& [name, key] : keys()) lookup[name] = &key;

  ExperimentConfig cfg;
  std::set<std::string> seen;
  std::istringstream is(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto content = trim(line);
    if (content.empty() || content.front() == '#') continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    }
    const auto key = trim(content.substr(0, eq));
    const auto value = trim(content.substr(eq + 1));
    auto it = lookup.find(key);
    if (it == lookup.end()) {
      throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    if (!seen.insert(key).second) {
      throw ConfigError("line " + std::to_string(line_no) + ": key '" + key + "' given twice");
    }
    it->second->set(cfg, value);
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config " + path.string());
  std::ostringstream os;
  os << is.rdbuf();
  return parse_config(os.str());
}

std::string write_config(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& [name, key] : keys()) out += name + " = " + key.get(cfg) + "\n";
  return out;
}

std::uint64_t stream_seed(std::uint64_t master) {
  return derive_seed(master, "stream");
}

PreparedData prepare_data(const ExperimentConfig& cfg) {
  if (cfg.data.source == DataSource::synthetic) {
    auto splits = gen_synthetic(cfg.data.classes, cfg.model.input_dim, cfg.data.per_class_train,
                                cfg.data.per_class_test, cfg.data.separation,
                                derive_seed(cfg.method.seed, "data"));
    return {std::move(splits.train), std::move(splits.test)};
  }
  PreparedData data{read_clds(std::filesystem::path(cfg.data.train_file), Split::train),
                    read_clds(std::filesystem::path(cfg.data.test_file), Split::test)};
  if (data.train.class_count != cfg.data.classes || data.test.class_count != cfg.data.classes) {
    throw ConfigError("data files declare a class count different from classes = " +
                      std::to_string(cfg.data.classes));
  }
  return data;
}

ExperimentRun run_configured(const ExperimentConfig& cfg, const RunOptions& options) {
  cfg.validate();
  ExperimentRun run{{}, prepare_data(cfg)};
  auto stream = split_tasks(run.data.train, cfg.data.n_tasks, cfg.data.classes_per_task,
                            stream_seed(cfg.method.seed), cfg.method.stream_batch);
  run.outcome = run_experiment_full(cfg.method, cfg.model, cfg.augment, std::move(stream),
                                    run.data.test, options);
  return run;
}

} // namespace screplay

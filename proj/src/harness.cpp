// Copyright 2026 The dpkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dpkit/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <utility>

#include "dpkit/data.hpp"
#include "dpkit/error.hpp"
#include "json.hpp"

namespace dpkit {
namespace {

// Shortest decimal form that parses back to the same double. Keeps the CSV
// both human-readable and bit-faithful through a report round trip.
std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void parse_fail(int line, const std::string& msg) {
  throw ParseError("line " + std::to_string(line) + ": " + msg);
}

double parse_double_field(const std::string& text, int line,
                          const std::string& what) {
  const std::string t = trim(text);
  if (t.empty()) parse_fail(line, what + " is empty");
  const char* begin = t.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end != begin + t.size()) {
    parse_fail(line, "expected a number for " + what + ", got '" + t + "'");
  }
  return v;
}

long long parse_int_field(const std::string& text, int line,
                          const std::string& what) {
  const std::string t = trim(text);
  if (t.empty()) parse_fail(line, what + " is empty");
  long long v = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc{} || res.ptr != t.data() + t.size()) {
    parse_fail(line, "expected an integer for " + what + ", got '" + t + "'");
  }
  return v;
}

ConvNetWidths parse_model_field(const std::string& value, int line) {
  if (value == "convnet") return ConvNetWidths{};
  std::vector<int> w;
  std::stringstream ss(value);
  std::string part;
  while (std::getline(ss, part, ',')) {
    w.push_back(static_cast<int>(parse_int_field(part, line, "model width")));
  }
  if (w.size() != 4) {
    parse_fail(line, "model must be 'convnet' or four comma-separated "
                     "channel widths, got '" + value + "'");
  }
  return ConvNetWidths{w[0], w[1], w[2], w[3]};
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string cur;
  for (char c : text) {
    if (c == '\n') {
      lines.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) lines.push_back(cur);
  return lines;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

void append_fmt(std::string& out, const char* fmt, ...)
    __attribute__((format(printf, 2, 3)));

void append_fmt(std::string& out, const char* fmt, ...) {
  char buf[512];
  va_list args;
  va_start(args, fmt);
  std::vsnprintf(buf, sizeof(buf), fmt, args);
  va_end(args);
  out += buf;
}

}  // namespace

void ExperimentSpec::validate() const {
  if (id.empty()) throw ConfigError("experiment id must not be empty");
  if (id.find_first_of(",\n\r") != std::string::npos) {
    throw ConfigError("experiment id '" + id +
                      "' contains a comma or line break");
  }
  config.validate();
  widths.validate();
  if (dataset != "synthetic" && dataset != "cifar10") {
    throw ConfigError("dataset must be 'synthetic' or 'cifar10', got '" +
                      dataset + "'");
  }
  if (subset_size < 0) {
    throw ConfigError("subset_size must be >= 0, got " +
                      std::to_string(subset_size));
  }
  if (synth_classes < 2 || synth_classes > 10) {
    throw ConfigError("synth_classes must be in [2, 10], got " +
                      std::to_string(synth_classes));
  }
  if (synth_per_class < 1 || synth_test_per_class < 1) {
    throw ConfigError("synthetic per-class counts must be >= 1");
  }
  if (!(synth_separation > 0.0)) {
    throw ConfigError("synth_separation must be > 0");
  }
}

ExperimentSpec parse_experiment(const std::string& text,
                                const std::string& fallback_id) {
  ExperimentSpec spec;
  spec.id = fallback_id;
  std::set<std::string> seen;
  const std::vector<std::string> lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const int ln = static_cast<int>(i) + 1;
    std::string line = lines[i];
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      parse_fail(ln, "expected 'key = value', got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) parse_fail(ln, "empty key");
    if (value.empty()) parse_fail(ln, "empty value for '" + key + "'");
    if (!seen.insert(key).second) parse_fail(ln, "duplicate key '" + key + "'");

    if (key == "id") {
      spec.id = value;
    } else if (key == "optimizer") {
      try {
        spec.config.optimizer = optimizer_from_string(value);
      } catch (const Error& e) {
        parse_fail(ln, e.what());
      }
    } else if (key == "batch_size") {
      spec.config.batch_size =
          static_cast<int>(parse_int_field(value, ln, key));
    } else if (key == "epsilon") {
      spec.config.epsilon = parse_double_field(value, ln, key);
    } else if (key == "delta") {
      spec.config.delta = parse_double_field(value, ln, key);
    } else if (key == "clip_norm") {
      spec.config.clip_norm = parse_double_field(value, ln, key);
    } else if (key == "learning_rate") {
      spec.config.learning_rate = parse_double_field(value, ln, key);
    } else if (key == "epochs") {
      spec.config.epochs = static_cast<int>(parse_int_field(value, ln, key));
    } else if (key == "noise_multiplier") {
      spec.config.noise_multiplier = parse_double_field(value, ln, key);
    } else if (key == "model") {
      spec.widths = parse_model_field(value, ln);
    } else if (key == "seed") {
      spec.config.seed =
          static_cast<std::uint64_t>(parse_int_field(value, ln, key));
    } else if (key == "runs") {
      spec.config.runs = static_cast<int>(parse_int_field(value, ln, key));
    } else if (key == "dataset") {
      spec.dataset = value;
    } else if (key == "subset_size") {
      spec.subset_size = static_cast<int>(parse_int_field(value, ln, key));
    } else if (key == "dataset_seed") {
      spec.dataset_seed =
          static_cast<std::uint64_t>(parse_int_field(value, ln, key));
    } else if (key == "synth_classes") {
      spec.synth_classes = static_cast<int>(parse_int_field(value, ln, key));
    } else if (key == "synth_per_class") {
      spec.synth_per_class = static_cast<int>(parse_int_field(value, ln, key));
    } else if (key == "synth_test_per_class") {
      spec.synth_test_per_class =
          static_cast<int>(parse_int_field(value, ln, key));
    } else if (key == "synth_separation") {
      spec.synth_separation = parse_double_field(value, ln, key);
    } else {
      parse_fail(ln, "unknown key '" + key + "'");
    }
  }
  return spec;
}

std::vector<ExperimentSpec> table1_preset() {
  struct Row {
    OptimizerKind opt;
    int batch;
    double eps;
    double clip;
    double lr;
    int epochs;
    double sigma;
    int runs;
  };
  // Benchmark grid: 20 published configurations with their pinned noise
  // multipliers and run counts.
  static constexpr Row kRows[20] = {
      {OptimizerKind::kSgd, 128, 20.0, 1.0, 1e-3, 50, 0.47, 1},
      {OptimizerKind::kAdam, 128, 20.0, 1.0, 1e-3, 50, 0.47, 1},
      {OptimizerKind::kAdam, 128, 5.0, 1.0, 1e-3, 50, 0.67, 1},
      {OptimizerKind::kRmsProp, 128, 5.0, 1.0, 1e-3, 50, 0.67, 1},
      {OptimizerKind::kAdam, 128, 5.0, 0.75, 1e-3, 50, 0.67, 1},
      {OptimizerKind::kAdam, 128, 5.0, 0.5, 1e-3, 50, 0.67, 1},
      {OptimizerKind::kAdam, 128, 2.5, 0.75, 1e-3, 50, 0.88, 1},
      {OptimizerKind::kAdam, 256, 2.5, 0.75, 1e-3, 50, 1.07, 1},
      {OptimizerKind::kAdam, 128, 5.0, 1.0, 1e-3, 100, 0.76, 3},
      {OptimizerKind::kAdam, 256, 5.0, 1.0, 1e-3, 100, 0.91, 3},
      {OptimizerKind::kAdam, 256, 5.0, 1.0, 1e-2, 100, 0.91, 3},
      {OptimizerKind::kAdam, 128, 5.0, 1.0, 5e-4, 100, 0.76, 3},
      {OptimizerKind::kAdam, 256, 5.0, 1.0, 5e-4, 100, 0.91, 3},
      {OptimizerKind::kAdagrad, 256, 5.0, 1.0, 1e-4, 100, 0.91, 3},
      {OptimizerKind::kAdam, 256, 5.0, 1.5, 5e-4, 100, 0.91, 3},
      {OptimizerKind::kAdam, 256, 3.0, 2.5, 5e-4, 100, 1.21, 3},
      {OptimizerKind::kAdam, 256, 5.0, 5.0, 5e-4, 100, 0.91, 3},
      {OptimizerKind::kAdam, 256, 3.0, 5.0, 5e-4, 100, 1.21, 3},
      {OptimizerKind::kAdam, 256, 1.0, 5.0, 5e-4, 100, 2.81, 3},
      {OptimizerKind::kAdam, 128, 5.0, 1.0, 1e-3, 200, 0.91, 1},
  };

  std::vector<ExperimentSpec> specs;
  specs.reserve(20);
  for (int i = 0; i < 20; ++i) {
    const Row& r = kRows[i];
    ExperimentSpec s;
    char id[16];
    std::snprintf(id, sizeof(id), "table1-%02d", i + 1);
    s.id = id;
    s.config.optimizer = r.opt;
    s.config.batch_size = r.batch;
    s.config.epsilon = r.eps;
    s.config.delta = 1e-5;
    s.config.clip_norm = r.clip;
    s.config.learning_rate = r.lr;
    s.config.epochs = r.epochs;
    s.config.noise_multiplier = r.sigma;
    s.config.seed = 1;
    s.config.runs = r.runs;
    s.dataset = "cifar10";
    s.subset_size = 5000;
    specs.push_back(std::move(s));
  }
  return specs;
}

GridOutput run_grid(const std::vector<ExperimentSpec>& specs,
                    const std::string& data_dir) {
  {
    std::set<std::string> ids;
    for (const ExperimentSpec& s : specs) {
      if (!ids.insert(s.id).second) {
        throw ConfigError("duplicate experiment id '" + s.id + "' in grid");
      }
    }
  }

  GridOutput out;
  std::optional<std::pair<Dataset, Dataset>> cifar;  // loaded at most once
  for (const ExperimentSpec& spec : specs) {
    ExperimentResult res;
    res.id = spec.id;
    try {
      spec.validate();

      Dataset synth_train, synth_test, train_cut;
      const Dataset* train_ds = nullptr;
      const Dataset* test_ds = nullptr;
      if (spec.dataset == "cifar10") {
        if (data_dir.empty()) {
          throw DataError(
              "experiment '" + spec.id +
              "' needs cifar10 but no data directory was provided");
        }
        if (!cifar) cifar = load_cifar10(data_dir);
        train_ds = &cifar->first;
        test_ds = &cifar->second;
      } else {
        synth_train = make_synthetic(spec.synth_classes, spec.synth_per_class,
                                     spec.synth_separation, spec.dataset_seed);
        synth_test =
            make_synthetic(spec.synth_classes, spec.synth_test_per_class,
                           spec.synth_separation, spec.dataset_seed + 1);
        synth_test.split = Split::kTest;
        train_ds = &synth_train;
        test_ds = &synth_test;
      }
      if (spec.subset_size > 0 && spec.subset_size < train_ds->size()) {
        train_cut = subset(*train_ds, spec.subset_size);
        train_ds = &train_cut;
      }

      for (int run = 0; run < spec.config.runs; ++run) {
        DpTrainConfig cfg = spec.config;
        cfg.seed = spec.config.seed + static_cast<std::uint64_t>(run);
        ConvNetParams model = convnet_init(cfg.seed, spec.widths);
        std::vector<MetricsRecord> recs =
            train(cfg, model, *train_ds, *test_ds, spec.id, run);
        res.records.insert(res.records.end(), recs.begin(), recs.end());
      }
      res.ok = true;
    } catch (const std::exception& e) {
      res.ok = false;
      res.error = e.what();
      res.records.clear();  // a failed experiment contributes no CSV rows
    }
    out.results.push_back(std::move(res));
  }

  for (const ExperimentResult& r : out.results) {
    out.records.insert(out.records.end(), r.records.begin(), r.records.end());
  }
  return out;
}

std::vector<SummaryRow> summarize(
    const std::vector<ExperimentResult>& results) {
  std::vector<SummaryRow> rows;
  for (const ExperimentResult& res : results) {
    if (!res.ok || res.records.empty()) continue;
    // Final epoch of each run; records arrive in epoch order per run.
    std::map<int, MetricsRecord> final_by_run;
    for (const MetricsRecord& r : res.records) {
      auto it = final_by_run.find(r.run);
      if (it == final_by_run.end() || r.epoch > it->second.epoch) {
        final_by_run[r.run] = r;
      }
    }
    SummaryRow row;
    row.id = res.id;
    row.runs = static_cast<int>(final_by_run.size());
    for (const auto& [run, rec] : final_by_run) {
      row.train_loss += rec.train_loss;
      row.train_acc += rec.train_acc;
      row.test_loss += rec.test_loss;
      row.test_acc += rec.test_acc;
      row.epsilon_spent += rec.epsilon_spent;
      row.sigma += rec.sigma;
    }
    const double n = static_cast<double>(row.runs);
    row.train_loss /= n;
    row.train_acc /= n;
    row.test_loss /= n;
    row.test_acc /= n;
    row.epsilon_spent /= n;
    row.sigma /= n;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string summary_to_string(const std::vector<SummaryRow>& rows) {
  std::string out =
      "experiment        runs  train_loss  train_acc  test_loss  test_acc"
      "  eps_spent   sigma\n";
  for (const SummaryRow& r : rows) {
    append_fmt(out, "%-16s %5d %11.4f %10.4f %10.4f %9.4f %10.4f %7.3f\n",
               r.id.c_str(), r.runs, r.train_loss, r.train_acc, r.test_loss,
               r.test_acc, r.epsilon_spent, r.sigma);
  }
  return out;
}

std::string csv_to_string(const std::vector<MetricsRecord>& records) {
  std::string out = kCsvHeader;
  out.push_back('\n');
  for (const MetricsRecord& r : records) {
    out += r.experiment_id;
    out.push_back(',');
    out += std::to_string(r.run);
    out.push_back(',');
    out += std::to_string(r.epoch);
    out.push_back(',');
    out += format_double(r.train_loss);
    out.push_back(',');
    out += format_double(r.train_acc);
    out.push_back(',');
    out += format_double(r.test_loss);
    out.push_back(',');
    out += format_double(r.test_acc);
    out.push_back(',');
    out += format_double(r.epsilon_spent);
    out.push_back(',');
    out += format_double(r.sigma);
    out.push_back('\n');
  }
  return out;
}

std::vector<MetricsRecord> parse_csv(const std::string& text) {
  const std::vector<std::string> lines = split_lines(text);
  if (lines.empty() || trim(lines[0]).empty()) {
    throw ParseError("line 1: missing CSV header");
  }
  if (trim(lines[0]) != kCsvHeader) {
    parse_fail(1, "expected header '" + std::string(kCsvHeader) + "', got '" +
                      trim(lines[0]) + "'");
  }
  std::vector<MetricsRecord> records;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const int ln = static_cast<int>(i) + 1;
    const std::string line = trim(lines[i]);
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
      if (c == ',') {
        fields.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    fields.push_back(cur);
    if (fields.size() != 9) {
      parse_fail(ln, "expected 9 fields, got " +
                         std::to_string(fields.size()));
    }
    MetricsRecord r;
    r.experiment_id = trim(fields[0]);
    if (r.experiment_id.empty()) parse_fail(ln, "empty experiment_id");
    r.run = static_cast<int>(parse_int_field(fields[1], ln, "run"));
    r.epoch = static_cast<int>(parse_int_field(fields[2], ln, "epoch"));
    r.train_loss = parse_double_field(fields[3], ln, "train_loss");
    r.train_acc = parse_double_field(fields[4], ln, "train_acc");
    r.test_loss = parse_double_field(fields[5], ln, "test_loss");
    r.test_acc = parse_double_field(fields[6], ln, "test_acc");
    r.epsilon_spent = parse_double_field(fields[7], ln, "epsilon_spent");
    r.sigma = parse_double_field(fields[8], ln, "sigma");
    records.push_back(std::move(r));
  }
  return records;
}

namespace {

// Chart layout shared by every metric panel.
constexpr int kSvgWidth = 720;
constexpr int kChartHeight = 300;
constexpr int kChartGap = 16;
constexpr int kMarginLeft = 64;
constexpr int kMarginRight = 170;
constexpr int kMarginTop = 34;
constexpr int kMarginBottom = 42;

const char* const kPalette[10] = {
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

struct Series {
  std::string id;
  std::vector<std::pair<int, double>> points;  // (epoch, mean over runs)
};

double metric_field(const MetricsRecord& r, int metric) {
  switch (metric) {
    case 0: return r.train_loss;
    case 1: return r.train_acc;
    case 2: return r.test_loss;
    case 3: return r.test_acc;
    default: return r.epsilon_spent;
  }
}

}  // namespace

std::string render_report(const std::vector<MetricsRecord>& records) {
  if (records.empty()) {
    throw ParseError("report needs at least one metric row");
  }

  std::vector<std::string> ids;  // first-appearance order
  for (const MetricsRecord& r : records) {
    if (std::find(ids.begin(), ids.end(), r.experiment_id) == ids.end()) {
      ids.push_back(r.experiment_id);
    }
  }

  const char* const kMetricNames[5] = {"train_loss", "train_acc", "test_loss",
                                       "test_acc", "epsilon_spent"};
  const int charts = 5;
  const int height = 10 + charts * (kChartHeight + kChartGap);

  std::string svg;
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  append_fmt(svg,
             "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" "
             "height=\"%d\" viewBox=\"0 0 %d %d\">\n",
             kSvgWidth, height, kSvgWidth, height);
  svg += "<style>text{font-family:monospace;font-size:11px;fill:#222;}"
         ".axis{stroke:#333;stroke-width:1;}"
         ".series{fill:none;stroke-width:1.5;}</style>\n";
  append_fmt(svg, "<rect width=\"%d\" height=\"%d\" fill=\"#ffffff\"/>\n",
             kSvgWidth, height);

  for (int m = 0; m < charts; ++m) {
    const int y0 = 10 + m * (kChartHeight + kChartGap);

    // Per-experiment, per-epoch means; non-finite values are unplottable
    // (epsilon_spent is +inf for non-private runs) and drop out.
    std::vector<Series> series;
    for (const std::string& id : ids) {
      std::map<int, std::pair<double, int>> acc;  // epoch -> (sum, count)
      for (const MetricsRecord& r : records) {
        if (r.experiment_id != id) continue;
        const double v = metric_field(r, m);
        if (!std::isfinite(v)) continue;
        auto& slot = acc[r.epoch];
        slot.first += v;
        slot.second += 1;
      }
      Series s;
      s.id = id;
      for (const auto& [epoch, sum_count] : acc) {
        s.points.emplace_back(epoch,
                              sum_count.first / sum_count.second);
      }
      series.push_back(std::move(s));
    }

    double emin = 0.0, emax = 1.0, vmin = 0.0, vmax = 1.0;
    bool any = false;
    for (const Series& s : series) {
      for (const auto& [e, v] : s.points) {
        if (!any) {
          emin = emax = e;
          vmin = vmax = v;
          any = true;
        } else {
          emin = std::min(emin, static_cast<double>(e));
          emax = std::max(emax, static_cast<double>(e));
          vmin = std::min(vmin, v);
          vmax = std::max(vmax, v);
        }
      }
    }
    if (emax == emin) {
      emin -= 1.0;
      emax += 1.0;
    }
    if (vmax == vmin) {
      vmin -= 1.0;
      vmax += 1.0;
    }

    const double px0 = kMarginLeft;
    const double px1 = kSvgWidth - kMarginRight;
    const double py0 = y0 + kMarginTop;
    const double py1 = y0 + kChartHeight - kMarginBottom;
    auto sx = [&](double e) {
      return px0 + (e - emin) / (emax - emin) * (px1 - px0);
    };
    auto sy = [&](double v) {
      return py1 - (v - vmin) / (vmax - vmin) * (py1 - py0);
    };

    append_fmt(svg, "<g>\n");
    // Axis labels come from the CSV column names.
    append_fmt(svg, "<text x=\"8\" y=\"%d\" class=\"title\">%s</text>\n",
               y0 + 18, kMetricNames[m]);
    append_fmt(svg,
               "<text x=\"%.2f\" y=\"%d\" text-anchor=\"middle\">epoch"
               "</text>\n",
               (px0 + px1) / 2.0, y0 + kChartHeight - 10);
    append_fmt(svg,
               "<line class=\"axis\" x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" "
               "y2=\"%.2f\"/>\n",
               px0, py1, px1, py1);
    append_fmt(svg,
               "<line class=\"axis\" x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" "
               "y2=\"%.2f\"/>\n",
               px0, py0, px0, py1);
    append_fmt(svg,
               "<text x=\"%.2f\" y=\"%.2f\" text-anchor=\"end\">%.6g</text>\n",
               px0 - 6.0, py1 + 4.0, vmin);
    append_fmt(svg,
               "<text x=\"%.2f\" y=\"%.2f\" text-anchor=\"end\">%.6g</text>\n",
               px0 - 6.0, py0 + 4.0, vmax);
    append_fmt(svg,
               "<text x=\"%.2f\" y=\"%.2f\" text-anchor=\"middle\">%.6g"
               "</text>\n",
               px0, py1 + 16.0, emin);
    append_fmt(svg,
               "<text x=\"%.2f\" y=\"%.2f\" text-anchor=\"middle\">%.6g"
               "</text>\n",
               px1, py1 + 16.0, emax);

    for (std::size_t s = 0; s < series.size(); ++s) {
      const char* color = kPalette[s % 10];
      const Series& ser = series[s];
      if (!ser.points.empty()) {
        std::string pts;
        for (const auto& [e, v] : ser.points) {
          char buf[64];
          std::snprintf(buf, sizeof(buf), "%s%.2f,%.2f",
                        pts.empty() ? "" : " ", sx(e), sy(v));
          pts += buf;
        }
        append_fmt(svg,
                   "<polyline class=\"series\" stroke=\"%s\" "
                   "points=\"%s\"/>\n",
                   color, pts.c_str());
        for (const auto& [e, v] : ser.points) {
          append_fmt(svg,
                     "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"2\" "
                     "fill=\"%s\"/>\n",
                     sx(e), sy(v), color);
        }
      }
      const double ly = py0 + static_cast<double>(s) * 16.0;
      append_fmt(svg,
                 "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" "
                 "stroke=\"%s\" stroke-width=\"2\"/>\n",
                 px1 + 10.0, ly, px1 + 30.0, ly, color);
      append_fmt(svg, "<text x=\"%.2f\" y=\"%.2f\">%s</text>\n", px1 + 36.0,
                 ly + 4.0, escape_xml(ser.id).c_str());
    }
    append_fmt(svg, "</g>\n");
  }

  svg += "</svg>\n";
  return svg;
}

std::string grid_metadata_json(const std::vector<ExperimentSpec>& specs,
                               const std::vector<ExperimentResult>& results,
                               const std::string& started_at,
                               const std::string& finished_at) {
  nlohmann::json meta;
  meta["tool"] = "dpkit grid";
  meta["started_at"] = started_at;
  meta["finished_at"] = finished_at;
  meta["experiments"] = nlohmann::json::array();
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const ExperimentSpec& s = specs[i];
    nlohmann::json e;
    e["id"] = s.id;
    e["optimizer"] = to_string(s.config.optimizer);
    e["batch_size"] = s.config.batch_size;
    e["epsilon"] = s.config.epsilon;
    e["delta"] = s.config.delta;
    e["clip_norm"] = s.config.clip_norm;
    e["learning_rate"] = s.config.learning_rate;
    e["epochs"] = s.config.epochs;
    if (s.config.noise_multiplier.has_value()) {
      e["noise_multiplier"] = *s.config.noise_multiplier;
    } else {
      e["noise_multiplier"] = nullptr;
    }
    e["seed"] = s.config.seed;
    e["runs"] = s.config.runs;
    e["model"] = {s.widths.c1, s.widths.c2, s.widths.c3, s.widths.c4};
    e["dataset"] = s.dataset;
    e["subset_size"] = s.subset_size;
    if (i < results.size()) {
      e["ok"] = results[i].ok;
      if (!results[i].ok) e["error"] = results[i].error;
      e["records"] = results[i].records.size();
    }
    meta["experiments"].push_back(std::move(e));
  }
  return meta.dump(2) + "\n";
}

std::string iso8601_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  if (f.bad()) throw DataError("read failure: " + path);
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open file for writing: " + path);
  f.write(content.data(), static_cast<std::streamsize>(content.size()));
  f.flush();
  if (!f) throw DataError("short write: " + path);
}

}  // namespace dpkit

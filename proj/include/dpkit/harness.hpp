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

#ifndef DPKIT_HARNESS_HPP_
#define DPKIT_HARNESS_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "dpkit/convnet.hpp"
#include "dpkit/dp_optim.hpp"
#include "dpkit/metrics.hpp"

namespace dpkit {

// One experiment: a training configuration plus model and dataset selectors.
// The dataset is fixed across the experiment's runs; only the training seed
// varies (seed + run_index), so run-to-run spread isolates the sampling and
// noise randomness.
struct ExperimentSpec {
  std::string id = "exp";
  DpTrainConfig config;
  ConvNetWidths widths;

  std::string dataset = "synthetic";  // "synthetic" or "cifar10"
  int subset_size = 0;                // > 0: first-n records of the train split
  std::uint64_t dataset_seed = 1;     // synthetic generation, shared by runs

  int synth_classes = 10;
  int synth_per_class = 50;
  int synth_test_per_class = 20;
  double synth_separation = 3.0;

  // Run count lives on config.runs; run r trains with seed config.seed + r.

  void validate() const;  // ConfigError on any violation
};

// Outcome of one experiment inside a grid. A failure is recorded here and
// the grid moves on; partial records from a failed experiment are dropped so
// the CSV only carries completed runs.
struct ExperimentResult {
  std::string id;
  bool ok = false;
  std::string error;
  std::vector<MetricsRecord> records;
};

// Mean over runs of the final-epoch metrics of one experiment.
struct SummaryRow {
  std::string id;
  int runs = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double test_loss = 0.0;
  double test_acc = 0.0;
  double epsilon_spent = 0.0;
  double sigma = 0.0;
};

// Parses a flat "key = value" experiment config. Lines are independent;
// '#' starts a comment; blank lines are skipped. Unknown or duplicate keys
// and malformed values raise ParseError with the 1-based line number.
// Recognized keys: id, optimizer, batch_size, epsilon, delta, clip_norm,
// learning_rate, epochs, noise_multiplier, model, seed, runs, dataset,
// subset_size, dataset_seed, synth_classes, synth_per_class,
// synth_test_per_class, synth_separation.
ExperimentSpec parse_experiment(const std::string& text,
                                const std::string& fallback_id = "exp");

// The 20-row benchmark preset: optimizer, batch size, epsilon, clipping
// threshold, learning rate, epochs, pinned noise multiplier, and run count
// per row. Dataset selector is the 5000-record cifar10 subset.
std::vector<ExperimentSpec> table1_preset();

struct GridOutput {
  std::vector<ExperimentResult> results;
  std::vector<MetricsRecord> records;  // all completed runs, grid order
};

// Runs every spec sequentially (run r uses seed + r). Ids must be unique
// within the grid (ConfigError). Per-experiment failures are captured in the
// result and the grid continues. data_dir locates cifar10 batches for specs
// that ask for them; it is loaded at most once per grid.
GridOutput run_grid(const std::vector<ExperimentSpec>& specs,
                    const std::string& data_dir = "");

std::vector<SummaryRow> summarize(const std::vector<ExperimentResult>& results);
std::string summary_to_string(const std::vector<SummaryRow>& rows);

// CSV schema shared by every experiment output. The header is a stable
// contract; doubles are written with shortest round-trip formatting.
inline constexpr char kCsvHeader[] =
    "experiment_id,run,epoch,train_loss,train_acc,test_loss,test_acc,"
    "epsilon_spent,sigma";

std::string csv_to_string(const std::vector<MetricsRecord>& records);
std::vector<MetricsRecord> parse_csv(const std::string& text);  // ParseError

// Static SVG report: one chart per metric column (metric vs epoch), one
// series per experiment id averaged over runs. Output is a pure function of
// the records. ParseError when there is nothing to plot.
std::string render_report(const std::vector<MetricsRecord>& records);

// Grid metadata (timestamps, per-experiment status) as a JSON string. Kept
// out of the CSV so metric bytes stay reproducible across identical runs.
std::string grid_metadata_json(const std::vector<ExperimentSpec>& specs,
                               const std::vector<ExperimentResult>& results,
                               const std::string& started_at,
                               const std::string& finished_at);

std::string iso8601_now();

std::string read_text_file(const std::string& path);           // DataError
void write_text_file(const std::string& path, const std::string& content);

}  // namespace dpkit

#endif  // DPKIT_HARNESS_HPP_

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

// dpkit command line: noise calibration, DP training, experiment grids,
// Laplace perturbation, classical baselines, and SVG reports.
//
// Exit codes: 0 ok, 1 usage error, 2 runtime failure.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dpkit/accountant.hpp"
#include "dpkit/classical.hpp"
#include "dpkit/data.hpp"
#include "dpkit/dp_optim.hpp"
#include "dpkit/error.hpp"
#include "dpkit/harness.hpp"
#include "dpkit/mechanisms.hpp"
#include "dpkit/rng.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

std::string default_data_dir() {
  const char* env = std::getenv("DPKIT_DATA_DIR");
  return env != nullptr ? env : "";
}

// Shared dataset selector flags for train/grid/classical/perturb.
struct DatasetFlags {
  std::string dataset = "synthetic";
  std::string data_dir = default_data_dir();
  int subset_size = 0;
  std::uint64_t dataset_seed = 1;
  int synth_classes = 10;
  int synth_per_class = 50;
  int synth_test_per_class = 20;
  double synth_separation = 3.0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--dataset", dataset,
                    "Dataset selector: synthetic or cifar10")
        ->check(CLI::IsMember({"synthetic", "cifar10"}));
    cmd->add_option("--data", data_dir,
                    "CIFAR-10 directory (default: $DPKIT_DATA_DIR)");
    cmd->add_option("--subset", subset_size,
                    "Use only the first N train records (0 = all)");
    cmd->add_option("--dataset-seed", dataset_seed,
                    "Seed for synthetic data generation");
    cmd->add_option("--classes", synth_classes, "Synthetic class count");
    cmd->add_option("--per-class", synth_per_class,
                    "Synthetic train examples per class");
    cmd->add_option("--test-per-class", synth_test_per_class,
                    "Synthetic test examples per class");
    cmd->add_option("--separation", synth_separation,
                    "Synthetic class mean separation");
  }

  // Applies only the flags the user actually passed, so config-file values
  // survive unless overridden. Struct defaults equal ExperimentSpec defaults.
  void apply_present(const CLI::App* cmd, dpkit::ExperimentSpec& spec) const {
    if (cmd->count("--dataset")) spec.dataset = dataset;
    if (cmd->count("--subset")) spec.subset_size = subset_size;
    if (cmd->count("--dataset-seed")) spec.dataset_seed = dataset_seed;
    if (cmd->count("--classes")) spec.synth_classes = synth_classes;
    if (cmd->count("--per-class")) spec.synth_per_class = synth_per_class;
    if (cmd->count("--test-per-class")) {
      spec.synth_test_per_class = synth_test_per_class;
    }
    if (cmd->count("--separation")) spec.synth_separation = synth_separation;
  }

  // Materializes train/test splits the same way the grid runner does.
  std::pair<dpkit::Dataset, dpkit::Dataset> load() const {
    if (dataset == "cifar10") {
      if (data_dir.empty()) {
        throw dpkit::DataError(
            "cifar10 requested but neither --data nor DPKIT_DATA_DIR is set");
      }
      auto [train, test] = dpkit::load_cifar10(data_dir);
      if (subset_size > 0 && subset_size < train.size()) {
        train = dpkit::subset(train, subset_size);
      }
      return {std::move(train), std::move(test)};
    }
    dpkit::Dataset train = dpkit::make_synthetic(
        synth_classes, synth_per_class, synth_separation, dataset_seed);
    dpkit::Dataset test = dpkit::make_synthetic(
        synth_classes, synth_test_per_class, synth_separation,
        dataset_seed + 1);
    test.split = dpkit::Split::kTest;
    if (subset_size > 0 && subset_size < train.size()) {
      train = dpkit::subset(train, subset_size);
    }
    return {std::move(train), std::move(test)};
  }
};

void print_grid_outcome(const dpkit::GridOutput& out) {
  const std::vector<dpkit::SummaryRow> rows = dpkit::summarize(out.results);
  std::fputs(dpkit::summary_to_string(rows).c_str(), stdout);
  for (const dpkit::ExperimentResult& res : out.results) {
    if (!res.ok) {
      std::fprintf(stderr, "experiment '%s' failed: %s\n", res.id.c_str(),
                   res.error.c_str());
    }
  }
}

int count_failures(const dpkit::GridOutput& out) {
  int failed = 0;
  for (const dpkit::ExperimentResult& res : out.results) {
    if (!res.ok) ++failed;
  }
  return failed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dpkit: differentially private training toolkit"};
  app.require_subcommand(1);

  // ---- calibrate ----------------------------------------------------------
  struct {
    double epsilon = 0.0;
    double delta = 1e-5;
    int batch = 0;
    int epochs = 0;
    std::int64_t n = dpkit::kPresetDatasetSize;
  } cal;
  CLI::App* calibrate =
      app.add_subcommand("calibrate", "Solve for the noise multiplier");
  calibrate->add_option("--epsilon", cal.epsilon, "Target epsilon")
      ->required();
  calibrate->add_option("--delta", cal.delta, "Target delta");
  calibrate->add_option("--batch", cal.batch, "Batch size")->required();
  calibrate->add_option("--epochs", cal.epochs, "Epochs")->required();
  calibrate->add_option("--n", cal.n, "Dataset size");

  // ---- train --------------------------------------------------------------
  struct {
    std::string config_path;
    std::string id = "train";
    std::string csv_path;
    DatasetFlags data;
    // Optional overrides; only applied when the flag is present.
    std::optional<std::string> optimizer;
    std::optional<int> batch;
    std::optional<double> epsilon;
    std::optional<double> delta;
    std::optional<double> clip;
    std::optional<double> lr;
    std::optional<int> epochs;
    std::optional<double> sigma;
    std::optional<std::uint64_t> seed;
    std::optional<int> runs;
    std::optional<std::string> model;
  } tr;
  CLI::App* train_cmd =
      app.add_subcommand("train", "Run one DP-SGD training experiment");
  train_cmd->add_option("--config", tr.config_path,
                        "key = value experiment file");
  train_cmd->add_option("--id", tr.id, "Experiment id for CSV rows");
  train_cmd->add_option("--csv", tr.csv_path, "Write per-epoch metrics here");
  train_cmd->add_option("--optimizer", tr.optimizer,
                        "sgd | adam | rmsprop | adagrad");
  train_cmd->add_option("--batch", tr.batch, "Expected batch size");
  train_cmd->add_option("--epsilon", tr.epsilon, "Privacy budget");
  train_cmd->add_option("--delta", tr.delta, "Privacy delta");
  train_cmd->add_option("--clip", tr.clip, "Per-sample clipping threshold");
  train_cmd->add_option("--lr", tr.lr, "Learning rate");
  train_cmd->add_option("--epochs", tr.epochs, "Training epochs");
  train_cmd->add_option("--sigma", tr.sigma,
                        "Noise multiplier (0 disables noise; omit to "
                        "calibrate from epsilon)");
  train_cmd->add_option("--seed", tr.seed, "Base seed; run r uses seed + r");
  train_cmd->add_option("--runs", tr.runs, "Repetitions");
  train_cmd->add_option("--model", tr.model,
                        "convnet or four channel widths c1,c2,c3,c4");
  tr.data.attach(train_cmd);

  // ---- grid ---------------------------------------------------------------
  struct {
    std::string preset;
    std::vector<std::string> config_paths;
    std::string csv_path = "grid.csv";
    std::string meta_path;
    DatasetFlags data;
    bool desk = false;
  } gr;
  CLI::App* grid_cmd =
      app.add_subcommand("grid", "Run a grid of experiments");
  grid_cmd->add_option("--preset", gr.preset, "Built-in grid: table1")
      ->check(CLI::IsMember({"table1"}));
  grid_cmd->add_option("--config", gr.config_paths,
                       "Experiment files (one spec each)");
  grid_cmd->add_option("--csv", gr.csv_path, "Metrics CSV output path");
  grid_cmd->add_option("--meta", gr.meta_path,
                       "Metadata JSON path (default: <csv>.meta.json)");
  grid_cmd->add_flag("--desk", gr.desk,
                     "Rewrite preset specs onto the synthetic desk dataset");
  gr.data.attach(grid_cmd);

  // ---- perturb ------------------------------------------------------------
  struct {
    std::string in_path;
    std::string out_path;
    double epsilon = 0.0;
    double sensitivity = 1.0;
    std::uint64_t seed = 1;
    std::string split = "train";
    DatasetFlags data;
  } pe;
  CLI::App* perturb_cmd = app.add_subcommand(
      "perturb", "Apply the Laplace mechanism to a dataset");
  perturb_cmd->add_option("--in", pe.in_path,
                          "Input dataset container (omit to build one from "
                          "the dataset flags)");
  perturb_cmd->add_option("--out", pe.out_path, "Output container path")
      ->required();
  perturb_cmd->add_option("--epsilon", pe.epsilon, "Per-element budget")
      ->required();
  perturb_cmd->add_option("--sensitivity", pe.sensitivity,
                          "Per-element sensitivity");
  perturb_cmd->add_option("--seed", pe.seed, "Noise seed");
  perturb_cmd
      ->add_option("--split", pe.split, "Which split to build: train or test")
      ->check(CLI::IsMember({"train", "test"}));
  pe.data.attach(perturb_cmd);

  // ---- classical ----------------------------------------------------------
  struct {
    std::string model = "knn";
    std::string id;
    std::string csv_path;
    std::string train_in;
    std::string test_in;
    int k = 10;
    std::string kernel = "rbf";
    double c_reg = 1.0;
    double gamma = 0.0;
    int degree = 3;
    double coef0 = 0.0;
    int max_iter = 10000;
    DatasetFlags data;
  } cl;
  CLI::App* classical_cmd = app.add_subcommand(
      "classical", "Evaluate KNN / NBC / SVM baselines");
  classical_cmd->add_option("--model", cl.model, "knn | nbc | svm")
      ->check(CLI::IsMember({"knn", "nbc", "svm"}));
  classical_cmd->add_option("--id", cl.id,
                            "Experiment id (default: the model name)");
  classical_cmd->add_option("--csv", cl.csv_path, "Append-style metrics CSV");
  classical_cmd->add_option("--train-in", cl.train_in,
                            "Train split container (e.g. perturb output)");
  classical_cmd->add_option("--test-in", cl.test_in, "Test split container");
  classical_cmd->add_option("--k", cl.k, "KNN neighbor count");
  classical_cmd->add_option("--kernel", cl.kernel,
                            "linear | poly | rbf | sigmoid")
      ->check(CLI::IsMember({"linear", "poly", "rbf", "sigmoid"}));
  classical_cmd->add_option("--c-reg", cl.c_reg, "SVM regularization");
  classical_cmd->add_option("--gamma", cl.gamma,
                            "Kernel gamma (0 = 1/num_features)");
  classical_cmd->add_option("--degree", cl.degree, "Poly kernel degree");
  classical_cmd->add_option("--coef0", cl.coef0,
                            "Poly/sigmoid kernel offset");
  classical_cmd->add_option("--max-iter", cl.max_iter, "SMO iteration cap");
  cl.data.attach(classical_cmd);

  // ---- report -------------------------------------------------------------
  struct {
    std::string csv_path;
    std::string out_path;
  } re;
  CLI::App* report_cmd =
      app.add_subcommand("report", "Render a metrics CSV as SVG charts");
  report_cmd->add_option("--csv", re.csv_path, "Input metrics CSV")
      ->required();
  report_cmd->add_option("--out", re.out_path,
                         "Output SVG path (default: <csv>.svg)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*calibrate) {
      const dpkit::SubsampleSchedule schedule =
          dpkit::schedule_for(cal.batch, cal.epochs, cal.n);
      const dpkit::PrivacySpec target{cal.epsilon, cal.delta};
      const double sigma = dpkit::calibrate_noise(target, schedule);
      const double achieved =
          dpkit::epsilon_of(sigma, schedule, cal.delta);
      std::printf("sigma = %.3f\n", sigma);
      std::printf("achieved epsilon = %.4f (target %g, delta %g)\n", achieved,
                  cal.epsilon, cal.delta);
      return kExitOk;
    }

    if (*train_cmd) {
      dpkit::ExperimentSpec spec;
      if (!tr.config_path.empty()) {
        spec = dpkit::parse_experiment(
            dpkit::read_text_file(tr.config_path), tr.id);
      }
      if (train_cmd->count("--id") || tr.config_path.empty()) {
        spec.id = tr.id;
      }
      tr.data.apply_present(train_cmd, spec);
      if (tr.optimizer) {
        spec.config.optimizer = dpkit::optimizer_from_string(*tr.optimizer);
      }
      if (tr.batch) spec.config.batch_size = *tr.batch;
      if (tr.epsilon) spec.config.epsilon = *tr.epsilon;
      if (tr.delta) spec.config.delta = *tr.delta;
      if (tr.clip) spec.config.clip_norm = *tr.clip;
      if (tr.lr) spec.config.learning_rate = *tr.lr;
      if (tr.epochs) spec.config.epochs = *tr.epochs;
      if (tr.sigma) spec.config.noise_multiplier = *tr.sigma;
      if (tr.seed) spec.config.seed = *tr.seed;
      if (tr.runs) spec.config.runs = *tr.runs;
      if (tr.model) {
        spec.widths = dpkit::parse_experiment("model = " + *tr.model).widths;
      }

      const dpkit::GridOutput out = dpkit::run_grid({spec}, tr.data.data_dir);
      print_grid_outcome(out);
      if (!tr.csv_path.empty()) {
        dpkit::write_text_file(tr.csv_path,
                               dpkit::csv_to_string(out.records));
        std::printf("wrote %s\n", tr.csv_path.c_str());
      }
      return count_failures(out) == 0 ? kExitOk : kExitRuntime;
    }

    if (*grid_cmd) {
      std::vector<dpkit::ExperimentSpec> specs;
      if (gr.preset == "table1") specs = dpkit::table1_preset();
      for (const std::string& path : gr.config_paths) {
        specs.push_back(dpkit::parse_experiment(dpkit::read_text_file(path),
                                                path));
      }
      if (specs.empty()) {
        std::fprintf(stderr, "grid: nothing to run (use --preset or "
                             "--config)\n");
        return kExitUsage;
      }
      if (gr.desk) {
        // Keep each spec's optimizer/epsilon/sigma but retarget the desk
        // dataset and model so the grid finishes in minutes.
        for (dpkit::ExperimentSpec& s : specs) {
          s.dataset = "synthetic";
          s.subset_size = 0;
          gr.data.apply_present(grid_cmd, s);
          s.widths = dpkit::ConvNetWidths{4, 4, 8, 8};
          s.config.epochs = std::min(s.config.epochs, 5);
          s.config.batch_size = std::min(s.config.batch_size, 32);
        }
      }

      const std::string started = dpkit::iso8601_now();
      const dpkit::GridOutput out = dpkit::run_grid(specs, gr.data.data_dir);
      const std::string finished = dpkit::iso8601_now();

      dpkit::write_text_file(gr.csv_path, dpkit::csv_to_string(out.records));
      const std::string meta_path =
          gr.meta_path.empty() ? gr.csv_path + ".meta.json" : gr.meta_path;
      dpkit::write_text_file(
          meta_path,
          dpkit::grid_metadata_json(specs, out.results, started, finished));
      print_grid_outcome(out);
      std::printf("wrote %s and %s\n", gr.csv_path.c_str(),
                  meta_path.c_str());
      const int failed = count_failures(out);
      if (failed > 0) {
        std::fprintf(stderr, "%d of %zu experiments failed\n", failed,
                     out.results.size());
        return kExitRuntime;
      }
      return kExitOk;
    }

    if (*perturb_cmd) {
      dpkit::Dataset ds;
      if (!pe.in_path.empty()) {
        ds = dpkit::load_container(pe.in_path);
      } else {
        auto [train, test] = pe.data.load();
        ds = pe.split == "train" ? std::move(train) : std::move(test);
      }
      const dpkit::LaplaceParams params{pe.epsilon, pe.sensitivity};
      dpkit::Rng rng(pe.seed);
      ds.images = dpkit::laplace_perturb(ds.images, params, rng);
      ds.provenance = dpkit::Provenance::kPerturbed;
      dpkit::save_container(ds, pe.out_path);
      std::printf("perturbed %d records (epsilon %g, scale %g) -> %s\n",
                  ds.size(), pe.epsilon, params.scale(), pe.out_path.c_str());
      return kExitOk;
    }

    if (*classical_cmd) {
      dpkit::Dataset train_ds, test_ds;
      if (!cl.train_in.empty() || !cl.test_in.empty()) {
        if (cl.train_in.empty() || cl.test_in.empty()) {
          std::fprintf(stderr,
                       "classical: --train-in and --test-in go together\n");
          return kExitUsage;
        }
        train_ds = dpkit::load_container(cl.train_in);
        test_ds = dpkit::load_container(cl.test_in);
      } else {
        auto [train, test] = cl.data.load();
        train_ds = std::move(train);
        test_ds = std::move(test);
      }
      const dpkit::LabeledVectors train_v = dpkit::to_vectors(train_ds);
      const dpkit::LabeledVectors test_v = dpkit::to_vectors(test_ds);

      dpkit::ClassicalMetrics train_m, test_m;
      std::string detail;
      if (cl.model == "knn") {
        train_m = dpkit::evaluate_knn(train_v, cl.k, train_v);
        test_m = dpkit::evaluate_knn(train_v, cl.k, test_v);
        detail = "k = " + std::to_string(cl.k);
      } else if (cl.model == "nbc") {
        const dpkit::NbcModel model = dpkit::nbc_fit(train_v);
        train_m = dpkit::evaluate_nbc(model, train_v);
        test_m = dpkit::evaluate_nbc(model, test_v);
        detail = "gaussian";
      } else {
        dpkit::KernelSpec kernel;
        kernel.kind = dpkit::kernel_from_string(cl.kernel);
        kernel.degree = cl.degree;
        kernel.gamma = cl.gamma;
        kernel.coef0 = cl.coef0;
        const dpkit::SvmModel model =
            dpkit::svm_fit(train_v, kernel, cl.c_reg, cl.max_iter);
        train_m = dpkit::evaluate_svm(model, train_v);
        test_m = dpkit::evaluate_svm(model, test_v);
        detail = cl.kernel + " kernel" +
                 (model.converged ? "" : " (not converged)");
      }

      std::printf("%s (%s): train acc %.4f loss %.4f | test acc %.4f "
                  "loss %.4f\n",
                  cl.model.c_str(), detail.c_str(), train_m.accuracy,
                  train_m.loss, test_m.accuracy, test_m.loss);
      if (!cl.csv_path.empty()) {
        dpkit::MetricsRecord rec;
        rec.experiment_id = cl.id.empty() ? cl.model : cl.id;
        rec.run = 0;
        rec.epoch = 1;
        rec.train_loss = train_m.loss;
        rec.train_acc = train_m.accuracy;
        rec.test_loss = test_m.loss;
        rec.test_acc = test_m.accuracy;
        rec.epsilon_spent = std::numeric_limits<double>::infinity();
        rec.sigma = 0.0;
        dpkit::write_text_file(cl.csv_path, dpkit::csv_to_string({rec}));
        std::printf("wrote %s\n", cl.csv_path.c_str());
      }
      return kExitOk;
    }

    if (*report_cmd) {
      const std::string text = dpkit::read_text_file(re.csv_path);
      const std::string svg = dpkit::render_report(dpkit::parse_csv(text));
      const std::string out_path =
          re.out_path.empty() ? re.csv_path + ".svg" : re.out_path;
      dpkit::write_text_file(out_path, svg);
      std::printf("wrote %s\n", out_path.c_str());
      return kExitOk;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "dpkit: %s\n", e.what());
    return kExitRuntime;
  }

  return kExitUsage;
}

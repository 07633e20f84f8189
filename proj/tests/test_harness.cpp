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

#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "doctest.h"
#include "dpkit/error.hpp"
#include "json.hpp"

namespace dpkit {
namespace {

std::size_t count_occurrences(const std::string& text,
                              const std::string& needle) {
  std::size_t count = 0;
  for (std::size_t pos = text.find(needle); pos != std::string::npos;
       pos = text.find(needle, pos + needle.size())) {
    ++count;
  }
  return count;
}

ExperimentSpec tiny_spec(const std::string& id, std::uint64_t seed) {
  ExperimentSpec s;
  s.id = id;
  s.widths = ConvNetWidths{2, 2, 2, 2};
  s.dataset = "synthetic";
  s.synth_classes = 2;
  s.synth_per_class = 8;
  s.synth_test_per_class = 4;
  s.synth_separation = 4.0;
  s.config.optimizer = OptimizerKind::kSgd;
  s.config.batch_size = 8;
  s.config.epochs = 2;
  // Matches noise_multiplier 0.8 under the reference schedule, so training
  // does not warn about an inconsistent (epsilon, sigma) pair.
  s.config.epsilon = 0.83;
  s.config.learning_rate = 0.1;
  s.config.noise_multiplier = 0.8;
  s.config.seed = seed;
  s.config.runs = 1;
  return s;
}

TEST_CASE("the table1 preset pins all twenty configurations") {
  const std::vector<ExperimentSpec> specs = table1_preset();
  REQUIRE(specs.size() == 20);

  const double expected_sigma[20] = {0.47, 0.47, 0.67, 0.67, 0.67, 0.67, 0.88,
                                     1.07, 0.76, 0.91, 0.91, 0.76, 0.91, 0.91,
                                     0.91, 1.21, 0.91, 1.21, 2.81, 0.91};
  for (int i = 0; i < 20; ++i) {
    CAPTURE(i);
    const ExperimentSpec& s = specs[static_cast<std::size_t>(i)];
    CHECK_NOTHROW(s.validate());
    REQUIRE(s.config.noise_multiplier.has_value());
    CHECK(*s.config.noise_multiplier == expected_sigma[i]);
    CHECK(s.config.delta == 1e-5);
    CHECK(s.dataset == "cifar10");
    CHECK(s.subset_size == 5000);
    CHECK((s.config.runs == 1 || s.config.runs == 3));
  }
  // Spot checks against the published rows.
  CHECK(specs[0].config.optimizer == OptimizerKind::kSgd);
  CHECK(specs[0].config.batch_size == 128);
  CHECK(specs[0].config.epsilon == 20.0);
  CHECK(specs[3].config.optimizer == OptimizerKind::kRmsProp);
  CHECK(specs[13].config.optimizer == OptimizerKind::kAdagrad);
  CHECK(specs[7].config.batch_size == 256);
  CHECK(specs[7].config.epsilon == 2.5);
  CHECK(specs[18].config.epsilon == 1.0);
  CHECK(specs[18].config.epochs == 100);
  CHECK(specs[19].config.epochs == 200);
  CHECK(specs[8].config.runs == 3);
  CHECK(specs[19].config.runs == 1);

  // Ids are unique.
  for (int i = 0; i < 20; ++i) {
    for (int j = i + 1; j < 20; ++j) {
      CHECK(specs[static_cast<std::size_t>(i)].id !=
            specs[static_cast<std::size_t>(j)].id);
    }
  }
}

TEST_CASE("experiment configs parse from flat key = value text") {
  const std::string text =
      "# one benchmark row\n"
      "id = row-7\n"
      "optimizer = adam\n"
      "batch_size = 128\n"
      "epsilon = 2.5\n"
      "delta = 1e-5\n"
      "clip_norm = 0.75\n"
      "learning_rate = 1e-3\n"
      "epochs = 50\n"
      "noise_multiplier = 0.88\n"
      "model = 4,4,8,8\n"
      "seed = 9\n"
      "runs = 3\n"
      "\n"
      "dataset = synthetic\n"
      "subset_size = 100   # first hundred records\n"
      "dataset_seed = 77\n"
      "synth_classes = 4\n"
      "synth_per_class = 25\n"
      "synth_test_per_class = 10\n"
      "synth_separation = 5.5\n";
  const ExperimentSpec spec = parse_experiment(text);
  CHECK(spec.id == "row-7");
  CHECK(spec.config.optimizer == OptimizerKind::kAdam);
  CHECK(spec.config.batch_size == 128);
  CHECK(spec.config.epsilon == 2.5);
  CHECK(spec.config.delta == 1e-5);
  CHECK(spec.config.clip_norm == 0.75);
  CHECK(spec.config.learning_rate == 1e-3);
  CHECK(spec.config.epochs == 50);
  REQUIRE(spec.config.noise_multiplier.has_value());
  CHECK(*spec.config.noise_multiplier == 0.88);
  CHECK(spec.widths == ConvNetWidths{4, 4, 8, 8});
  CHECK(spec.config.seed == 9);
  CHECK(spec.config.runs == 3);
  CHECK(spec.dataset == "synthetic");
  CHECK(spec.subset_size == 100);
  CHECK(spec.dataset_seed == 77);
  CHECK(spec.synth_classes == 4);
  CHECK(spec.synth_per_class == 25);
  CHECK(spec.synth_test_per_class == 10);
  CHECK(spec.synth_separation == 5.5);
  CHECK_NOTHROW(spec.validate());

  // Defaults survive an empty config; fallback id applies.
  const ExperimentSpec bare = parse_experiment("", "fallback");
  CHECK(bare.id == "fallback");
  CHECK_FALSE(bare.config.noise_multiplier.has_value());
  CHECK(bare.widths == ConvNetWidths{});

  CHECK(parse_experiment("model = convnet").widths == ConvNetWidths{});
}

TEST_CASE("config parse errors carry the offending line number") {
  CHECK_THROWS_WITH_AS(parse_experiment("epochs = 5\nbogus_key = 1\n"),
                       doctest::Contains("line 2"), ParseError);
  CHECK_THROWS_WITH_AS(parse_experiment("epochs = 5\nbogus_key = 1\n"),
                       doctest::Contains("unknown key"), ParseError);
  CHECK_THROWS_WITH_AS(parse_experiment("epochs five\n"),
                       doctest::Contains("line 1"), ParseError);
  CHECK_THROWS_WITH_AS(parse_experiment("epochs = five\n"),
                       doctest::Contains("expected an integer"), ParseError);
  CHECK_THROWS_WITH_AS(parse_experiment("epsilon = 5x\n"),
                       doctest::Contains("expected a number"), ParseError);
  CHECK_THROWS_WITH_AS(parse_experiment("\n\nseed = 1\nseed = 2\n"),
                       doctest::Contains("line 4"), ParseError);
  CHECK_THROWS_WITH_AS(parse_experiment("epochs =\n"),
                       doctest::Contains("empty value"), ParseError);
  CHECK_THROWS_WITH_AS(parse_experiment("model = 2,2,2\n"),
                       doctest::Contains("model"), ParseError);
  CHECK_THROWS_WITH_AS(parse_experiment("optimizer = sgdm\n"),
                       doctest::Contains("line 1"), ParseError);

  // Semantic violations surface from validate(), not the parser.
  ExperimentSpec spec = parse_experiment("dataset = mnist\n");
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec = parse_experiment("id = a,b\ndataset = synthetic\n");
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec = parse_experiment("synth_classes = 1\n");
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec = parse_experiment("runs = 0\n");
  CHECK_THROWS_AS(spec.validate(), ConfigError);
}

TEST_CASE("metric records survive a CSV round trip byte for byte") {
  std::vector<MetricsRecord> records;
  MetricsRecord r;
  r.experiment_id = "exp-a";
  r.run = 0;
  r.epoch = 1;
  r.train_loss = 2.302585092994046;
  r.train_acc = 0.1015625;
  r.test_loss = 2.1;
  r.test_acc = 0.47;
  r.epsilon_spent = 0.8414709848078965;
  r.sigma = 0.91;
  records.push_back(r);
  r.epoch = 2;
  r.epsilon_spent = std::numeric_limits<double>::infinity();
  r.sigma = 0.0;
  records.push_back(r);

  const std::string csv = csv_to_string(records);
  // Header is the exact schema contract.
  CHECK(csv.rfind(std::string(kCsvHeader) + "\n", 0) == 0);
  const std::vector<MetricsRecord> back = parse_csv(csv);
  REQUIRE(back.size() == 2);
  CHECK(back[0] == records[0]);
  CHECK(back[1] == records[1]);
  CHECK(std::isinf(back[1].epsilon_spent));
  // Re-serialization is byte-identical (shortest-round-trip formatting).
  CHECK(csv_to_string(back) == csv);
}

TEST_CASE("CSV parse errors name the offending line") {
  CHECK_THROWS_WITH_AS(parse_csv(""), doctest::Contains("line 1"), ParseError);
  CHECK_THROWS_WITH_AS(parse_csv("wrong,header\n"),
                       doctest::Contains("expected header"), ParseError);
  const std::string head = std::string(kCsvHeader) + "\n";
  CHECK_THROWS_WITH_AS(parse_csv(head + "a,0,1,0.5,0.5,0.5\n"),
                       doctest::Contains("line 2"), ParseError);
  CHECK_THROWS_WITH_AS(
      parse_csv(head + "a,0,1,0.5,0.5,0.5,0.5,1.0,0.9\n" +
                "b,0,x,0.5,0.5,0.5,0.5,1.0,0.9\n"),
      doctest::Contains("line 3"), ParseError);
  CHECK_THROWS_WITH_AS(parse_csv(head + ",0,1,0.5,0.5,0.5,0.5,1.0,0.9\n"),
                       doctest::Contains("experiment_id"), ParseError);
  // Blank trailing lines are fine.
  CHECK(parse_csv(head + "a,0,1,0.5,0.5,0.5,0.5,1.0,0.9\n\n").size() == 1);
}

TEST_CASE("summarize averages the final epoch of each run") {
  ExperimentResult res;
  res.id = "avg";
  res.ok = true;
  for (int run = 0; run < 3; ++run) {
    for (int epoch = 1; epoch <= 2; ++epoch) {
      MetricsRecord r;
      r.experiment_id = "avg";
      r.run = run;
      r.epoch = epoch;
      // Final-epoch values vary by run; epoch-1 rows must be ignored.
      r.train_loss = epoch == 2 ? 1.0 + run : 99.0;
      r.train_acc = epoch == 2 ? 0.5 : 0.0;
      r.test_loss = epoch == 2 ? 2.0 + run : 99.0;
      r.test_acc = epoch == 2 ? 0.25 : 0.0;
      r.epsilon_spent = epoch == 2 ? 4.0 : 2.0;
      r.sigma = 0.91;
      res.records.push_back(r);
    }
  }
  ExperimentResult failed;
  failed.id = "broken";
  failed.ok = false;
  failed.error = "boom";

  const std::vector<SummaryRow> rows = summarize({res, failed});
  REQUIRE(rows.size() == 1);  // failed experiments carry no summary
  CHECK(rows[0].id == "avg");
  CHECK(rows[0].runs == 3);
  CHECK(rows[0].train_loss == 2.0);  // mean of 1,2,3
  CHECK(rows[0].train_acc == 0.5);   // constant per run -> the value itself
  CHECK(rows[0].test_loss == 3.0);
  CHECK(rows[0].test_acc == 0.25);
  CHECK(rows[0].epsilon_spent == 4.0);
  CHECK(rows[0].sigma == 0.91);

  const std::string table = summary_to_string(rows);
  CHECK(table.find("experiment") != std::string::npos);
  CHECK(table.find("avg") != std::string::npos);
}

TEST_CASE("a grid runs specs in order and captures per-experiment failures") {
  ExperimentSpec good = tiny_spec("good", 5);
  ExperimentSpec bad = tiny_spec("bad", 5);
  bad.dataset = "cifar10";  // no data directory provided -> must fail
  ExperimentSpec also_good = tiny_spec("also-good", 6);

  const GridOutput out = run_grid({good, bad, also_good}, "");
  REQUIRE(out.results.size() == 3);
  CHECK(out.results[0].ok);
  CHECK_FALSE(out.results[1].ok);
  CHECK(out.results[1].error.find("data directory") != std::string::npos);
  CHECK(out.results[1].records.empty());
  CHECK(out.results[2].ok);  // the grid continued past the failure

  // CSV carries only completed experiments, in grid order.
  const std::vector<MetricsRecord> recs = out.records;
  REQUIRE(recs.size() == 4);  // 2 experiments x 1 run x 2 epochs
  CHECK(recs[0].experiment_id == "good");
  CHECK(recs[0].epoch == 1);
  CHECK(recs[3].experiment_id == "also-good");

  // Duplicate ids are rejected up front.
  CHECK_THROWS_AS(run_grid({good, good}, ""), ConfigError);
}

TEST_CASE("grids with fixed seeds reproduce identical CSV bytes") {
  ExperimentSpec a = tiny_spec("exp-a", 11);
  ExperimentSpec b = tiny_spec("exp-b", 12);
  b.config.optimizer = OptimizerKind::kAdam;
  b.config.learning_rate = 0.01;
  b.config.runs = 2;

  const GridOutput first = run_grid({a, b}, "");
  const GridOutput second = run_grid({a, b}, "");
  const std::string csv1 = csv_to_string(first.records);
  const std::string csv2 = csv_to_string(second.records);
  CHECK(csv1 == csv2);

  // Two runs of one spec differ only in seed: same schema, distinct rows.
  REQUIRE(first.results[1].records.size() == 4);  // 2 runs x 2 epochs
  const MetricsRecord& run0 = first.results[1].records[1];
  const MetricsRecord& run1 = first.results[1].records[3];
  CHECK(run0.run == 0);
  CHECK(run1.run == 1);
  CHECK(run0.epoch == run1.epoch);
  CHECK(run0.sigma == run1.sigma);
  CHECK(run0.train_loss != run1.train_loss);

  // epsilon_spent is nondecreasing within every run.
  for (const ExperimentResult& res : first.results) {
    double last = 0.0;
    int last_run = -1;
    for (const MetricsRecord& rec : res.records) {
      if (rec.run != last_run) {
        last = 0.0;
        last_run = rec.run;
      }
      CHECK(rec.epsilon_spent >= last);
      last = rec.epsilon_spent;
      CHECK(rec.train_acc >= 0.0);
      CHECK(rec.train_acc <= 1.0);
      CHECK(rec.test_acc >= 0.0);
      CHECK(rec.test_acc <= 1.0);
    }
  }

  const std::vector<SummaryRow> rows = summarize(first.results);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].runs == 1);
  CHECK(rows[1].runs == 2);
}

TEST_CASE("reports are deterministic structural SVG") {
  std::vector<MetricsRecord> records;
  for (const char* id : {"exp-a", "exp-b"}) {
    for (int epoch = 1; epoch <= 2; ++epoch) {
      MetricsRecord r;
      r.experiment_id = id;
      r.run = 0;
      r.epoch = epoch;
      r.train_loss = 2.0 / epoch;
      r.train_acc = 0.2 * epoch;
      r.test_loss = 2.5 / epoch;
      r.test_acc = 0.15 * epoch;
      r.epsilon_spent = 1.5 * epoch;
      r.sigma = 0.91;
      records.push_back(r);
    }
  }

  const std::string svg = render_report(records);
  CHECK(svg.rfind("<?xml", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  // Five charts (one per metric column), two series each.
  CHECK(count_occurrences(svg, "<polyline class=\"series\"") == 10);
  for (const char* name : {"train_loss", "train_acc", "test_loss", "test_acc",
                           "epsilon_spent", "epoch"}) {
    CHECK(svg.find(name) != std::string::npos);
  }
  CHECK(count_occurrences(svg, ">exp-a</text>") == 5);
  CHECK(count_occurrences(svg, ">exp-b</text>") == 5);
  // Each series polyline holds two points (two epochs).
  const std::size_t p = svg.find("points=\"");
  REQUIRE(p != std::string::npos);
  const std::size_t end = svg.find('"', p + 8);
  const std::string pts = svg.substr(p + 8, end - p - 8);
  CHECK(count_occurrences(pts, ",") == 2);
  CHECK(count_occurrences(pts, " ") == 1);

  // Byte-identical on repeat: the report is a pure function of the records.
  CHECK(render_report(records) == svg);

  // Non-finite epsilon values cannot be plotted; that chart loses its lines
  // but the other four keep both series.
  for (MetricsRecord& r : records) {
    r.epsilon_spent = std::numeric_limits<double>::infinity();
  }
  const std::string svg_inf = render_report(records);
  CHECK(count_occurrences(svg_inf, "<polyline class=\"series\"") == 8);

  // Ids render XML-escaped.
  records[0].experiment_id = "a<b&c";
  records[1].experiment_id = "a<b&c";
  const std::string svg_esc = render_report(records);
  CHECK(svg_esc.find("a&lt;b&amp;c") != std::string::npos);
  CHECK(svg_esc.find("a<b&c") == std::string::npos);

  CHECK_THROWS_AS(render_report({}), ParseError);
}

TEST_CASE("grid metadata lands in JSON, not in the CSV") {
  ExperimentSpec ok_spec = tiny_spec("fine", 3);
  ExperimentSpec bad_spec = tiny_spec("broken", 3);
  bad_spec.dataset = "cifar10";
  const GridOutput out = run_grid({ok_spec, bad_spec}, "");

  const std::string meta = grid_metadata_json(
      {ok_spec, bad_spec}, out.results, "2026-01-02T03:04:05Z",
      "2026-01-02T03:09:59Z");
  const nlohmann::json parsed = nlohmann::json::parse(meta);
  CHECK(parsed.at("started_at") == "2026-01-02T03:04:05Z");
  CHECK(parsed.at("finished_at") == "2026-01-02T03:09:59Z");
  REQUIRE(parsed.at("experiments").size() == 2);
  CHECK(parsed["experiments"][0]["id"] == "fine");
  CHECK(parsed["experiments"][0]["ok"] == true);
  CHECK(parsed["experiments"][0]["optimizer"] == "sgd");
  CHECK(parsed["experiments"][0]["noise_multiplier"] == 0.8);
  CHECK(parsed["experiments"][1]["ok"] == false);
  CHECK(parsed["experiments"][1].contains("error"));

  // CSV bytes carry no timestamps; reruns stay comparable.
  CHECK(csv_to_string(out.records).find("2026") == std::string::npos);

  const std::string now = iso8601_now();
  CHECK(now.size() == 20);
  CHECK(now[4] == '-');
  CHECK(now[10] == 'T');
  CHECK(now.back() == 'Z');
}

TEST_CASE("text files round trip through the helpers") {
  const std::string path = "harness_roundtrip.txt";
  const std::string content = "alpha\nbeta\n";
  write_text_file(path, content);
  CHECK(read_text_file(path) == content);
  std::remove(path.c_str());
  CHECK_THROWS_AS(read_text_file("no_such_file_here.txt"), DataError);
}

}  // namespace
}  // namespace dpkit

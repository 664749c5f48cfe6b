// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include <filesystem>
#include <fstream>
#include <sstream>

#include "common.hpp"
#include "doctest.h"
#include "pipeline.hpp"
#include "simulate.hpp"

using namespace railbeam;
namespace fs = std::filesystem;

namespace {

ScenarioConfig small_scenario() {
    ScenarioConfig sc;
    sc.layout.rows = sc.layout.cols = 4;
    return sc;
}

ExperimentConfig tiny_experiment(const std::string& dir) {
    ExperimentConfig cfg;
    cfg.scenario = small_scenario();
    cfg.speeds = {500.0};
    cfg.seeds = {2};
    cfg.beam.n_samples = 200;
    cfg.beam.train.max_epochs = 1;
    cfg.beam.predictors = {PredictorId::nonai_best_measured, PredictorId::cnn_fc_downsampled};
    cfg.cell.n_samples = 100;
    cfg.cell.train.max_epochs = 1;
    cfg.cell.variants = {CellVariant::all_beam_cell};
    cfg.cell.sim_passes = 1;
    cfg.beam.write_datasets = cfg.cell.write_datasets = false;
    cfg.output_dir = dir;
    return cfg;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

} // namespace

TEST_SUITE("simulate") {

TEST_CASE("traces are reproducible per pass") {
    SimulationConfig cfg;
    cfg.speed_kmh = 500.0;
    cfg.passes = 2;
    cfg.seed = 4;
    const auto a = simulation_traces(small_scenario(), ChannelConfig{}, cfg, 1);
    const auto b = simulation_traces(small_scenario(), ChannelConfig{}, cfg, 1);
    REQUIRE(a.size() == 2);
    CHECK(a[0].l3 == b[0].l3);
    CHECK(a[1].sinr == b[1].sinr);
    CHECK(a[0].l3 != a[1].l3);
    CHECK(a[0].n_cells == 21);
    CHECK(a[0].l3.size() == a[0].n_instances() * 21);
}

TEST_CASE("pooled kpis sum the passes") {
    SimulationConfig cfg;
    cfg.speed_kmh = 500.0;
    cfg.passes = 2;
    const auto traces = simulation_traces(small_scenario(), ChannelConfig{}, cfg, 1);
    const auto runs = run_simulation(traces, cfg.handover, ForecastSource::none);
    const auto oracle = run_simulation(traces, HandoverConfig{}, ForecastSource::oracle);
    REQUIRE(runs.size() == 2);
    const KpiReport pooled = pool_kpis(runs);
    CHECK(pooled.ho_success == runs[0].kpi.ho_success + runs[1].kpi.ho_success);
    CHECK(pooled.rlf == runs[0].kpi.rlf + runs[1].kpi.rlf);
    CHECK(pooled.ho_commands == pooled.ho_success + pooled.hof_events);
    CHECK(pooled.ho_success > 0);
    CHECK(pool_kpis(oracle).ho_commands > 0);
    CHECK_THROWS_AS(run_simulation(traces, cfg.handover, ForecastSource::model, nullptr), ValidationError);
}

}

TEST_SUITE("pipeline") {

TEST_CASE("an empty sweep is rejected before any output") {
    const auto dir = (fs::temp_directory_path() / "railbeam_test_empty_sweep").string();
    fs::remove_all(dir);
    ExperimentConfig cfg = tiny_experiment(dir);
    cfg.speeds.clear();
    CHECK_THROWS_AS(run_pipeline(cfg), ValidationError);
    CHECK_FALSE(fs::exists(dir));
    CHECK_THROWS_AS(experiment_config_from_json(nlohmann::json{{"seeds", nlohmann::json::array()}}),
                    ValidationError);
    CHECK_THROWS_AS(experiment_config_from_json(nlohmann::json{{"speeds", {-60.0}}}), ValidationError);
    CHECK_THROWS_AS(experiment_config_from_json(nlohmann::json{{"speeds", "fast"}}), ValidationError);
}

TEST_CASE("config hash ignores the output directory") {
    const ExperimentConfig a = tiny_experiment("x"), b = tiny_experiment("y");
    CHECK(a.hash() == b.hash());
    ExperimentConfig c = a;
    c.seeds = {3};
    CHECK(c.hash() != a.hash());
    const ExperimentConfig back = experiment_config_from_json(a.to_json());
    CHECK(back.hash() == a.hash());
    CHECK(speed_tag(60.0) == "v60");
    CHECK(speed_tag(12.5) == "v12.5");
}

TEST_CASE("a run writes reports and resumes") {
    const auto dir = (fs::temp_directory_path() / "railbeam_test_pipeline").string();
    fs::remove_all(dir);
    const ExperimentConfig cfg = tiny_experiment(dir);
    run_pipeline(cfg, {1, nullptr});
    const std::string fig3 = slurp(dir + "/fig3.csv"), table2 = slurp(dir + "/table2.csv");
    CHECK(fig3.rfind("# railbeam ", 0) == 0);
    CHECK(fig3.find("config_hash=" + cfg.hash()) != std::string::npos);
    CHECK(fig3.find("speed,predictor,top1_accuracy") != std::string::npos);
    CHECK(fig3.find("500,cnn_fc_downsampled,") != std::string::npos);
    CHECK(table2.find("scheme,500") != std::string::npos);
    CHECK(table2.find("Non-AI,") != std::string::npos);
    CHECK(table2.find("CNN_All_Beam_Cell,") != std::string::npos);
    const auto j = build_report_json(dir, ReportStyle::table2);
    CHECK(j.contains("definition"));

    // Finished units are skipped on a second run with the same config.
    const auto stamp = fs::last_write_time(dir + "/beam/v500_s2/done.json");
    std::ostringstream log;
    run_pipeline(cfg, {1, &log});
    CHECK(fs::last_write_time(dir + "/beam/v500_s2/done.json") == stamp);
    CHECK(slurp(dir + "/fig3.csv") == fig3);
    CHECK_THROWS_AS(build_report_csv(dir + "/missing", ReportStyle::fig3), ValidationError);
    CHECK_THROWS_AS(report_style_from_string("fig4"), ValidationError);
    fs::remove_all(dir);
}

}

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

#include <cstring>
#include <string>

#include "doctest.h"
#include "railbeam/railbeam.h"

namespace {

std::string take(char* s) {
    std::string out = s ? s : "";
    rb_free(s);
    return out;
}

} // namespace

TEST_SUITE("capi") {

TEST_CASE("version and scenario dump") {
    CHECK(std::string(rb_version()) == "0.1.0");
    char* out = nullptr;
    REQUIRE(rb_scenario_dump("{}", &out) == RB_OK);
    const std::string dump = take(out);
    CHECK(dump.find("\"cell_count\"") != std::string::npos);
}

TEST_CASE("errors map to codes and a message") {
    char* out = nullptr;
    CHECK(rb_scenario_dump("{not json", &out) == RB_ERR_VALIDATION);
    CHECK(out == nullptr);
    CHECK(std::strlen(rb_last_error()) > 0);
    CHECK(rb_codebook_show(8, 8, 1, 0.5, "abc", "equidistant", 1, &out) == RB_ERR_VALIDATION);
    rb_experiment* e = nullptr;
    CHECK(rb_experiment_from_json("{\"speeds\": []}", &e) == RB_ERR_VALIDATION);
    CHECK(e == nullptr);
    rb_predictor* p = nullptr;
    CHECK(rb_predictor_load("/nonexistent/model.rbck", &p) != RB_OK);
    CHECK(rb_report("/nonexistent/dir", "fig3", "csv", &out) == RB_ERR_VALIDATION);
}

TEST_CASE("a successful call clears the last error") {
    char* out = nullptr;
    CHECK(rb_scenario_dump("[", &out) != RB_OK);
    REQUIRE(rb_codebook_show(4, 4, 1, 0.5, "1/4", "equidistant", 1, &out) == RB_OK);
    CHECK(take(out).find("set_b") != std::string::npos);
    CHECK(std::string(rb_last_error()).empty());
}

TEST_CASE("experiment config round trip") {
    rb_experiment* e = nullptr;
    REQUIRE(rb_experiment_from_json("{\"speeds\": [120], \"seeds\": [7]}", &e) == RB_OK);
    REQUIRE(rb_experiment_set_output_dir(e, "/tmp/railbeam_capi_out") == RB_OK);
    char* out = nullptr;
    REQUIRE(rb_experiment_config(e, &out) == RB_OK);
    const std::string cfg = take(out);
    CHECK(cfg.find("/tmp/railbeam_capi_out") != std::string::npos);
    CHECK(cfg.find("120") != std::string::npos);
    rb_experiment_destroy(e);
}

}

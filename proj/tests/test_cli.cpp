#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "uq/cli.hpp"
#include "uq/errors.hpp"

using namespace uq;

namespace {

std::string emit_string(const report::ExperimentReport& rep, report::Format fmt) {
  std::ostringstream out;
  report::emit(rep, fmt, out);
  return out.str();
}

std::string write_temp_config(const std::string& name, const nlohmann::ordered_json& doc) {
  const std::string path = "/tmp/uq_test_" + name + ".json";
  std::ofstream out(path);
  out << doc.dump(2);
  return path;
}

// Small, fast base configuration for command-level tests.
nlohmann::ordered_json small_doc() {
  nlohmann::ordered_json doc;
  doc["run"] = {{"samples", 200}, {"runs", 3}, {"seed", 7}, {"grid_n", 16}};
  return doc;
}

int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"uq"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return cli::run_main(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_CASE("config defaults and validation") {
  const cli::Config def = cli::Config::defaults();
  CHECK(def.run.nominal.sigma2 == 4.0);
  CHECK(def.run.goals.size() == 3);
  CHECK(def.directions.size() == 2);

  nlohmann::ordered_json doc = small_doc();
  const cli::Config c = cli::Config::from_json(doc);
  CHECK(c.run.samples == 200);
  CHECK(c.run.grid_n == 16);
  // untouched sections keep their defaults
  CHECK(c.run.nominal.ell == 0.005);

  doc["run"]["samples"] = 1;
  CHECK_THROWS_AS(cli::Config::from_json(doc), ConfigError);
  nlohmann::ordered_json bad_goal = small_doc();
  bad_goal["goals"] = nlohmann::ordered_json::array({{{"kind", "no_such_goal"}}});
  CHECK_THROWS_AS(cli::Config::from_json(bad_goal), Error);
}

TEST_CASE("config echo round-trips") {
  nlohmann::ordered_json doc = small_doc();
  doc["sensitivity"] = {{"directions", {"tau2"}}, {"rho_targets", {0.01}}};
  const cli::Config c = cli::Config::from_json(doc);
  const cli::Config again = cli::Config::from_json(c.echo);
  CHECK(again.echo == c.echo);
  CHECK(again.run.samples == c.run.samples);
  CHECK(again.directions == c.directions);
}

TEST_CASE("screen command row layout") {
  nlohmann::ordered_json doc = small_doc();
  SUBCASE("single nominal model gives four rows") {
    const auto rep = cli::cmd_screen(cli::Config::from_json(doc));
    CHECK(rep.rows.size() == 4);
    CHECK(rep.experiment == "screen");
  }
  SUBCASE("three-by-three grid gives 36 rows") {
    doc["screen"] = {{"ell", {0.005, 0.05, 0.5}}, {"tau2", {0.005, 0.05, 0.5}}};
    const auto rep = cli::cmd_screen(cli::Config::from_json(doc));
    CHECK(rep.rows.size() == 36);
  }
}

TEST_CASE("sensitivity command") {
  nlohmann::ordered_json doc = small_doc();

  SUBCASE("empty epsilon list yields an empty report") {
    doc["sensitivity"] = {{"directions", {"tau2"}},
                          {"epsilons", {{"tau2", nlohmann::ordered_json::array()}}}};
    const auto rep = cli::cmd_sensitivity(cli::Config::from_json(doc));
    CHECK(rep.rows.empty());
  }

  SUBCASE("rows per goal, direction, epsilon") {
    doc["sensitivity"] = {{"directions", {"tau2"}}, {"rho_targets", {1e-2}}};
    const auto rep = cli::cmd_sensitivity(cli::Config::from_json(doc));
    CHECK(rep.rows.size() == 3);  // three default goals, one direction, one epsilon
    CHECK(rep.experiment == "sensitivity");
  }

  SUBCASE("concentration flag renames the experiment and method") {
    doc["run"]["use_concentration"] = true;
    doc["sensitivity"] = {{"directions", {"tau2"}}, {"rho_targets", {1e-2}}};
    const auto rep = cli::cmd_sensitivity(cli::Config::from_json(doc));
    CHECK(rep.experiment == "concentration");
    const std::string text = emit_string(rep, report::Format::csv);
    CHECK(text.find("bennett") != std::string::npos);
  }
}

TEST_CASE("reports are reproducible from their metadata") {
  setenv("SOURCE_DATE_EPOCH", "1700000000", 1);
  nlohmann::ordered_json doc = small_doc();
  doc["sensitivity"] = {{"directions", {"tau2"}}, {"rho_targets", {1e-2}}};
  const cli::Config c = cli::Config::from_json(doc);
  const std::string once = emit_string(cli::cmd_sensitivity(c), report::Format::json);
  const std::string twice = emit_string(cli::cmd_sensitivity(c), report::Format::json);
  CHECK(once == twice);
  // Re-running from the echoed config reproduces the bytes as well.
  const cli::Config from_echo = cli::Config::from_json(c.echo);
  CHECK(emit_string(cli::cmd_sensitivity(from_echo), report::Format::json) == once);
  unsetenv("SOURCE_DATE_EPOCH");
}

TEST_CASE("misspec command") {
  nlohmann::ordered_json doc;
  doc["run"] = {{"samples", 150}, {"runs", 3}, {"seed", 11}, {"grid_n", 16}};
  doc["misspec"] = {{"data",
                     {{"synthetic",
                       {{"theta0", {{"mu", 1.0}, {"sigma2", 0.5}, {"ell", 0.02}, {"tau2", 0.5}}},
                        {"count", 120},
                        {"extent", 1.0},
                        {"seed", 3}}}}},
                    {"fractions", {0.25, 0.5, 0.75, 1.0}},
                    {"nominal_fraction", 0.5}};
  const auto rep = cli::cmd_misspec(cli::Config::from_json(doc));
  CHECK(rep.rows.size() == 4 * 3);  // fractions x goals
  CHECK(rep.experiment == "misspec");

  // locate the nominal fraction rows: relative entropy collapses there
  const std::size_t frac_col = 0, re_col = 3;
  bool found_nominal = false;
  for (const auto& row : rep.rows) {
    if (row[frac_col].num == 0.5) {
      CHECK(row[re_col].num < 1e-6);
      found_nominal = true;
    } else {
      CHECK(row[re_col].num >= 0.0);
    }
  }
  CHECK(found_nominal);
}

TEST_CASE("misspec envelope contains the weak error at desk scale") {
  nlohmann::ordered_json doc;
  doc["run"] = {{"samples", 600}, {"runs", 8}, {"seed", 29}, {"grid_n", 16}};
  nlohmann::ordered_json fractions = nlohmann::ordered_json::array();
  for (int k = 2; k <= 20; ++k) fractions.push_back(0.05 * k);
  doc["misspec"] = {{"data",
                     {{"synthetic",
                       {{"theta0", {{"mu", 1.0}, {"sigma2", 0.5}, {"ell", 0.02}, {"tau2", 0.5}}},
                        {"count", 160},
                        {"extent", 1.0},
                        {"seed", 13}}}}},
                    {"fractions", fractions},
                    {"nominal_fraction", 0.5}};
  const auto rep = cli::cmd_misspec(cli::Config::from_json(doc));
  // Per-fraction means over runs: the envelope should contain the mean weak
  // error in at least 90% of the (fraction, goal) cells. The nominal
  // fraction itself is the known exception (zero budget against independent
  // sampling noise).
  int contained = 0, cells = 0;
  const std::size_t xim_col = 4, xip_col = 8, fd_col = 12;
  for (const auto& row : rep.rows) {
    ++cells;
    if (row[fd_col].num >= row[xim_col].num && row[fd_col].num <= row[xip_col].num) ++contained;
  }
  CHECK(cells == 19 * 3);
  CHECK(contained >= static_cast<int>(0.9 * cells));
}

TEST_CASE("worstcase command") {
  nlohmann::ordered_json doc;
  doc["run"] = {{"samples", 150}, {"runs", 3}, {"seed", 19}, {"grid_n", 16}};
  doc["worstcase"] = {{"data",
                       {{"synthetic",
                         {{"theta0", {{"mu", 1.0}, {"sigma2", 0.5}, {"ell", 0.02}, {"tau2", 0.5}}},
                          {"count", 120},
                          {"extent", 1.0},
                          {"seed", 5}}}}},
                      {"count", 6},
                      {"bins", 5},
                      {"nominals", 1}};
  const auto rep = cli::cmd_worstcase(cli::Config::from_json(doc));
  CHECK(rep.experiment == "worstcase");

  int histogram_total = 0;
  int selection_rows = 0;
  int contained = 0;
  for (const auto& row : rep.rows) {
    if (row[0].text == "histogram") histogram_total += static_cast<int>(row[5].num);
    if (row[0].text == "selection") {
      ++selection_rows;
      // Bounds at the max-RE budget cover every selected alternative.
      if (row[13].num >= row[9].num && row[13].num <= row[11].num) ++contained;
    }
  }
  CHECK(histogram_total == 6);     // every successful fit lands in a bin
  CHECK(selection_rows == 4 * 3);  // four selections x three goals
  CHECK(contained >= selection_rows - 1);
}

TEST_CASE("exit codes") {
  SUBCASE("missing config file") {
    CHECK(run_cli({"screen", "--config", "/nonexistent/uq.json"}) == 2);
  }
  SUBCASE("invalid config content") {
    const std::string path = write_temp_config("bad", {{"run", {{"samples", 0}}}});
    CHECK(run_cli({"screen", "--config", path}) == 2);
  }
  SUBCASE("unwritable output") {
    const std::string path = write_temp_config("ok", small_doc());
    CHECK(run_cli({"screen", "--config", path, "--out", "/nonexistent-dir/x.csv"}) == 4);
  }
  SUBCASE("successful screen run writes a file") {
    const std::string cfg = write_temp_config("ok2", small_doc());
    const std::string out = "/tmp/uq_test_screen_out.csv";
    CHECK(run_cli({"screen", "--config", cfg, "--out", out}) == 0);
    std::ifstream in(out);
    std::string first;
    std::getline(in, first);
    CHECK(first.find("# experiment: screen") == 0);
  }
}

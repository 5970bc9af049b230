#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "bigfive/pipeline.hpp"

using namespace bigfive;
namespace fs = std::filesystem;

namespace {

const std::string kCli = BIGFIVE_CLI_PATH;

int run_cli(const std::string& args) {
    const std::string cmd = kCli + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / ("bigfive_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// small cohort, zero dropout, mild effects; evaluation params kept light
std::string small_config_json(const fs::path& out_dir, int seed) {
    std::ostringstream ss;
    ss << R"({
  "seed": )" << seed << R"(,
  "threads": 1,
  "out_dir": ")" << out_dir.string() << R"(",
  "synth": {
    "country_counts": {"UK": 7, "ES": 10, "PE": 6, "CO": 5, "CL": 6},
    "study_days": 7,
    "dropout": {
      "opt_out": {"accelerometer": 0, "battery": 0, "calls": 0, "unlocks": 0,
                   "light": 0, "location": 0, "noise": 0, "pedometer": 0},
      "daily_gap": 0
    },
    "effects": [
      {"family": "noise_night_level", "trait": "extraversion", "size": 2.0,
       "country_modulation": 0}
    ]
  },
  "forest": {"n_trees": 20},
  "eval": {"method1_repeats": 2, "method2_repeats": 2, "balance_repeats": 2},
  "distributions": {"bins": 8, "features": ["noise.median_db.night.mean.weekday"]}
})";
    return ss.str();
}

}  // namespace

TEST_CASE("synth writes the manifest, logs and ground truth") {
    const fs::path dir = fresh_dir("synth");
    const fs::path config = dir / "config.json";
    write_file(config, small_config_json(dir / "run", 5));

    CHECK(run_cli("synth --config " + config.string()) == 0);
    CHECK(fs::exists(dir / "run" / "manifest.csv"));
    CHECK(fs::exists(dir / "run" / "ground_truth.csv"));
    CHECK(fs::exists(dir / "run" / "config_echo.json"));

    CohortManifest manifest = parse_manifest((dir / "run" / "manifest.csv").string());
    CHECK(manifest.entries.size() == 34);
    for (const auto& entry : manifest.entries)
        CHECK(fs::exists(dir / "run" / entry.log_path));
    fs::remove_all(dir);
}

TEST_CASE("default country counts produce the 166-row manifest") {
    const fs::path dir = fresh_dir("default_counts");
    const fs::path config = dir / "config.json";
    // default demographics, shortened study to keep the logs small
    write_file(config, std::string(R"({
  "seed": 3,
  "out_dir": ")") + (dir / "run").string() + R"(",
  "synth": {"study_days": 2}
})");
    CHECK(run_cli("synth --config " + config.string()) == 0);
    CohortManifest manifest = parse_manifest((dir / "run" / "manifest.csv").string());
    CHECK(manifest.entries.size() == 166);
    fs::remove_all(dir);
}

TEST_CASE("unknown config keys exit with code 2 and name the key") {
    const fs::path dir = fresh_dir("badkey");
    const fs::path config = dir / "config.json";
    write_file(config, R"({"seed": 1, "sythn": {}})");
    CHECK(run_cli("synth --config " + config.string()) == 2);

    // the diagnostic names the offending key
    const std::string cmd =
        kCli + " synth --config " + config.string() + " 2> " + (dir / "err.txt").string();
    std::system(cmd.c_str());
    CHECK(slurp(dir / "err.txt").find("sythn") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("rerunning with the same seed produces byte-identical artifacts") {
    const fs::path dir = fresh_dir("determinism");
    write_file(dir / "a.json", small_config_json(dir / "a", 9));
    write_file(dir / "b.json", small_config_json(dir / "b", 9));

    REQUIRE(run_cli("synth --config " + (dir / "a.json").string()) == 0);
    REQUIRE(run_cli("synth --config " + (dir / "b.json").string()) == 0);

    CHECK(slurp(dir / "a" / "manifest.csv") == slurp(dir / "b" / "manifest.csv"));
    CHECK(slurp(dir / "a" / "ground_truth.csv") == slurp(dir / "b" / "ground_truth.csv"));
    CohortManifest manifest = parse_manifest((dir / "a" / "manifest.csv").string());
    const std::string first_log = manifest.entries.front().log_path;
    CHECK(slurp(dir / "a" / first_log) == slurp(dir / "b" / first_log));
    fs::remove_all(dir);
}

TEST_CASE("the full stage chain runs and emits the report tables") {
    const fs::path dir = fresh_dir("chain");
    const fs::path config = dir / "config.json";
    write_file(config, small_config_json(dir / "run", 17));

    REQUIRE(run_cli("synth --config " + config.string()) == 0);
    REQUIRE(run_cli("features --config " + config.string()) == 0);
    REQUIRE(run_cli("label --config " + config.string()) == 0);
    REQUIRE(run_cli("impute --config " + config.string()) == 0);
    REQUIRE(run_cli("evaluate --config " + config.string()) == 0);
    REQUIRE(run_cli("distributions --config " + config.string()) == 0);

    const fs::path run = dir / "run";
    CHECK(fs::exists(run / "features.csv"));
    CHECK(fs::exists(run / "extraction_report.csv"));
    CHECK(fs::exists(run / "labels.csv"));
    CHECK(fs::exists(run / "features_imputed.csv"));
    CHECK(fs::exists(run / "retention.csv"));
    CHECK(fs::exists(run / "imputation_report.csv"));
    CHECK(fs::exists(run / "mcnemar.csv"));
    CHECK(fs::exists(run / "distributions.csv"));

    // the eval report carries acc% and kappa per trait for both methods
    const std::string report = slurp(run / "eval_report.csv");
    CHECK(report.find("extraversion_acc_pct") != std::string::npos);
    CHECK(report.find("openness_kappa") != std::string::npos);
    CHECK(report.find("all,method1") != std::string::npos);
    CHECK(report.find("all,method2") != std::string::npos);

    // zero dropout: nobody filtered, imputed matrix has every participant
    auto imputed = read_feature_matrix((run / "features_imputed.csv").string());
    CHECK(imputed.size() == 34);
    for (const auto& fv : imputed)
        for (const auto& v : fv.values) CHECK(v.has_value());
    fs::remove_all(dir);
}

TEST_CASE("extraction report matches the generator's dropout bookkeeping") {
    const fs::path dir = fresh_dir("dropout");
    const fs::path config = dir / "config.json";
    write_file(config, std::string(R"({
  "seed": 23,
  "out_dir": ")") + (dir / "run").string() + R"(",
  "synth": {
    "country_counts": {"UK": 12, "ES": 14, "PE": 12, "CO": 12, "CL": 10},
    "study_days": 5,
    "dropout": {
      "opt_out": {"accelerometer": 0.3, "battery": 0, "calls": 0.4, "unlocks": 0,
                   "light": 0.1, "location": 0.2, "noise": 0.1, "pedometer": 0.5},
      "daily_gap": 0
    }
  }
})");
    REQUIRE(run_cli("synth --config " + config.string()) == 0);
    REQUIRE(run_cli("features --config " + config.string()) == 0);

    // realized opt-out fractions from the ground truth table
    std::map<std::string, double> expected;
    {
        std::ifstream truth(dir / "run" / "ground_truth.csv");
        std::string line;
        std::getline(truth, line);
        std::vector<std::string> header;
        {
            std::istringstream ss(line);
            std::string f;
            while (std::getline(ss, f, ',')) header.push_back(f);
        }
        std::map<std::string, int> optout_col;
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i].rfind("optout_", 0) == 0) optout_col[header[i].substr(7)] = i;
        std::map<std::string, int> counts;
        int n = 0;
        while (std::getline(truth, line)) {
            ++n;
            std::vector<std::string> fields;
            std::istringstream ss(line);
            std::string f;
            while (std::getline(ss, f, ',')) fields.push_back(f);
            for (const auto& [cat, col] : optout_col)
                if (fields[col] == "1") counts[cat]++;
        }
        for (const auto& [cat, count] : counts)
            expected[cat] = static_cast<double>(count) / n;
    }

    std::ifstream report(dir / "run" / "extraction_report.csv");
    std::string line;
    std::getline(report, line);
    std::map<std::string, double> observed;
    while (std::getline(report, line)) {
        const auto comma = line.find(',');
        const std::string key = line.substr(0, comma);
        if (key.rfind("_", 0) == 0) continue;
        observed[key] = std::stod(line.substr(comma + 1));
    }
    for (Category c : kAllCategories) {
        const std::string name(to_string(c));
        const double want = expected.count(name) ? expected[name] : 0.0;
        CHECK(observed[name] == doctest::Approx(want).epsilon(1e-9));
        // and the realized rate sits near the configured probability
        // (quota-sampled, so equal up to rounding)
    }
    fs::remove_all(dir);
}

TEST_CASE("missing prior artifacts fail with a runtime error code") {
    const fs::path dir = fresh_dir("missing");
    const fs::path config = dir / "config.json";
    write_file(config, small_config_json(dir / "run", 31));
    CHECK(run_cli("evaluate --config " + config.string()) == 1);
    CHECK(run_cli("features --config " + config.string()) == 1);  // no manifest yet
    fs::remove_all(dir);
}

TEST_CASE("an empty manifest is a config-class failure") {
    const fs::path dir = fresh_dir("empty");
    fs::create_directories(dir / "run");
    write_file(dir / "run" / "manifest.csv",
               "#window,2018-03-05T00:00:00Z,2018-03-26T00:00:00Z\n"
               "id,country,gender,age_range,education,employment,tz_offset,q01,q02,q03,q04,q05,"
               "q06,q07,q08,q09,q10,q11,q12,q13,q14,q15,q16,q17,q18,q19,q20,q21,q22,q23,q24,q25,"
               "q26,q27,q28,q29,q30,q31,q32,q33,q34,q35,q36,q37,q38,q39,q40,q41,q42,q43,q44,q45,"
               "q46,q47,q48,q49,q50,log_path\n");
    const fs::path config = dir / "config.json";
    write_file(config, std::string(R"({"out_dir": ")") + (dir / "run").string() + R"("})");
    CHECK(run_cli("features --config " + config.string()) == 2);
    fs::remove_all(dir);
}

TEST_CASE("usage errors exit with code 2") {
    CHECK(run_cli("") == 2);
    CHECK(run_cli("frobnicate") == 2);
}

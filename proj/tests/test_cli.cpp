// Black-box tests of the command-line tool. The binary path arrives as
// argv[1]; each case runs it through the shell and inspects exit codes,
// streams and output files.
#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace {

std::string g_cli;
fs::path g_work;

struct RunResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  REQUIRE_MESSAGE(static_cast<bool>(is), "cannot read " << p.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

RunResult run(const std::string& args, const std::string& env_prefix = "") {
  const fs::path out_f = g_work / "run_stdout.txt";
  const fs::path err_f = g_work / "run_stderr.txt";
  const std::string cmd = env_prefix + g_cli + " " + args + " > " +
                          out_f.string() + " 2> " + err_f.string();
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out_f);
  r.err = slurp(err_f);
  return r;
}

std::vector<std::string> csv_column(const std::string& text,
                                    std::size_t field) {
  std::vector<std::string> out;
  std::istringstream is(text);
  std::string line;
  std::getline(is, line); // header
  while (std::getline(is, line)) {
    std::size_t start = 0;
    for (std::size_t f = 0; f < field; ++f) {
      start = line.find(',', start);
      REQUIRE(start != std::string::npos);
      ++start;
    }
    std::size_t end = line.find(',', start);
    out.push_back(line.substr(start, end == std::string::npos ? std::string::npos
                                                              : end - start));
  }
  return out;
}

const fs::path& sim_csv() {
  static const fs::path p = [] {
    const fs::path path = g_work / "sim.csv";
    const RunResult r =
        run("simulate --seed 4242 --n 400 --out " + path.string());
    REQUIRE(r.code == 0);
    return path;
  }();
  return p;
}

const fs::path& fitted_dir() {
  static const fs::path p = [] {
    const fs::path dir = g_work / "fit_main";
    const RunResult r = run(
        "fit --data " + sim_csv().string() +
        " --formula \"log(UP) ~ log(AR) + YR06 + cs(LAT, df=6) | sigma: ST\""
        " --family NO --out " +
        dir.string());
    REQUIRE(r.code == 0);
    return dir;
  }();
  return p;
}

} // namespace

TEST_CASE("simulate is seed-deterministic and honors GAMLSS_SEED") {
  const fs::path a = g_work / "sim_a.csv";
  const fs::path b = g_work / "sim_b.csv";
  const fs::path c = g_work / "sim_c.csv";

  CHECK(run("simulate --seed 123 --n 120 --out " + a.string()).code == 0);
  CHECK(run("simulate --seed 123 --n 120 --out " + b.string()).code == 0);
  CHECK(slurp(a) == slurp(b));

  // environment fallback picks the same stream
  CHECK(run("simulate --n 120 --out " + c.string(), "GAMLSS_SEED=123 ").code ==
        0);
  CHECK(slurp(a) == slurp(c));

  // a different seed changes the data
  const fs::path d = g_work / "sim_d.csv";
  CHECK(run("simulate --seed 124 --n 120 --out " + d.string()).code == 0);
  CHECK(slurp(a) != slurp(d));

  // no seed anywhere is an error that leaves stdout empty
  const RunResult bad = run("simulate --n 120 --out " + d.string(),
                            "env -u GAMLSS_SEED ");
  CHECK(bad.code == 1);
  CHECK(bad.out.empty());
  CHECK(bad.err.find("seed") != std::string::npos);

  // malformed environment seed is rejected
  const RunResult junk = run("simulate --n 120 --out " + d.string(),
                             "GAMLSS_SEED=not_a_number ");
  CHECK(junk.code == 1);
  CHECK(junk.err.find("GAMLSS_SEED") != std::string::npos);
}

TEST_CASE("fit writes tables, a model file, residuals and a worm plot") {
  const fs::path& dir = fitted_dir();
  CHECK(fs::exists(dir / "coefficients.txt"));
  CHECK(fs::exists(dir / "criteria.txt"));
  CHECK(fs::exists(dir / "model.json"));
  CHECK(fs::exists(dir / "residuals.csv"));
  CHECK(fs::exists(dir / "worm.svg"));

  const std::string coef = slurp(dir / "coefficients.txt");
  CHECK(coef.find("(Intercept)") != std::string::npos);
  CHECK(coef.find("log(AR)") != std::string::npos);
  CHECK(coef.find("cs(LAT)") != std::string::npos);
  CHECK(coef.find("sigma") != std::string::npos);

  const std::string crit = slurp(dir / "criteria.txt");
  CHECK(crit.find("global deviance") != std::string::npos);
  CHECK(crit.find("AIC") != std::string::npos);
  CHECK(crit.find("converged         yes") != std::string::npos);

  const auto model = nlohmann::json::parse(slurp(dir / "model.json"));
  CHECK(model.at("format_version") == 1);
  CHECK(model.at("kind") == "gamlss_fitted_model");
  CHECK(model.at("converged").get<bool>());

  const std::string resid = slurp(dir / "residuals.csv");
  CHECK(csv_column(resid, 0).size() == 400);
  CHECK(resid.rfind("row,fitted_mu,fitted_sigma,u,residual\n", 0) == 0);

  const std::string svg = slurp(dir / "worm.svg");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
}

TEST_CASE("fit output is byte-identical across reruns") {
  const fs::path dir_b = g_work / "fit_rerun";
  const RunResult r = run(
      "fit --data " + sim_csv().string() +
      " --formula \"log(UP) ~ log(AR) + YR06 + cs(LAT, df=6) | sigma: ST\""
      " --family NO --out " +
      dir_b.string());
  REQUIRE(r.code == 0);
  for (const char* f : {"coefficients.txt", "criteria.txt", "model.json",
                        "residuals.csv", "worm.svg"}) {
    CAPTURE(f);
    CHECK(slurp(fitted_dir() / f) == slurp(dir_b / f));
  }
}

TEST_CASE("predict reproduces the fitted values exactly") {
  const fs::path pred = g_work / "pred.csv";
  const RunResult r = run("predict --model " +
                          (fitted_dir() / "model.json").string() + " --data " +
                          sim_csv().string() + " --which mu --out " +
                          pred.string());
  REQUIRE(r.code == 0);

  const auto fitted = csv_column(slurp(fitted_dir() / "residuals.csv"), 1);
  const auto predicted = csv_column(slurp(pred), 1);
  REQUIRE(fitted.size() == predicted.size());
  // textual comparison: both sides are %.17g renderings of the same doubles
  CHECK(fitted == predicted);

  const fs::path pred_sigma = g_work / "pred_sigma.csv";
  REQUIRE(run("predict --model " + (fitted_dir() / "model.json").string() +
              " --data " + sim_csv().string() + " --which sigma --out " +
              pred_sigma.string())
              .code == 0);
  CHECK(csv_column(slurp(fitted_dir() / "residuals.csv"), 2) ==
        csv_column(slurp(pred_sigma), 1));
}

TEST_CASE("errors exit with code 1, write to stderr and keep stdout empty") {
  SUBCASE("unknown formula function, with caret position") {
    const fs::path dir = g_work / "should_not_exist";
    const RunResult r =
        run("fit --data " + sim_csv().string() +
            " --formula \"log(UP) ~ spline(LAT)\" --family NO --out " +
            dir.string());
    CHECK(r.code == 1);
    CHECK(r.out.empty());
    CHECK(r.err.find("unknown function 'spline'") != std::string::npos);
    CHECK(r.err.find('^') != std::string::npos);
    CHECK_FALSE(fs::exists(dir / "coefficients.txt"));
  }
  SUBCASE("missing data file") {
    const RunResult r =
        run("fit --data /nonexistent.csv --formula \"UP ~ 1\" --family NO "
            "--out " +
            (g_work / "x").string());
    CHECK(r.code == 1);
    CHECK(r.out.empty());
    CHECK_FALSE(r.err.empty());
  }
  SUBCASE("unknown variable in the formula") {
    const RunResult r = run("fit --data " + sim_csv().string() +
                            " --formula \"log(UP) ~ NOPE\" --family NO --out " +
                            (g_work / "x2").string());
    CHECK(r.code == 1);
    CHECK(r.err.find("unknown variable 'NOPE'") != std::string::npos);
  }
  SUBCASE("bad --which") {
    const RunResult r = run("predict --model " +
                            (fitted_dir() / "model.json").string() +
                            " --data " + sim_csv().string() +
                            " --which nu --out " + (g_work / "p.csv").string());
    CHECK(r.code == 1);
    CHECK(r.err.find("--which") != std::string::npos);
  }
  SUBCASE("missing model file") {
    const RunResult r =
        run("diagnose --model /nonexistent/model.json --data " +
            sim_csv().string() + " --out " + (g_work / "d").string());
    CHECK(r.code == 1);
    CHECK(r.out.empty());
  }
  SUBCASE("bad family name") {
    const RunResult r = run("fit --data " + sim_csv().string() +
                            " --formula \"UP ~ 1\" --family ZZ --out " +
                            (g_work / "x3").string());
    CHECK(r.code == 1);
    CHECK_FALSE(r.err.empty());
  }
}

TEST_CASE("diagnose writes reports, plots and binned worm panels") {
  const fs::path dir = g_work / "diag";
  const RunResult r =
      run("diagnose --model " + (fitted_dir() / "model.json").string() +
          " --data " + sim_csv().string() + " --out " + dir.string() +
          " --worm-by ST --bins 3");
  REQUIRE(r.code == 0);
  CHECK(r.out.find("KS statistic") != std::string::npos);
  CHECK(r.out.find("pseudo-R2") != std::string::npos);

  for (const char* f :
       {"diagnostics.json", "diagnostics.txt", "residuals.csv",
        "residual_index.svg", "worm.svg", "worm_by_ST_bin1.svg",
        "worm_by_ST_bin2.svg", "worm_by_ST_bin3.svg"}) {
    CAPTURE(f);
    CHECK(fs::exists(dir / f));
  }

  const auto doc = nlohmann::json::parse(slurp(dir / "diagnostics.json"));
  CHECK(doc.contains("criteria"));
  CHECK(doc.contains("residuals"));
  CHECK(doc.contains("ks"));
  CHECK(doc.contains("pseudo_r2"));
  CHECK(doc.at("criteria").at("n") == 400);

  // the text report matches what was printed
  CHECK(slurp(dir / "diagnostics.txt") == r.out);
}

TEST_CASE("compare ranks fits, audits reported rows and runs LR tests") {
  // reported rows: one arithmetically impossible, one self-consistent
  // (df 5 at n = 400: BIC = 1000 + 5 ln 400 = 1029.96)
  const fs::path spec = g_work / "compare_spec.json";
  {
    std::ofstream os(spec);
    os << R"json({
  "format_version": 1,
  "n": 400,
  "models": [
    {"name": "lin", "class": "gamlss", "family": "NO",
     "formula": "log(UP) ~ log(AR) + YR06"},
    {"name": "smooth", "class": "gamlss", "family": "NO",
     "formula": "log(UP) ~ log(AR) + YR06 + cs(LAT, df=6)"},
    {"name": "ols", "class": "cnlrm", "formula": "log(UP) ~ log(AR) + YR06"},
    {"name": "bc", "class": "cnlrm", "box_cox": true,
     "formula": "UP ~ log(AR) + YR06"},
    {"name": "glm", "class": "glm", "family": "GA",
     "formula": "UP ~ log(AR) + YR06"},
    {"name": "bad-report", "class": "reported", "scale": "log(UP)",
     "gd": 1000.0, "aic": 990.0, "bic": 1030.0},
    {"name": "good-report", "class": "reported", "scale": "log(UP)",
     "gd": 1000.0, "aic": 1010.0, "bic": 1030.0}
  ]
})json";
  }
  const fs::path out = g_work / "cmp";
  const RunResult r = run("compare --data " + sim_csv().string() + " --spec " +
                          spec.string() + " --out " + out.string());
  REQUIRE(r.code == 0);

  // ranking: the smooth model fits best and leads the table
  const std::size_t pos_smooth = r.out.find("\nsmooth");
  const std::size_t pos_lin = r.out.find("\nlin");
  REQUIRE(pos_smooth != std::string::npos);
  REQUIRE(pos_lin != std::string::npos);
  CHECK(pos_smooth < pos_lin);

  // reported rows are audited
  CHECK(r.out.find("audit of reported criteria:") != std::string::npos);
  CHECK(r.out.find("bad-report: impossible: AIC") != std::string::npos);
  CHECK(r.out.find("good-report: self-consistent") != std::string::npos);

  // scale groups are spelled out
  CHECK(r.out.find("comparable only within a scale group") !=
        std::string::npos);
  CHECK(r.out.find("boxcox(UP)") != std::string::npos);

  // nested gamlss pair gets a likelihood-ratio test
  CHECK(r.out.find("likelihood-ratio tests") != std::string::npos);
  CHECK(r.out.find("lin vs smooth:") != std::string::npos);

  // the OLS and NO-gamlss rows agree (same model, two engines)
  CHECK(fs::exists(out / "compare.txt"));
  CHECK(slurp(out / "compare.txt") == r.out);

  const auto doc = nlohmann::json::parse(slurp(out / "compare.json"));
  CHECK(doc.at("format_version") == 1);
  CHECK(doc.at("models").size() == 7);
  REQUIRE(doc.at("lr_tests").size() >= 1);
  CHECK(doc.at("lr_tests")[0].at("smaller") == "lin");
  // audit flags also land in the JSON
  bool found_impossible = false;
  for (const auto& m : doc.at("models")) {
    if (m.contains("audit")) {
      for (const auto& a : m.at("audit")) {
        if (a.get<std::string>().find("impossible") != std::string::npos) {
          found_impossible = true;
        }
      }
    }
  }
  CHECK(found_impossible);
}

TEST_CASE("an iteration-capped fit exits 2 but still writes its outputs") {
  const fs::path dir = g_work / "fit_capped";
  const RunResult r = run(
      "fit --data " + sim_csv().string() +
      " --formula \"log(UP) ~ log(AR) + YR06 + cs(LAT, df=6) | sigma: ST\""
      " --family NO --max-outer 1 --tol 1e-12 --out " +
      dir.string());
  CHECK(r.code == 2);
  CHECK(fs::exists(dir / "coefficients.txt"));
  CHECK(fs::exists(dir / "model.json"));
  CHECK(r.out.find("converged         NO") != std::string::npos);

  const auto model = nlohmann::json::parse(slurp(dir / "model.json"));
  CHECK_FALSE(model.at("converged").get<bool>());
}

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: %s <path-to-cli-binary> [doctest args]\n",
                 argv[0]);
    return 1;
  }
  g_cli = argv[1];
  g_work = fs::temp_directory_path() / "gamlss_cli_tests";
  fs::remove_all(g_work);
  fs::create_directories(g_work);

  doctest::Context ctx;
  ctx.applyCommandLine(argc - 1, argv + 1);
  const int rc = ctx.run();
  fs::remove_all(g_work);
  return rc;
}

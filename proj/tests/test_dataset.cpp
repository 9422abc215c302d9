#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "gamlss/dataset.hpp"
#include "gamlss/error.hpp"

using namespace gamlss;

namespace {

const char* kHeader = "UP,AR,FR,LAT,LON,UC,ST,TO,PA,SI,VN,SZ,STR,NI,YR";

std::string small_csv() {
  std::string s = std::string(kHeader) + "\n";
  s += "25.5,1200,14.2,702000,8770000,4.5,3,1,0,0,1,0,0,1,2005\n";
  s += "12.0,850,8.0,705000,8775000,3.0,11,0,1,0,0,1,1,0,2006\n";
  s += "230.75,15000,120,711000,8790000,6.0,18,1,1,1,1,1,2,2,2007\n";
  return s;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& p) : path(p) {}
  ~TempFile() { std::remove(path.c_str()); }
};

} // namespace

TEST_CASE("well-formed 3-row file loads with n=3") {
  TempFile f("tmp_ds_basic.csv");
  write_file(f.path, small_csv());
  const Dataset ds = load_csv(f.path, SchemaSpec::hedonic());
  CHECK(ds.n == 3);
  CHECK(ds.dropped_rows == 0);
  CHECK(ds.provenance == f.path);
  CHECK(ds.column("UP")[0] == doctest::Approx(25.5));
  CHECK(ds.column("YR")[2] == doctest::Approx(2007.0));
  CHECK(ds.column("ST")[1] == doctest::Approx(11.0));
}

TEST_CASE("missing required column is named in the error") {
  TempFile f("tmp_ds_noup.csv");
  std::string s = "AR,FR,LAT,LON,UC,ST,TO,PA,SI,VN,SZ,STR,NI,YR\n";
  s += "1200,14.2,702000,8770000,4.5,3,1,0,0,1,0,0,1,2005\n";
  write_file(f.path, s);
  CHECK_THROWS_WITH_AS((void)load_csv(f.path, SchemaSpec::hedonic()),
                       doctest::Contains("UP"), SchemaError);
}

TEST_CASE("empty file and missing file raise errors") {
  TempFile f("tmp_ds_empty.csv");
  write_file(f.path, "");
  CHECK_THROWS_AS((void)load_csv(f.path, SchemaSpec::hedonic()), SchemaError);
  CHECK_THROWS_AS((void)load_csv("tmp_ds_does_not_exist.csv", SchemaSpec::hedonic()),
                  SchemaError);
}

TEST_CASE("unparseable cell reports row and column") {
  TempFile f("tmp_ds_badcell.csv");
  std::string s = small_csv();
  s += "oops,850,8.0,705000,8775000,3.0,11,0,1,0,0,1,1,0,2006\n";
  write_file(f.path, s);
  CHECK_THROWS_WITH_AS((void)load_csv(f.path, SchemaSpec::hedonic()),
                       doctest::Contains("UP"), SchemaError);
}

TEST_CASE("rows with missing cells are dropped and counted") {
  TempFile f("tmp_ds_missing.csv");
  std::string s = small_csv();
  s += "NA,850,8.0,705000,8775000,3.0,11,0,1,0,0,1,1,0,2006\n";
  s += "14.0,,8.0,705000,8775000,3.0,11,0,1,0,0,1,1,0,2006\n";
  write_file(f.path, s);
  const Dataset ds = load_csv(f.path, SchemaSpec::hedonic());
  CHECK(ds.n == 3);
  CHECK(ds.dropped_rows == 2);
}

TEST_CASE("schema kinds are enforced with row numbers") {
  SUBCASE("nonpositive UP") {
    TempFile f("tmp_ds_badup.csv");
    std::string s = small_csv();
    s += "-3,850,8.0,705000,8775000,3.0,11,0,1,0,0,1,1,0,2006\n";
    write_file(f.path, s);
    CHECK_THROWS_WITH_AS((void)load_csv(f.path, SchemaSpec::hedonic()),
                         doctest::Contains("row 4"), SchemaError);
  }
  SUBCASE("UC off the half-step grid") {
    TempFile f("tmp_ds_baduc.csv");
    std::string s = small_csv();
    s += "10,850,8.0,705000,8775000,4.2,11,0,1,0,0,1,1,0,2006\n";
    write_file(f.path, s);
    CHECK_THROWS_WITH_AS((void)load_csv(f.path, SchemaSpec::hedonic()),
                         doctest::Contains("UC"), SchemaError);
  }
  SUBCASE("binary column with a 2") {
    TempFile f("tmp_ds_badto.csv");
    std::string s = small_csv();
    s += "10,850,8.0,705000,8775000,4.5,11,2,1,0,0,1,1,0,2006\n";
    write_file(f.path, s);
    CHECK_THROWS_WITH_AS((void)load_csv(f.path, SchemaSpec::hedonic()),
                         doctest::Contains("TO"), SchemaError);
  }
  SUBCASE("YR outside the study window") {
    TempFile f("tmp_ds_badyr.csv");
    std::string s = small_csv();
    s += "10,850,8.0,705000,8775000,4.5,11,1,1,0,0,1,1,0,2004\n";
    write_file(f.path, s);
    CHECK_THROWS_WITH_AS((void)load_csv(f.path, SchemaSpec::hedonic()),
                         doctest::Contains("YR"), SchemaError);
  }
}

TEST_CASE("write then load round-trips all values bit-exactly") {
  TempFile f("tmp_ds_rt1.csv");
  TempFile g("tmp_ds_rt2.csv");
  std::string s = small_csv();
  // values with awkward binary representations
  s += "0.1,48.000000001,2.6,701500.25,8769000.125,5.5,7,0,0,1,1,0,2,1,2005\n";
  write_file(f.path, s);
  const Dataset a = load_csv(f.path, SchemaSpec::hedonic());
  write_csv(g.path, a);
  const Dataset b = load_csv(g.path, SchemaSpec::hedonic());
  REQUIRE(a.n == b.n);
  REQUIRE(a.names == b.names);
  for (std::size_t c = 0; c < a.columns.size(); ++c) {
    for (Index i = 0; i < a.n; ++i) {
      CHECK(a.columns[c][i] == b.columns[c][i]); // bitwise equality
    }
  }
}

TEST_CASE("optional non-numeric column passes through") {
  TempFile f("tmp_ds_nb.csv");
  std::string s = std::string(kHeader) + ",NB\n";
  s += "25.5,1200,14.2,702000,8770000,4.5,3,1,0,0,1,0,0,1,2005,Atalaia\n";
  s += "12.0,850,8.0,705000,8775000,3.0,11,0,1,0,0,1,1,0,2006,Centro\n";
  s += "230.75,15000,120,711000,8790000,6.0,18,1,1,1,1,1,2,2,2007,Jardins\n";
  write_file(f.path, s);
  const Dataset ds = load_csv(f.path, SchemaSpec::hedonic());
  CHECK(ds.n == 3);
  REQUIRE(ds.text_names.size() == 1);
  CHECK(ds.text_names[0] == "NB");
  CHECK(ds.text_columns[0][1] == "Centro");
  // and it round-trips
  TempFile g("tmp_ds_nb2.csv");
  write_csv(g.path, ds);
  const Dataset ds2 = load_csv(g.path, SchemaSpec::hedonic());
  CHECK(ds2.text_columns[0][2] == "Jardins");
}

TEST_CASE("derive_variables adds dummies and logs") {
  TempFile f("tmp_ds_derive.csv");
  write_file(f.path, small_csv());
  const Dataset ds = derive_variables(load_csv(f.path, SchemaSpec::hedonic()));
  // row 0: YR=2005 baseline -> both year dummies zero
  CHECK(ds.column("YR06")[0] == 0.0);
  CHECK(ds.column("YR07")[0] == 0.0);
  CHECK(ds.column("YR06")[1] == 1.0);
  CHECK(ds.column("YR07")[2] == 1.0);
  CHECK(ds.column("STR1")[1] == 1.0);
  CHECK(ds.column("STR2")[2] == 1.0);
  CHECK(ds.column("NIO")[0] == 1.0);
  CHECK(ds.column("NIT")[2] == 1.0);
  CHECK(ds.column("log(AR)")[0] == doctest::Approx(std::log(1200.0)).epsilon(1e-15));
  CHECK(ds.column("log(ST)")[1] == doctest::Approx(std::log(11.0)).epsilon(1e-15));
  CHECK(ds.column("log(UP)")[2] == doctest::Approx(std::log(230.75)).epsilon(1e-15));
  // interaction: row 1 has VN=0, FR=8 -> FRVN 0, log clamped to 0
  CHECK(ds.column("FRVN")[1] == 0.0);
  CHECK(ds.column("log(FRVN)")[1] == 0.0);
  // row 0 has VN=1, FR=14.2
  CHECK(ds.column("FRVN")[0] == doctest::Approx(14.2));
  CHECK(ds.column("log(FRVN)")[0] == doctest::Approx(std::log(14.2)).epsilon(1e-15));
}

TEST_CASE("log(FRVN) of a valuable lot with FR=10 is log 10") {
  Dataset ds;
  ds.n = 1;
  for (const char* name : {"YR", "STR", "NI", "ST"}) {
    ds.set_column(name, Vector::Constant(1, name[0] == 'Y' ? 2005.0 : 1.0));
  }
  ds.set_column("AR", Vector::Constant(1, 100.0));
  ds.set_column("UP", Vector::Constant(1, 10.0));
  ds.set_column("FR", Vector::Constant(1, 10.0));
  ds.set_column("VN", Vector::Constant(1, 1.0));
  const Dataset d = derive_variables(ds);
  CHECK(d.column("log(FRVN)")[0] == doctest::Approx(2.302585).epsilon(1e-6));
}

TEST_CASE("derive_variables is idempotent") {
  TempFile f("tmp_ds_idem.csv");
  write_file(f.path, small_csv());
  const Dataset once = derive_variables(load_csv(f.path, SchemaSpec::hedonic()));
  const Dataset twice = derive_variables(once);
  REQUIRE(once.names == twice.names);
  for (std::size_t c = 0; c < once.columns.size(); ++c) {
    for (Index i = 0; i < once.n; ++i) {
      CHECK(once.columns[c][i] == twice.columns[c][i]);
    }
  }
}

TEST_CASE("dummy families: at most one active, baselines all-zero") {
  TempFile f("tmp_ds_dummy.csv");
  write_file(f.path, small_csv());
  const Dataset ds = derive_variables(load_csv(f.path, SchemaSpec::hedonic()));
  for (Index i = 0; i < ds.n; ++i) {
    CHECK(ds.column("YR06")[i] + ds.column("YR07")[i] <= 1.0);
    CHECK(ds.column("STR1")[i] + ds.column("STR2")[i] <= 1.0);
    CHECK(ds.column("NIO")[i] + ds.column("NIT")[i] <= 1.0);
  }
  // row 0 is the all-baseline row for YR and STR
  CHECK(ds.column("YR06")[0] + ds.column("YR07")[0] == 0.0);
  CHECK(ds.column("STR1")[0] + ds.column("STR2")[0] == 0.0);
}

TEST_CASE("derive_variables rejects nonpositive AR/FR") {
  Dataset ds;
  ds.n = 1;
  ds.set_column("YR", Vector::Constant(1, 2005.0));
  ds.set_column("STR", Vector::Constant(1, 0.0));
  ds.set_column("NI", Vector::Constant(1, 0.0));
  ds.set_column("ST", Vector::Constant(1, 1.0));
  ds.set_column("UP", Vector::Constant(1, 10.0));
  ds.set_column("VN", Vector::Constant(1, 0.0));
  ds.set_column("AR", Vector::Constant(1, -5.0));
  ds.set_column("FR", Vector::Constant(1, 3.0));
  CHECK_THROWS_AS((void)derive_variables(ds), std::domain_error);
  ds.set_column("AR", Vector::Constant(1, 5.0));
  ds.set_column("FR", Vector::Constant(1, 0.0));
  CHECK_THROWS_AS((void)derive_variables(ds), std::domain_error);
}

TEST_CASE("describe: closed-form cases") {
  Dataset ds;
  ds.n = 4;
  Vector v{{1.0, 2.0, 3.0, 4.0}};
  ds.set_column("v", v);
  ds.set_column("c", Vector::Constant(4, 7.25));
  const auto rows = describe(ds, {"v", "c"});
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].mean == doctest::Approx(2.5));
  CHECK(rows[0].median == doctest::Approx(2.5));
  CHECK(rows[0].range == doctest::Approx(3.0));
  CHECK(rows[0].min == doctest::Approx(1.0));
  CHECK(rows[0].max == doctest::Approx(4.0));
  CHECK(rows[0].sd == doctest::Approx(std::sqrt(5.0 / 3.0)).epsilon(1e-12));
  CHECK(rows[1].mean == doctest::Approx(7.25));
  CHECK(rows[1].median == doctest::Approx(7.25));
  CHECK(rows[1].sd == doctest::Approx(0.0).scale(1.0));
  CHECK(rows[1].range == doctest::Approx(0.0).scale(1.0));
  CHECK_THROWS_AS((void)describe(ds, {}), std::invalid_argument);
}

TEST_CASE("describe matches an independent second-pass accumulation") {
  Dataset ds;
  ds.n = 101;
  Vector v(101);
  double x = 0.37;
  for (Index i = 0; i < 101; ++i) {
    x = 4.0 * 0.987 * x * (1.0 - x); // deterministic chaotic filler
    v[i] = 100.0 * x - 30.0;
  }
  ds.set_column("v", v);
  const auto rows = describe(ds, {"v"});
  // independent two-pass oracle
  double mean = 0.0;
  for (Index i = 0; i < v.size(); ++i) mean += v[i];
  mean /= static_cast<double>(v.size());
  double ss = 0.0, mn = v[0], mx = v[0];
  for (Index i = 0; i < v.size(); ++i) {
    ss += (v[i] - mean) * (v[i] - mean);
    mn = std::min(mn, v[i]);
    mx = std::max(mx, v[i]);
  }
  CHECK(rows[0].mean == doctest::Approx(mean).epsilon(1e-10));
  CHECK(rows[0].sd ==
        doctest::Approx(std::sqrt(ss / (static_cast<double>(v.size()) - 1)))
            .epsilon(1e-10));
  CHECK(rows[0].min == doctest::Approx(mn).epsilon(1e-12));
  CHECK(rows[0].max == doctest::Approx(mx).epsilon(1e-12));
}

TEST_CASE("unknown column access names the column") {
  Dataset ds;
  ds.n = 1;
  ds.set_column("a", Vector::Constant(1, 1.0));
  CHECK_THROWS_WITH_AS((void)ds.column("missing"), doctest::Contains("missing"),
                       SchemaError);
  CHECK_THROWS_AS(ds.set_column("b", Vector::Zero(3)), SchemaError);
}

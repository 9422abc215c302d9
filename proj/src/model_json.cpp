#include "gamlss/model_json.hpp"

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gamlss/error.hpp"

namespace gamlss {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr int kFormatVersion = 1;
constexpr const char* kKind = "gamlss_fitted_model";

ordered_json vector_to_json(const Vector& v) {
  ordered_json a = ordered_json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

ordered_json matrix_to_json(const Matrix& m) {
  ordered_json rows = ordered_json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Vector vector_from_json(const json& a, const std::string& where) {
  if (!a.is_array()) throw SchemaError("model JSON: " + where + " must be an array");
  Vector v(static_cast<Index>(a.size()));
  Index i = 0;
  for (const auto& x : a) {
    if (!x.is_number()) {
      throw SchemaError("model JSON: " + where + " holds a non-numeric entry");
    }
    v[i++] = x.get<double>();
  }
  return v;
}

Matrix matrix_from_json(const json& rows, const std::string& where) {
  if (!rows.is_array()) {
    throw SchemaError("model JSON: " + where + " must be an array of rows");
  }
  const Index r = static_cast<Index>(rows.size());
  if (r == 0) return Matrix(0, 0);
  const Index c = static_cast<Index>(rows.front().size());
  Matrix m(r, c);
  for (Index i = 0; i < r; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != c) {
      throw SchemaError("model JSON: " + where + " rows have uneven lengths");
    }
    for (Index j = 0; j < c; ++j) {
      m(i, j) = row[static_cast<std::size_t>(j)].get<double>();
    }
  }
  return m;
}

ordered_json submodel_to_json(const SubmodelFit& sm) {
  ordered_json j;
  j["link"] = link_name(sm.link);
  j["beta_names"] = sm.beta_names;
  j["beta"] = vector_to_json(sm.beta);
  j["se"] = vector_to_json(sm.se);
  j["z"] = vector_to_json(sm.z);
  j["p"] = vector_to_json(sm.p);
  j["vcov"] = matrix_to_json(sm.vcov);
  j["parametric_terms"] = sm.parametric_terms;
  ordered_json sterms = ordered_json::array();
  for (const SplineTerm& t : sm.spline_terms) {
    sterms.push_back({{"variable", t.variable}, {"extra_df", t.extra_df}});
  }
  j["spline_terms"] = std::move(sterms);
  ordered_json smoothers = ordered_json::array();
  for (const SmootherFit& sf : sm.smoother_fits) {
    ordered_json s;
    s["lambda"] = sf.lambda;
    s["edf"] = sf.edf;
    s["knots"] = vector_to_json(sf.knots);
    s["values"] = vector_to_json(sf.values);
    s["second_derivs"] = vector_to_json(sf.second_derivs);
    smoothers.push_back(std::move(s));
  }
  j["smoothers"] = std::move(smoothers);
  return j;
}

SubmodelFit submodel_from_json(const json& j, const std::string& label) {
  SubmodelFit sm;
  sm.link = link_from_name(j.at("link").get<std::string>());
  sm.beta_names = j.at("beta_names").get<std::vector<std::string>>();
  sm.beta = vector_from_json(j.at("beta"), label + ".beta");
  sm.se = vector_from_json(j.at("se"), label + ".se");
  sm.z = vector_from_json(j.at("z"), label + ".z");
  sm.p = vector_from_json(j.at("p"), label + ".p");
  sm.vcov = matrix_from_json(j.at("vcov"), label + ".vcov");
  sm.parametric_terms =
      j.at("parametric_terms").get<std::vector<std::string>>();
  for (const auto& t : j.at("spline_terms")) {
    SplineTerm st;
    st.variable = t.at("variable").get<std::string>();
    st.extra_df = t.at("extra_df").get<double>();
    sm.spline_terms.push_back(std::move(st));
  }
  for (const auto& s : j.at("smoothers")) {
    SmootherFit sf;
    sf.lambda = s.at("lambda").get<double>();
    sf.edf = s.at("edf").get<double>();
    sf.knots = vector_from_json(s.at("knots"), label + ".knots");
    sf.values = vector_from_json(s.at("values"), label + ".values");
    sf.second_derivs =
        vector_from_json(s.at("second_derivs"), label + ".second_derivs");
    if (sf.values.size() != sf.knots.size() ||
        sf.second_derivs.size() != sf.knots.size()) {
      throw SchemaError("model JSON: smoother blocks of " + label +
                        " have inconsistent lengths");
    }
    sm.smoother_fits.push_back(std::move(sf));
  }
  if (static_cast<Index>(sm.beta_names.size()) != sm.beta.size()) {
    throw SchemaError("model JSON: " + label +
                      " beta_names and beta lengths differ");
  }
  if (sm.smoother_fits.size() != sm.spline_terms.size()) {
    throw SchemaError("model JSON: " + label +
                      " smoother count does not match spline terms");
  }
  return sm;
}

} // namespace

std::string serialize_model(const FittedModel& fm) {
  ordered_json j;
  j["format_version"] = kFormatVersion;
  j["kind"] = kKind;
  j["family"] = family_name(fm.family);
  j["response"] = fm.response;
  j["n"] = fm.n;
  j["converged"] = fm.converged;
  j["iterations"] = fm.iterations;
  j["global_deviance"] = fm.global_deviance;
  j["df_total"] = fm.df_total;
  ordered_json ledger = ordered_json::array();
  for (const DfEntry& e : fm.df_ledger) {
    ledger.push_back(
        {{"parameter", e.parameter}, {"term", e.term}, {"df", e.df}});
  }
  j["df_ledger"] = std::move(ledger);
  ordered_json trace = ordered_json::array();
  for (double g : fm.gd_trace) trace.push_back(g);
  j["gd_trace"] = std::move(trace);
  j["mu"] = submodel_to_json(fm.mu);
  j["sigma"] = submodel_to_json(fm.sigma);
  return j.dump(2) + "\n";
}

FittedModel deserialize_model(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("model JSON does not parse: ") + e.what());
  }
  try {
    if (!j.is_object() || !j.contains("format_version")) {
      throw SchemaError("model JSON lacks a format_version field");
    }
    const int version = j.at("format_version").get<int>();
    if (version != kFormatVersion) {
      throw SchemaError("model JSON format_version " +
                        std::to_string(version) + " is not supported (want " +
                        std::to_string(kFormatVersion) + ")");
    }
    if (j.value("kind", std::string()) != kKind) {
      throw SchemaError("model JSON kind is not '" + std::string(kKind) + "'");
    }
    FittedModel fm;
    fm.family = family_from_name(j.at("family").get<std::string>());
    fm.response = j.at("response").get<std::string>();
    fm.n = j.at("n").get<Index>();
    fm.converged = j.at("converged").get<bool>();
    fm.iterations = j.at("iterations").get<int>();
    fm.global_deviance = j.at("global_deviance").get<double>();
    fm.df_total = j.at("df_total").get<double>();
    for (const auto& e : j.at("df_ledger")) {
      fm.df_ledger.push_back({e.at("parameter").get<std::string>(),
                              e.at("term").get<std::string>(),
                              e.at("df").get<double>()});
    }
    for (const auto& g : j.at("gd_trace")) fm.gd_trace.push_back(g.get<double>());
    fm.mu = submodel_from_json(j.at("mu"), "mu");
    fm.sigma = submodel_from_json(j.at("sigma"), "sigma");
    return fm;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("model JSON is malformed: ") + e.what());
  }
}

void save_model(const std::string& path, const FittedModel& fm) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot open file '" + path + "' for writing");
  out << serialize_model(fm);
  if (!out) throw SchemaError("failed writing '" + path + "'");
}

FittedModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_model(buf.str());
}

} // namespace gamlss

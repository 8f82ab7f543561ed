#include "robustssm/scenario_io.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace robustssm {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

int line_of_offset(const std::string& text, size_t offset) {
  return 1 + static_cast<int>(std::count(text.begin(),
                                         text.begin() + static_cast<long>(std::min(offset, text.size())),
                                         '\n'));
}

void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                    const std::string& where) {
  for (const auto& item : obj.items())
    if (!allowed.count(item.key()))
      fail("unknown key \"" + item.key() + "\" in " + where);
}

double number_field(const json& obj, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number()) fail(std::string(key) + " must be a number");
  return obj[key].get<double>();
}

int int_field(const json& obj, const char* key, int fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number_integer()) fail(std::string(key) + " must be an integer");
  return obj[key].get<int>();
}

Vec vec_field(const json& obj, const char* key) {
  // Accepts a scalar (broadcast) or an array of numbers.
  const json& v = obj[key];
  if (v.is_number()) {
    Vec out(1);
    out(0) = v.get<double>();
    return out;
  }
  if (!v.is_array()) fail(std::string(key) + " must be a number or an array");
  Vec out(static_cast<Eigen::Index>(v.size()));
  for (size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) fail(std::string(key) + " entries must be numbers");
    out(static_cast<Eigen::Index>(i)) = v[i].get<double>();
  }
  return out;
}

}  // namespace

Scenario scenario_from_text(const std::string& text) {
  Scenario sc;
  const bool blank = std::all_of(text.begin(), text.end(),
                                 [](unsigned char c) { return std::isspace(c); });
  if (blank) {
    sc.validate();
    return sc;
  }

  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail("scenario parse error at line " + std::to_string(line_of_offset(text, e.byte)) +
         ": " + e.what());
  }
  if (!doc.is_object()) fail("scenario document must be an object");

  reject_unknown(doc, {"schema_version", "sensors", "lambda", "gamma", "horizon",
                       "mc_runs", "seed", "estimators", "outlier_dist",
                       "bcrb_trajectories", "ut", "em", "tracking", "out_dir"},
                 "scenario");

  sc.schema_version = int_field(doc, "schema_version", sc.schema_version);
  sc.sensors = int_field(doc, "sensors", sc.sensors);
  sc.lambda = number_field(doc, "lambda", sc.lambda);
  sc.gamma = number_field(doc, "gamma", sc.gamma);
  sc.horizon = int_field(doc, "horizon", sc.horizon);
  sc.mc_runs = int_field(doc, "mc_runs", sc.mc_runs);
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned() && !doc["seed"].is_number_integer())
      fail("seed must be an integer");
    sc.seed = doc["seed"].get<std::uint64_t>();
  }
  if (doc.contains("estimators")) {
    if (!doc["estimators"].is_array()) fail("estimators must be an array");
    sc.estimators.clear();
    for (const auto& e : doc["estimators"]) {
      if (!e.is_string()) fail("estimators entries must be strings");
      sc.estimators.push_back(e.get<std::string>());
    }
  }
  if (doc.contains("outlier_dist")) {
    if (!doc["outlier_dist"].is_string()) fail("outlier_dist must be a string");
    sc.outlier_dist = doc["outlier_dist"].get<std::string>();
  }
  sc.bcrb_trajectories = int_field(doc, "bcrb_trajectories", sc.bcrb_trajectories);
  if (doc.contains("out_dir")) {
    if (!doc["out_dir"].is_string()) fail("out_dir must be a string");
    sc.out_dir = doc["out_dir"].get<std::string>();
  }

  if (doc.contains("ut")) {
    const json& ut = doc["ut"];
    if (!ut.is_object()) fail("ut must be an object");
    reject_unknown(ut, {"alpha", "beta", "kappa"}, "ut");
    sc.ut.alpha = number_field(ut, "alpha", sc.ut.alpha);
    sc.ut.beta = number_field(ut, "beta", sc.ut.beta);
    sc.ut.kappa = number_field(ut, "kappa", sc.ut.kappa);
  }
  if (doc.contains("em")) {
    const json& em = doc["em"];
    if (!em.is_object()) fail("em must be an object");
    reject_unknown(em, {"epsilon", "theta", "tol", "max_iter", "max_outer_iter",
                        "warm_start_indicators"},
                   "em");
    sc.em.epsilon = number_field(em, "epsilon", sc.em.epsilon);
    if (em.contains("theta")) sc.em.theta = vec_field(em, "theta");
    sc.em.tol = number_field(em, "tol", sc.em.tol);
    sc.em.max_iter = int_field(em, "max_iter", sc.em.max_iter);
    sc.em.max_outer_iter = int_field(em, "max_outer_iter", sc.em.max_outer_iter);
    if (em.contains("warm_start_indicators")) {
      if (!em["warm_start_indicators"].is_boolean())
        fail("warm_start_indicators must be a boolean");
      sc.em.warm_start_indicators = em["warm_start_indicators"].get<bool>();
    }
  }
  if (doc.contains("tracking")) {
    const json& tr = doc["tracking"];
    if (!tr.is_object()) fail("tracking must be an object");
    reject_unknown(tr, {"zeta", "eta1", "eta2", "sigma2", "spacing"}, "tracking");
    sc.tracking.zeta = number_field(tr, "zeta", sc.tracking.zeta);
    sc.tracking.eta1 = number_field(tr, "eta1", sc.tracking.eta1);
    sc.tracking.eta2 = number_field(tr, "eta2", sc.tracking.eta2);
    sc.tracking.spacing = number_field(tr, "spacing", sc.tracking.spacing);
    if (tr.contains("sigma2")) {
      const Vec s2 = vec_field(tr, "sigma2");
      sc.tracking.sigma2.assign(s2.data(), s2.data() + s2.size());
    }
  }

  sc.validate();
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("scenario not found: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return scenario_from_text(buf.str());
  } catch (const std::invalid_argument& e) {
    fail(path + ": " + e.what());
  }
}

std::string scenario_to_text(const Scenario& sc) {
  json doc;
  doc["schema_version"] = sc.schema_version;
  doc["sensors"] = sc.sensors;
  doc["lambda"] = sc.lambda;
  doc["gamma"] = sc.gamma;
  doc["horizon"] = sc.horizon;
  doc["mc_runs"] = sc.mc_runs;
  doc["seed"] = sc.seed;
  doc["estimators"] = sc.estimators;
  doc["outlier_dist"] = sc.outlier_dist;
  doc["bcrb_trajectories"] = sc.bcrb_trajectories;
  doc["out_dir"] = sc.out_dir;
  doc["ut"] = {{"alpha", sc.ut.alpha}, {"beta", sc.ut.beta}, {"kappa", sc.ut.kappa}};
  json em = {{"epsilon", sc.em.epsilon},
             {"tol", sc.em.tol},
             {"max_iter", sc.em.max_iter},
             {"max_outer_iter", sc.em.max_outer_iter},
             {"warm_start_indicators", sc.em.warm_start_indicators}};
  if (sc.em.theta.size() > 0)
    em["theta"] = std::vector<double>(sc.em.theta.data(), sc.em.theta.data() + sc.em.theta.size());
  doc["em"] = em;
  json tracking = {{"zeta", sc.tracking.zeta},
                   {"eta1", sc.tracking.eta1},
                   {"eta2", sc.tracking.eta2},
                   {"spacing", sc.tracking.spacing}};
  if (!sc.tracking.sigma2.empty()) tracking["sigma2"] = sc.tracking.sigma2;
  doc["tracking"] = tracking;
  return doc.dump(2) + "\n";
}

}  // namespace robustssm

#include "hamchain/json_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "hamchain/errors.hpp"

using nlohmann::json;

namespace hamchain {

namespace {

json vec_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (long i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::VectorXd vec_from_json(const json& a) {
  if (!a.is_array()) throw ConfigError("json: expected an array of numbers");
  Eigen::VectorXd v(a.size());
  for (size_t i = 0; i < a.size(); ++i) v[static_cast<long>(i)] = a[i].get<double>();
  return v;
}

// column-per-entry layout: [[u at step 0], [u at step 1], ...]
json cols_to_json(const Eigen::MatrixXd& m) {
  json a = json::array();
  for (long c = 0; c < m.cols(); ++c) a.push_back(vec_to_json(m.col(c)));
  return a;
}

Eigen::MatrixXd cols_from_json(const json& a, long expected_rows) {
  if (!a.is_array()) throw ConfigError("json: expected an array of vectors");
  const long cols = static_cast<long>(a.size());
  Eigen::MatrixXd m(expected_rows, cols);
  for (long c = 0; c < cols; ++c) {
    Eigen::VectorXd v = vec_from_json(a[static_cast<size_t>(c)]);
    if (v.size() != expected_rows) throw ConfigError("json: inconsistent vector length");
    m.col(c) = v;
  }
  return m;
}

json snippet_to_json(const ControlSnippet& sn) {
  return json{{"dt_u", sn.dt_u}, {"duration", sn.duration}, {"values", cols_to_json(sn.values)}};
}

ControlSnippet snippet_from_json(const json& j, long input_dim) {
  ControlSnippet sn;
  sn.dt_u = j.at("dt_u").get<double>();
  sn.duration = j.at("duration").get<double>();
  sn.values = cols_from_json(j.at("values"), input_dim);
  if (!(sn.dt_u > 0.0)) throw ConfigError("snippet: dt_u must be positive");
  const double want = static_cast<double>(sn.steps()) * sn.dt_u;
  if (std::abs(want - sn.duration) > 1e-9 * std::max(1.0, sn.duration))
    throw ConfigError("snippet: duration does not match values * dt_u");
  return sn;
}

json parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return j;
}

void dump_file(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << j.dump() << '\n';
  if (!out) throw ConfigError("write failed: " + path);
}

}  // namespace

json assignment_set_to_json(const AssignmentSet& set) {
  if (set.alphabet.empty()) throw ConfigError("assignment set has no default snippet");
  json triples = json::array();
  for (const auto& tr : set.triples) {
    if (tr.snippet <= 0 || tr.snippet >= static_cast<int>(set.alphabet.size()))
      throw ConfigError("triple references a snippet outside the alphabet");
    triples.push_back(json{{"center", vec_to_json(tr.center)},
                           {"radius", tr.radius},
                           {"snippet", snippet_to_json(set.alphabet[tr.snippet])}});
  }
  return json{{"version", 1},
              {"system_id", set.system_id},
              {"v0", set.v0},
              {"input_dim", set.alphabet[0].values.rows()},
              {"dt_u", set.alphabet[0].dt_u},
              {"default_duration", set.alphabet[0].duration},
              {"triples", std::move(triples)}};
}

AssignmentSet assignment_set_from_json(const json& j) {
  if (j.at("version").get<int>() != 1) throw ConfigError("assignment set: unknown version");
  AssignmentSet set;
  set.system_id = j.at("system_id").get<std::string>();
  set.v0 = j.at("v0").get<double>();
  const double dt_u = j.at("dt_u").get<double>();
  const double default_duration = j.at("default_duration").get<double>();
  if (!(dt_u > 0.0) || !(default_duration > 0.0))
    throw ConfigError("assignment set: bad default snippet parameters");

  const long input_dim = j.at("input_dim").get<long>();
  if (input_dim <= 0) throw ConfigError("assignment set: bad input_dim");

  ControlSnippet dflt;
  dflt.dt_u = dt_u;
  dflt.duration = default_duration;
  const int steps = static_cast<int>(std::llround(default_duration / dt_u));
  dflt.values = Eigen::MatrixXd::Zero(input_dim, steps);
  set.alphabet.push_back(std::move(dflt));

  for (const auto& tj : j.at("triples")) {
    AssignmentTriple tr;
    tr.center = vec_from_json(tj.at("center"));
    tr.radius = tj.at("radius").get<double>();
    if (!(tr.radius > 0.0)) throw ConfigError("assignment set: non-positive radius");
    set.alphabet.push_back(snippet_from_json(tj.at("snippet"), input_dim));
    tr.snippet = static_cast<int>(set.alphabet.size()) - 1;
    set.triples.push_back(std::move(tr));
  }
  return set;
}

void save_assignment_set(const AssignmentSet& set, const std::string& path) {
  dump_file(assignment_set_to_json(set), path);
}

AssignmentSet load_assignment_set(const std::string& path) {
  return assignment_set_from_json(parse_file(path));
}

json demonstration_to_json(const Demonstration& demo, const std::string& system_id,
                           double dt) {
  return json{{"version", 1},
              {"system_id", system_id},
              {"x0", vec_to_json(demo.x0)},
              {"dt", dt},
              {"controls", cols_to_json(demo.controls)},
              {"duration", demo.duration}};
}

Demonstration demonstration_from_json(const SystemModel& model, const json& j,
                                      const TargetSpec* target) {
  if (j.at("version").get<int>() != 1) throw ConfigError("demonstration: unknown version");
  const std::string sys = j.at("system_id").get<std::string>();
  if (sys != model.id)
    throw ConfigError("demonstration was recorded on '" + sys + "', not '" + model.id + "'");
  Demonstration demo;
  demo.x0 = vec_from_json(j.at("x0"));
  const double dt = j.at("dt").get<double>();
  demo.controls = cols_from_json(j.at("controls"), model.input_dim);
  demo.duration = j.at("duration").get<double>();
  const double want = static_cast<double>(demo.controls.cols()) * dt;
  if (std::abs(want - demo.duration) > 1e-9 * std::max(1.0, demo.duration))
    throw ConfigError("demonstration: duration does not match controls * dt");
  demo.trajectory = simulate(model, demo.x0, demo.controls, dt);
  if (target)
    demo.terminal_dh = delta_h(model, *target, demo.trajectory.states.rightCols(1));
  return demo;
}

void save_demonstrations(const std::vector<Demonstration>& demos,
                         const std::string& system_id, double dt,
                         const std::string& path) {
  json arr = json::array();
  for (const auto& d : demos) arr.push_back(demonstration_to_json(d, system_id, dt));
  dump_file(json{{"version", 1}, {"demonstrations", std::move(arr)}}, path);
}

std::vector<Demonstration> load_demonstrations(const SystemModel& model,
                                               const std::string& path,
                                               const TargetSpec* target) {
  const json j = parse_file(path);
  if (j.at("version").get<int>() != 1) throw ConfigError("demonstrations: unknown version");
  std::vector<Demonstration> demos;
  for (const auto& dj : j.at("demonstrations"))
    demos.push_back(demonstration_from_json(model, dj, target));
  return demos;
}

json mlp_to_json(const MlpParams& p) {
  json layers = json::array();
  for (int l = 0; l < p.n_layers(); ++l) {
    json rows = json::array();
    for (long r = 0; r < p.w[l].rows(); ++r)
      rows.push_back(vec_to_json(p.w[l].row(r).transpose()));
    layers.push_back(json{{"w", std::move(rows)}, {"b", vec_to_json(p.b[l])}});
  }
  return json{{"version", 1},
              {"sizes", p.sizes},
              {"normalization", {{"mean", vec_to_json(p.in_mean)}, {"std", vec_to_json(p.in_std)}}},
              {"clamp", {{"lo", vec_to_json(p.out_lo)}, {"hi", vec_to_json(p.out_hi)}}},
              {"layers", std::move(layers)}};
}

MlpParams mlp_from_json(const json& j) {
  if (j.at("version").get<int>() != 1) throw ConfigError("policy parameters: unknown version");
  MlpParams p;
  p.sizes = j.at("sizes").get<std::vector<int>>();
  if (p.sizes.size() < 2) throw ConfigError("policy parameters: need at least two layer sizes");
  p.in_mean = vec_from_json(j.at("normalization").at("mean"));
  p.in_std = vec_from_json(j.at("normalization").at("std"));
  p.out_lo = vec_from_json(j.at("clamp").at("lo"));
  p.out_hi = vec_from_json(j.at("clamp").at("hi"));
  const auto& layers = j.at("layers");
  if (layers.size() + 1 != p.sizes.size())
    throw ConfigError("policy parameters: layer count does not match sizes");
  for (size_t l = 0; l < layers.size(); ++l) {
    const long rows = p.sizes[l + 1], cols = p.sizes[l];
    const auto& wj = layers[l].at("w");
    if (static_cast<long>(wj.size()) != rows)
      throw ConfigError("policy parameters: weight row count mismatch");
    Eigen::MatrixXd w(rows, cols);
    for (long r = 0; r < rows; ++r) {
      Eigen::VectorXd row = vec_from_json(wj[static_cast<size_t>(r)]);
      if (row.size() != cols) throw ConfigError("policy parameters: weight column mismatch");
      w.row(r) = row.transpose();
    }
    p.w.push_back(std::move(w));
    Eigen::VectorXd b = vec_from_json(layers[l].at("b"));
    if (b.size() != rows) throw ConfigError("policy parameters: bias length mismatch");
    p.b.push_back(std::move(b));
  }
  return p;
}

void save_mlp(const MlpParams& p, const std::string& path) { dump_file(mlp_to_json(p), path); }

MlpParams load_mlp(const std::string& path) { return mlp_from_json(parse_file(path)); }

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << text;
  if (!out) throw ConfigError("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace hamchain

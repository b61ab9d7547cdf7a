#include "trajinf/io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "json.hpp"
#include "trajinf/errors.hpp"

namespace trajinf::io {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

void write_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  const fs::path tmp = target.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorKind::Io, "write", "cannot open '" + path + "'");
    f << content;
    f.flush();
    if (!f) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw Error(ErrorKind::Io, "write", "short write to '" + path + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorKind::Io, "write", "cannot replace '" + path + "'");
  }
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::Io, "read", "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string format_double(double v) {
  if (!std::isfinite(v)) return "null";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string sidecar_path(const std::string& path) {
  return path + ".timings.json";
}

namespace {

// ---- writing ----------------------------------------------------------------

std::string quoted(const std::string& s) { return json(s).dump(); }

std::string opt(const std::optional<double>& v) {
  return v ? format_double(*v) : "null";
}

template <typename Vec>
std::string vec(const Vec& v) {
  std::string out = "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += format_double(v[i]);
  }
  return out + "]";
}

std::string mat(const MatrixXd& m) {
  std::string out = "[";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (i) out += ',';
    out += vec(VectorXd(m.row(i).transpose()));
  }
  return out + "]";
}

// Builds one flat record: {"k":v,...}.
class Record {
 public:
  Record& raw(const std::string& key, const std::string& value) {
    body_ += body_.empty() ? "{" : ",";
    body_ += quoted(key) + ":" + value;
    return *this;
  }
  Record& str(const std::string& key, const std::string& v) {
    return raw(key, quoted(v));
  }
  Record& num(const std::string& key, double v) {
    return raw(key, format_double(v));
  }
  Record& integer(const std::string& key, long long v) {
    return raw(key, std::to_string(v));
  }
  Record& boolean(const std::string& key, bool v) {
    return raw(key, v ? "true" : "false");
  }
  std::string line() const { return (body_.empty() ? "{" : body_) + "}\n"; }

 private:
  std::string body_;
};

// ---- reading ----------------------------------------------------------------

class Lines {
 public:
  Lines(const std::string& text, std::string stage)
      : stage_(std::move(stage)) {
    std::istringstream in(text);
    std::string line;
    int no = 0;
    while (std::getline(in, line)) {
      ++no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        records_.push_back({json::parse(line), no});
      } catch (const json::exception& e) {
        fail(no, std::string("malformed record: ") + e.what());
      }
    }
    if (records_.empty()) fail(0, "empty file");
  }

  [[noreturn]] void fail(int line, const std::string& msg) const {
    throw Error(ErrorKind::Data, stage_,
                "line " + std::to_string(line) + ": " + msg);
  }

  struct Item {
    json j;
    int line;
  };
  const std::vector<Item>& records() const { return records_; }

  const json& field(const Item& r, const char* key) const {
    if (!r.j.is_object() || !r.j.contains(key)) {
      fail(r.line, std::string("missing field '") + key + "'");
    }
    return r.j.at(key);
  }
  double num(const Item& r, const char* key) const {
    const json& v = field(r, key);
    if (!v.is_number()) fail(r.line, std::string("'") + key + "' not a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(r.line, std::string("'") + key + "' not finite");
    return d;
  }
  std::optional<double> opt_num(const Item& r, const char* key) const {
    if (!r.j.is_object() || !r.j.contains(key) || r.j.at(key).is_null()) {
      return std::nullopt;
    }
    return num(r, key);
  }
  long long integer(const Item& r, const char* key) const {
    const json& v = field(r, key);
    if (!v.is_number_integer()) {
      fail(r.line, std::string("'") + key + "' not an integer");
    }
    return v.get<long long>();
  }
  std::string str(const Item& r, const char* key) const {
    const json& v = field(r, key);
    if (!v.is_string()) fail(r.line, std::string("'") + key + "' not a string");
    return v.get<std::string>();
  }
  bool boolean(const Item& r, const char* key) const {
    const json& v = field(r, key);
    if (!v.is_boolean()) fail(r.line, std::string("'") + key + "' not a bool");
    return v.get<bool>();
  }
  MatrixXd matrix(const Item& r, const char* key, long rows, long cols) const {
    const json& v = field(r, key);
    if (!v.is_array() || static_cast<long>(v.size()) != rows) {
      fail(r.line, std::string("'") + key + "' has the wrong row count");
    }
    MatrixXd m(rows, cols);
    for (long i = 0; i < rows; ++i) {
      const json& row = v[i];
      if (!row.is_array() || static_cast<long>(row.size()) != cols) {
        fail(r.line, std::string("'") + key + "' has the wrong column count");
      }
      for (long j = 0; j < cols; ++j) {
        if (!row[j].is_number()) {
          fail(r.line, std::string("'") + key + "' has a non-numeric entry");
        }
        m(i, j) = row[j].get<double>();
        if (!std::isfinite(m(i, j))) {
          fail(r.line, std::string("'") + key + "' has a non-finite entry");
        }
      }
    }
    return m;
  }
  void check_header(const Item& r, const std::string& kind) const {
    if (str(r, "kind") != kind) fail(r.line, "expected a '" + kind + "' header");
    const long long version = integer(r, "version");
    if (version < 1 || version > kFormatVersion) {
      fail(r.line, "unsupported format version " + std::to_string(version));
    }
  }

 private:
  std::string stage_;
  std::vector<Item> records_;
};

std::string system_record(const Plant& plant) {
  Record r;
  r.str("kind", "system");
  if (const auto* lin = std::get_if<LinearSystem>(&plant)) {
    r.str("type", "linear")
        .str("name", lin->name)
        .integer("n_x", lin->A.rows())
        .integer("n_u", lin->B.cols())
        .raw("A", mat(lin->A))
        .raw("B", mat(lin->B))
        .num("mismatch", lin->mismatch);
  } else {
    const auto& arm = std::get<TwoLinkArm>(plant);
    r.str("type", "two_link_arm")
        .num("m1", arm.m1)
        .num("m2", arm.m2)
        .num("l1", arm.l1)
        .num("l2", arm.l2)
        .num("gravity", arm.gravity)
        .num("damping1", arm.damping1)
        .num("damping2", arm.damping2)
        .num("dt", arm.dt);
  }
  return r.line();
}

Plant parse_system(const Lines& in, const Lines::Item& r) {
  const std::string type = in.str(r, "type");
  if (type == "linear") {
    const long n_x = in.integer(r, "n_x");
    const long n_u = in.integer(r, "n_u");
    if (n_x < 1 || n_u < 1) in.fail(r.line, "bad system dimensions");
    LinearSystem lin;
    lin.name = in.str(r, "name");
    lin.A = in.matrix(r, "A", n_x, n_x);
    lin.B = in.matrix(r, "B", n_x, n_u);
    lin.mismatch = in.num(r, "mismatch");
    return lin;
  }
  if (type == "two_link_arm") {
    TwoLinkArm arm;
    arm.m1 = in.num(r, "m1");
    arm.m2 = in.num(r, "m2");
    arm.l1 = in.num(r, "l1");
    arm.l2 = in.num(r, "l2");
    arm.gravity = in.num(r, "gravity");
    arm.damping1 = in.num(r, "damping1");
    arm.damping2 = in.num(r, "damping2");
    arm.dt = in.num(r, "dt");
    return arm;
  }
  in.fail(r.line, "unknown system type '" + type + "'");
}

std::string trajectory_record(const Trajectory& tau, const char* split,
                              int n_x, int n_u) {
  const auto T = static_cast<Eigen::Index>(tau.transitions.size());
  MatrixXd x(T, n_x), u(T, n_u), xp(T, n_x);
  for (Eigen::Index t = 0; t < T; ++t) {
    x.row(t) = tau.transitions[t].x.transpose();
    u.row(t) = tau.transitions[t].u.transpose();
    xp.row(t) = tau.transitions[t].x_plus.transpose();
  }
  return Record()
      .str("kind", "trajectory")
      .str("split", split)
      .integer("id", tau.id)
      .integer("T", T)
      .raw("x", mat(x))
      .raw("u", mat(u))
      .raw("x_plus", mat(xp))
      .line();
}

Trajectory parse_trajectory(const Lines& in, const Lines::Item& r, int n_x,
                            int n_u) {
  Trajectory tau;
  tau.id = static_cast<int>(in.integer(r, "id"));
  const long T = in.integer(r, "T");
  if (T < 1) in.fail(r.line, "trajectory needs T >= 1");
  const MatrixXd x = in.matrix(r, "x", T, n_x);
  const MatrixXd u = in.matrix(r, "u", T, n_u);
  const MatrixXd xp = in.matrix(r, "x_plus", T, n_x);
  for (long t = 0; t < T; ++t) {
    tau.transitions.push_back({x.row(t).transpose(), u.row(t).transpose(),
                               xp.row(t).transpose()});
  }
  return tau;
}

}  // namespace

DatasetFile dataset_file(const ExperimentData& data) {
  return {data.config.family, data.config.seed, data.plant, data.train,
          data.test};
}

std::string serialize_dataset(const DatasetFile& file) {
  std::string out = Record()
                        .str("kind", "dataset")
                        .integer("version", kFormatVersion)
                        .str("family", to_string(file.family))
                        .integer("seed", static_cast<long long>(file.seed))
                        .integer("n_x", file.train.n_x)
                        .integer("n_u", file.train.n_u)
                        .integer("N", static_cast<long long>(file.train.size()))
                        .integer("N_test",
                                 static_cast<long long>(file.test.size()))
                        .line();
  out += system_record(file.plant);
  for (const auto& tau : file.train.trajectories) {
    out += trajectory_record(tau, "train", file.train.n_x, file.train.n_u);
  }
  for (const auto& tau : file.test.trajectories) {
    out += trajectory_record(tau, "test", file.test.n_x, file.test.n_u);
  }
  return out;
}

DatasetFile parse_dataset(const std::string& text) {
  const Lines in(text, "dataset");
  const auto& recs = in.records();
  const auto& head = recs.front();
  in.check_header(head, "dataset");

  DatasetFile file;
  try {
    file.family = family_from_string(in.str(head, "family"));
  } catch (const Error&) {
    in.fail(head.line, "unknown family");
  }
  const long long seed = in.integer(head, "seed");
  if (seed < 0) in.fail(head.line, "negative seed");
  file.seed = static_cast<std::uint64_t>(seed);
  const int n_x = static_cast<int>(in.integer(head, "n_x"));
  const int n_u = static_cast<int>(in.integer(head, "n_u"));
  if (n_x < 1 || n_u < 1) in.fail(head.line, "bad dimensions");
  const long long N = in.integer(head, "N");
  const long long N_test = in.integer(head, "N_test");
  file.train.n_x = file.test.n_x = n_x;
  file.train.n_u = file.test.n_u = n_u;

  bool have_system = false;
  for (std::size_t i = 1; i < recs.size(); ++i) {
    const auto& r = recs[i];
    const std::string kind = in.str(r, "kind");
    if (kind == "system") {
      if (have_system) in.fail(r.line, "duplicate system record");
      file.plant = parse_system(in, r);
      have_system = true;
      if (plant_state_dim(file.plant) != n_x ||
          plant_input_dim(file.plant) != n_u) {
        in.fail(r.line, "system dimensions disagree with the header");
      }
    } else if (kind == "trajectory") {
      const std::string split = in.str(r, "split");
      Trajectory tau = parse_trajectory(in, r, n_x, n_u);
      if (split == "train") {
        file.train.trajectories.push_back(std::move(tau));
      } else if (split == "test") {
        file.test.trajectories.push_back(std::move(tau));
      } else {
        in.fail(r.line, "unknown split '" + split + "'");
      }
    }
    // Unknown record kinds are tolerated.
  }
  if (!have_system) in.fail(head.line, "missing system record");
  if (static_cast<long long>(file.train.size()) != N ||
      static_cast<long long>(file.test.size()) != N_test) {
    in.fail(head.line, "trajectory count disagrees with the header");
  }
  file.train.validate(1);
  if (N_test > 0) file.test.validate(1);
  return file;
}

void write_dataset(const std::string& path, const DatasetFile& file) {
  write_atomic(path, serialize_dataset(file));
}

DatasetFile read_dataset(const std::string& path) {
  return parse_dataset(read_file(path));
}

std::string serialize_report(const ReportFile& file) {
  const InfluenceReport& rep = file.report;
  const ModelSummary& m = rep.model;
  const auto& c = rep.counters;
  const std::string counters =
      Record()
          .integer("hessian_factorizations", c.hessian_factorizations)
          .integer("downdate_factorizations", c.downdate_factorizations)
          .integer("forward_lyapunov_solves", c.forward_lyapunov_solves)
          .integer("adjoint_lyapunov_solves", c.adjoint_lyapunov_solves)
          .integer("dare_solves", c.dare_solves)
          .integer("trace_assemblies", c.trace_assemblies)
          .line();
  std::string out =
      Record()
          .str("kind", "report")
          .integer("version", kFormatVersion)
          .str("system", file.system)
          .integer("n_x", m.n_x)
          .integer("n_u", m.n_u)
          .integer("p", m.p)
          .integer("n_train", m.n_train)
          .num("lambda", m.lambda)
          .boolean("assumption_ok", m.assumption_ok)
          .str("assumption_message", m.assumption_message)
          .raw("rho_cl", opt(m.rho_cl))
          .raw("J", opt(m.J))
          .integer("n_delta_at_least_one", rep.n_delta_at_least_one)
          .raw("counters", counters.substr(0, counters.size() - 1))
          .line();
  for (const auto& r : rep.records) {
    out += Record()
               .str("kind", "record")
               .integer("traj_id", r.traj_id)
               .num("if1", r.if1)
               .raw("if2", opt(r.if2))
               .num("exact_loto_pred_delta", r.exact_loto_pred_delta)
               .num("grad_only_pred", r.grad_only_pred)
               .raw("grad_only_J", opt(r.grad_only_J))
               .num("residual_norm", r.residual_norm)
               .num("delta_k", r.delta_k)
               .line();
  }
  return out;
}

ReportFile parse_report(const std::string& text) {
  const Lines in(text, "report");
  const auto& recs = in.records();
  const auto& head = recs.front();
  in.check_header(head, "report");
  ReportFile file;
  file.system = in.str(head, "system");
  ModelSummary& m = file.report.model;
  m.n_x = static_cast<int>(in.integer(head, "n_x"));
  m.n_u = static_cast<int>(in.integer(head, "n_u"));
  m.p = static_cast<int>(in.integer(head, "p"));
  m.n_train = static_cast<int>(in.integer(head, "n_train"));
  m.lambda = in.num(head, "lambda");
  m.assumption_ok = in.boolean(head, "assumption_ok");
  m.assumption_message = in.str(head, "assumption_message");
  m.rho_cl = in.opt_num(head, "rho_cl");
  m.J = in.opt_num(head, "J");
  file.report.n_delta_at_least_one =
      static_cast<int>(in.integer(head, "n_delta_at_least_one"));
  if (head.j.contains("counters")) {
    const Lines::Item c{head.j.at("counters"), head.line};
    auto& k = file.report.counters;
    k.hessian_factorizations = in.integer(c, "hessian_factorizations");
    k.downdate_factorizations = in.integer(c, "downdate_factorizations");
    k.forward_lyapunov_solves = in.integer(c, "forward_lyapunov_solves");
    k.adjoint_lyapunov_solves = in.integer(c, "adjoint_lyapunov_solves");
    k.dare_solves = in.integer(c, "dare_solves");
    k.trace_assemblies = in.integer(c, "trace_assemblies");
  }
  for (std::size_t i = 1; i < recs.size(); ++i) {
    const auto& r = recs[i];
    if (in.str(r, "kind") != "record") continue;
    InfluenceRecord rec;
    rec.traj_id = static_cast<int>(in.integer(r, "traj_id"));
    rec.if1 = in.num(r, "if1");
    rec.if2 = in.opt_num(r, "if2");
    rec.exact_loto_pred_delta = in.num(r, "exact_loto_pred_delta");
    rec.grad_only_pred = in.num(r, "grad_only_pred");
    rec.grad_only_J = in.opt_num(r, "grad_only_J");
    rec.residual_norm = in.num(r, "residual_norm");
    rec.delta_k = in.num(r, "delta_k");
    file.report.records.push_back(rec);
  }
  if (static_cast<int>(file.report.records.size()) != m.n_train) {
    in.fail(head.line, "record count disagrees with n_train");
  }
  return file;
}

std::string serialize_report_timings(const MethodTimings& t) {
  return Record()
      .str("kind", "report_timings")
      .integer("version", kFormatVersion)
      .num("fit", t.fit)
      .num("residual", t.residual)
      .num("grad_only_pred", t.grad_only_pred)
      .num("grad_only_J", t.grad_only_J)
      .num("if1", t.if1)
      .num("if2", t.if2)
      .num("exact_loto", t.exact_loto)
      .num("total", t.total)
      .line();
}

MethodTimings parse_report_timings(const std::string& text) {
  const Lines in(text, "timings");
  const auto& r = in.records().front();
  in.check_header(r, "report_timings");
  MethodTimings t;
  t.fit = in.num(r, "fit");
  t.residual = in.num(r, "residual");
  t.grad_only_pred = in.num(r, "grad_only_pred");
  t.grad_only_J = in.num(r, "grad_only_J");
  t.if1 = in.num(r, "if1");
  t.if2 = in.num(r, "if2");
  t.exact_loto = in.num(r, "exact_loto");
  t.total = in.num(r, "total");
  return t;
}

std::string serialize_truth(const GroundTruth& truth) {
  std::string out = Record()
                        .str("kind", "truth")
                        .integer("version", kFormatVersion)
                        .integer("N", static_cast<long long>(
                                          truth.traj_ids.size()))
                        .raw("base_pred_loss", opt(truth.base_pred_loss))
                        .raw("base_J", opt(truth.base_J))
                        .raw("base_plant_cost", opt(truth.base_plant_cost))
                        .integer("n_missing_J", truth.n_missing_J)
                        .integer("n_missing_plant", truth.n_missing_plant)
                        .line();
  for (std::size_t i = 0; i < truth.traj_ids.size(); ++i) {
    out += Record()
               .str("kind", "delta")
               .integer("traj_id", truth.traj_ids[i])
               .raw("d_pred", opt(truth.d_pred[i]))
               .raw("d_J", opt(truth.d_J[i]))
               .raw("d_plant", opt(truth.d_plant[i]))
               .line();
  }
  return out;
}

GroundTruth parse_truth(const std::string& text) {
  const Lines in(text, "truth");
  const auto& recs = in.records();
  const auto& head = recs.front();
  in.check_header(head, "truth");
  GroundTruth t;
  t.base_pred_loss = in.opt_num(head, "base_pred_loss");
  t.base_J = in.opt_num(head, "base_J");
  t.base_plant_cost = in.opt_num(head, "base_plant_cost");
  t.n_missing_J = static_cast<int>(in.integer(head, "n_missing_J"));
  t.n_missing_plant = static_cast<int>(in.integer(head, "n_missing_plant"));
  for (std::size_t i = 1; i < recs.size(); ++i) {
    const auto& r = recs[i];
    if (in.str(r, "kind") != "delta") continue;
    t.traj_ids.push_back(static_cast<int>(in.integer(r, "traj_id")));
    t.d_pred.push_back(in.opt_num(r, "d_pred"));
    t.d_J.push_back(in.opt_num(r, "d_J"));
    t.d_plant.push_back(in.opt_num(r, "d_plant"));
  }
  if (static_cast<long long>(t.traj_ids.size()) != in.integer(head, "N")) {
    in.fail(head.line, "record count disagrees with N");
  }
  return t;
}

std::string serialize_truth_timings(const GroundTruth& truth) {
  return Record()
      .str("kind", "truth_timings")
      .integer("version", kFormatVersion)
      .num("retrain_seconds", truth.retrain_seconds)
      .line();
}

double parse_truth_timings(const std::string& text) {
  const Lines in(text, "timings");
  const auto& r = in.records().front();
  in.check_header(r, "truth_timings");
  return in.num(r, "retrain_seconds");
}

void write_report(const std::string& path, const ReportFile& file) {
  write_atomic(path, serialize_report(file));
  write_atomic(sidecar_path(path),
               serialize_report_timings(file.report.timings));
}

ReportFile read_report(const std::string& path) {
  ReportFile file = parse_report(read_file(path));
  if (std::filesystem::exists(sidecar_path(path))) {
    file.report.timings =
        parse_report_timings(read_file(sidecar_path(path)));
  }
  return file;
}

void write_truth(const std::string& path, const GroundTruth& truth) {
  write_atomic(path, serialize_truth(truth));
  write_atomic(sidecar_path(path), serialize_truth_timings(truth));
}

GroundTruth read_truth(const std::string& path) {
  GroundTruth t = parse_truth(read_file(path));
  if (std::filesystem::exists(sidecar_path(path))) {
    t.retrain_seconds = parse_truth_timings(read_file(sidecar_path(path)));
  }
  return t;
}

namespace {

std::string csv_num(const std::optional<double>& v) {
  if (!v || !std::isfinite(*v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", *v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

}  // namespace

std::string metrics_csv(const std::vector<EvalRow>& rows) {
  std::string out =
      "system,target,method,pearson,spearman,mae,topk,time_s,speedup\n";
  for (const auto& r : rows) {
    const auto& m = r.metrics;
    out += csv_field(r.system) + "," + csv_field(r.target) + "," +
           csv_field(r.method) + "," +
           csv_num(m ? m->pearson : std::nullopt) + "," +
           csv_num(m ? m->spearman : std::nullopt) + "," +
           csv_num(m ? std::optional<double>(m->mae) : std::nullopt) + "," +
           csv_num(m ? std::optional<double>(m->topk_overlap) : std::nullopt) +
           "," + csv_num(r.time_s) + "," + csv_num(r.speedup) + "\n";
  }
  return out;
}

std::string metrics_table(const std::vector<EvalRow>& rows) {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-6s %-6s %-11s %9s %9s %10s %6s %10s %9s\n",
                "system", "target", "method", "pearson", "spearman", "mae",
                "top-k", "time_s", "speedup");
  out << buf;
  auto cell = [](const std::optional<double>& v, const char* fmt) {
    char b[32];
    if (!v || !std::isfinite(*v)) return std::string("-");
    std::snprintf(b, sizeof b, fmt, *v);
    return std::string(b);
  };
  for (const auto& r : rows) {
    const auto& m = r.metrics;
    std::snprintf(
        buf, sizeof buf, "%-6s %-6s %-11s %9s %9s %10s %6s %10s %9s\n",
        r.system.c_str(), r.target.c_str(), r.method.c_str(),
        cell(m ? m->pearson : std::nullopt, "%.4f").c_str(),
        cell(m ? m->spearman : std::nullopt, "%.4f").c_str(),
        cell(m ? std::optional<double>(m->mae) : std::nullopt, "%.2e").c_str(),
        cell(m ? std::optional<double>(m->topk_overlap) : std::nullopt, "%.2f")
            .c_str(),
        cell(r.time_s, "%.2e").c_str(), cell(r.speedup, "%.1fx").c_str());
    out << buf;
  }
  return out.str();
}

std::string ablation_csv(const std::vector<AblationCell>& cells) {
  std::string out =
      "parameter,value,n_seeds,n_failed,if1_pearson,if1_spearman,if2_pearson,"
      "if2_spearman,grad_only_pred_pearson,plant_if2_pearson,error\n";
  for (const auto& c : cells) {
    out += csv_field(c.parameter) + "," + csv_num(c.value) + "," +
           std::to_string(c.n_seeds) + "," + std::to_string(c.n_failed) + "," +
           csv_num(c.if1_pearson) + "," + csv_num(c.if1_spearman) + "," +
           csv_num(c.if2_pearson) + "," + csv_num(c.if2_spearman) + "," +
           csv_num(c.grad_only_pred_pearson) + "," +
           csv_num(c.plant_if2_pearson) + "," + csv_field(c.error) + "\n";
  }
  return out;
}

}  // namespace trajinf::io

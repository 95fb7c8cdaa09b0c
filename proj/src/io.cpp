#include "mtmrc/io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "mtmrc/errors.hpp"

namespace mtmrc {

namespace {

const json& field(const json& j, const char* name, const std::string& where) {
  if (!j.is_object()) throw ParseError(where + ": expected a JSON object");
  auto it = j.find(name);
  if (it == j.end()) throw ParseError(where + ": missing field \"" + name + "\"");
  return *it;
}

std::size_t as_count(const json& v, const std::string& name) {
  if (!v.is_number_integer() || v.get<long long>() < 0)
    throw ParseError("field \"" + name + "\" must be a nonnegative integer");
  return v.get<std::size_t>();
}

double as_real(const json& v, const std::string& name) {
  if (!v.is_number()) throw ParseError("field \"" + name + "\" must hold numbers");
  return v.get<double>();
}

void flatten(const json& v, std::vector<double>& out) {
  if (v.is_array()) {
    for (const auto& e : v) flatten(e, out);
  } else {
    out.push_back(as_real(v, "data"));
  }
}

std::vector<double> real_list(const json& v, const std::string& name) {
  if (!v.is_array()) throw ParseError("field \"" + name + "\" must be a list");
  std::vector<double> out;
  for (const auto& e : v) out.push_back(as_real(e, name));
  return out;
}

json vec(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json mat(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(row);
  }
  return out;
}

json state_labels(std::size_t s) {
  json out = json::array();
  for (std::size_t i = 0; i < s; ++i) out.push_back(i + 1);
  return out;
}

}  // namespace

json to_json(const MatrixSeq& a) {
  json bounds = json::array();
  for (auto b : a.grid().bounds()) bounds.push_back(b);
  json data = json::array();
  for (double x : a.data()) data.push_back(x);
  return json{{"d", a.dims()}, {"s", a.states()}, {"bounds", bounds}, {"data", data}};
}

MatrixSeq matrix_seq_from_json(const json& j) {
  const std::string where = "matrix sequence";
  const std::size_t d = as_count(field(j, "d", where), "d");
  const std::size_t s = as_count(field(j, "s", where), "s");
  const json& jb = field(j, "bounds", where);
  if (!jb.is_array()) throw ParseError("field \"bounds\" must be a list");
  std::vector<std::size_t> bounds;
  for (const auto& b : jb) bounds.push_back(as_count(b, "bounds"));
  if (d == 0 || bounds.size() != d)
    throw ParseError("field \"bounds\" has " + std::to_string(bounds.size()) + " entries but \"d\" is " +
                     std::to_string(d));
  if (s == 0) throw ParseError("field \"s\" must be positive");
  std::vector<double> data;
  flatten(field(j, "data", where), data);
  Grid grid(std::move(bounds));
  if (data.size() != grid.point_count() * s * s)
    throw ParseError("field \"data\" has " + std::to_string(data.size()) + " values, expected " +
                     std::to_string(grid.point_count() * s * s));
  for (double x : data)
    if (!std::isfinite(x)) throw ParseError("field \"data\" contains a non-finite value");
  return MatrixSeq(std::move(grid), s, std::move(data));
}

json to_json(const GaussFactorization& f) {
  json out = json::array();
  for (const auto& op : f.ops) {
    json e;
    switch (op.kind) {
      case ElementaryOp::Kind::swap:
        e = {{"kind", "swap"}, {"i", op.i + 1}, {"j", op.j + 1}};
        break;
      case ElementaryOp::Kind::scale:
        e = {{"kind", "scale"}, {"i", op.i + 1}, {"alpha", to_json(*op.alpha)}};
        break;
      case ElementaryOp::Kind::row_add:
        e = {{"kind", "row_add"}, {"i", op.i + 1}, {"j", op.j + 1}, {"alpha", to_json(*op.alpha)}};
        break;
    }
    out.push_back(e);
  }
  return out;
}

GaussFactorization factorization_from_json(const json& j) {
  if (!j.is_array()) throw ParseError("factorization: expected a list of operations");
  GaussFactorization f;
  for (const auto& e : j) {
    const std::string where = "factorization op";
    const json& kind = field(e, "kind", where);
    if (!kind.is_string()) throw ParseError("field \"kind\" must be a string");
    const std::string k = kind.get<std::string>();
    const std::size_t i = as_count(field(e, "i", where), "i");
    if (i == 0) throw ParseError("field \"i\" is 1-based");
    ElementaryOp op{ElementaryOp::Kind::swap, i - 1, 0, std::nullopt};
    if (k == "swap" || k == "row_add") {
      const std::size_t jj = as_count(field(e, "j", where), "j");
      if (jj == 0) throw ParseError("field \"j\" is 1-based");
      op.j = jj - 1;
    }
    if (k == "swap") {
      op.kind = ElementaryOp::Kind::swap;
    } else if (k == "scale") {
      op.kind = ElementaryOp::Kind::scale;
      op.j = op.i;
      op.alpha = matrix_seq_from_json(field(e, "alpha", where));
    } else if (k == "row_add") {
      op.kind = ElementaryOp::Kind::row_add;
      op.alpha = matrix_seq_from_json(field(e, "alpha", where));
    } else {
      throw ParseError("field \"kind\" must be swap, scale or row_add (got \"" + k + "\")");
    }
    f.ops.push_back(std::move(op));
  }
  return f;
}

KernelFile kernel_file_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("kernel file: expected a JSON object");
  KernelFile kf;
  if (j.contains("tail_tol")) {
    kf.tail_tol = as_real(j["tail_tol"], "tail_tol");
    if (kf.tail_tol < 0.0) throw ParseError("field \"tail_tol\" must be nonnegative");
  }
  if (j.contains("data")) kf.dense = matrix_seq_from_json(j);
  if (j.contains("parametric")) {
    const json& pj = j["parametric"];
    const std::string where = "parametric";
    const json& fam = field(pj, "family", where);
    if (!fam.is_string() || fam.get<std::string>() != "shifted_bivariate_poisson")
      throw ParseError("field \"family\" must be \"shifted_bivariate_poisson\"");
    const json& P = field(pj, "P", where);
    if (!P.is_array() || P.empty()) throw ParseError("field \"P\" must be a nonempty list of rows");
    const std::size_t s = P.size();
    ParametricKernelSpec spec;
    spec.P.resize(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s));
    for (std::size_t i = 0; i < s; ++i) {
      const auto row = real_list(P[i], "P");
      if (row.size() != s) throw ParseError("field \"P\" must be square");
      for (std::size_t c = 0; c < s; ++c) spec.P(i, c) = row[c];
    }
    spec.alpha = real_list(field(pj, "alpha", where), "alpha");
    spec.beta = real_list(field(pj, "beta", where), "beta");
    spec.gamma = real_list(field(pj, "gamma", where), "gamma");
    try {
      spec.check();
    } catch (const ArgumentError& e) {
      throw ParseError(e.what());
    }
    kf.parametric = std::move(spec);
    const json* jb = pj.contains("bounds") ? &pj["bounds"] : (j.contains("bounds") && !kf.dense ? &j["bounds"] : nullptr);
    if (jb) {
      if (!jb->is_array()) throw ParseError("field \"bounds\" must be a list");
      std::vector<std::size_t> b;
      for (const auto& x : *jb) b.push_back(as_count(x, "bounds"));
      kf.bounds = std::move(b);
    }
  }
  if (!kf.dense && !kf.parametric) throw ParseError("kernel file: needs \"data\" or \"parametric\"");
  return kf;
}

SemiMarkovKernel load_kernel(const KernelFile& file, const std::optional<Grid>& grid) {
  if (file.dense) {
    MatrixSeq seq = *file.dense;
    if (grid) seq = grid->dominates(seq.grid()) ? embed_into(seq, *grid) : restrict_to(seq, *grid);
    return validate_kernel(std::move(seq), file.tail_tol);
  }
  std::optional<Grid> g = grid;
  if (!g && file.bounds) g = Grid(*file.bounds);
  if (!g) throw ParseError("parametric kernel: no grid given (field \"bounds\" or --grid)");
  return build_bpoisson_kernel(*file.parametric, *g, file.tail_tol);
}

json to_json(const ParametricKernelSpec& spec) {
  return json{{"family", "shifted_bivariate_poisson"},
              {"P", mat(spec.P)},
              {"alpha", spec.alpha},
              {"beta", spec.beta},
              {"gamma", spec.gamma}};
}

json to_json(const MrcAnalysis& a) {
  const std::size_t s = static_cast<std::size_t>(a.p.rows());
  const auto& mo = a.moments;
  json moments = {{"states", state_labels(s)}, {"m", mo.m}, {"m_prod", mo.mm}, {"c", mo.c}, {"m_pair", mo.m_pair}};
  json out = {{"states", state_labels(s)},
              {"sequences", {{"u", to_json(a.u)}, {"U", to_json(a.U)}, {"P", to_json(a.P)}, {"g", to_json(a.g)}, {"G", to_json(a.G)}}},
              {"p", mat(a.p)},
              {"moments", moments},
              {"ergodic", a.ergodic}};
  if (!a.warning.empty()) out["warning"] = a.warning;
  if (a.ergodic) {
    const auto& r = a.recurrence;
    json mu = json::array(), mu_erg = json::array(), var = json::array();
    for (std::size_t u = 0; u < r.d; ++u) {
      mu.push_back(mat(r.mu[u]));
      mu_erg.push_back(vec(r.mu_diag_ergodic[u]));
      var.push_back(vec(r.variance[u]));
    }
    json mu2 = json::array(), mu2_sys = json::array(), cov = json::array(), cor = json::array();
    for (std::size_t u = 0; u < r.d; ++u) {
      json a1 = json::array(), a2 = json::array(), a3 = json::array(), a4 = json::array();
      for (std::size_t v = 0; v < r.d; ++v) {
        a1.push_back(vec(r.mu2[u][v]));
        a2.push_back(vec(r.mu2_system[u][v]));
        a3.push_back(vec(r.covariance[u][v]));
        a4.push_back(vec(r.correlation[u][v]));
      }
      mu2.push_back(a1);
      mu2_sys.push_back(a2);
      cov.push_back(a3);
      cor.push_back(a4);
    }
    out["nu"] = vec(a.nu);
    out["first_passage_means"] = mu;
    out["recurrence_means_ergodic"] = mu_erg;
    out["recurrence_products"] = mu2;
    out["recurrence_products_system"] = mu2_sys;
    out["variances"] = var;
    out["covariances"] = cov;
    out["correlations"] = cor;
  }
  return out;
}

std::string summary_table(const MrcAnalysis& a) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(6);
  const auto s = static_cast<std::size_t>(a.p.rows());
  const auto& mo = a.moments;
  auto row = [&](const std::string& label, auto value) {
    os << std::left << std::setw(22) << label;
    for (std::size_t j = 0; j < s; ++j) os << std::right << std::setw(16) << value(j);
    os << '\n';
  };
  os << std::left << std::setw(22) << "state";
  for (std::size_t j = 0; j < s; ++j) os << std::right << std::setw(16) << j + 1;
  os << '\n';
  for (std::size_t i = 0; i < s; ++i)
    row("p row " + std::to_string(i + 1), [&](std::size_t j) { return a.p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)); });
  if (a.ergodic) row("nu", [&](std::size_t j) { return a.nu(static_cast<Eigen::Index>(j)); });
  for (std::size_t u = 0; u < mo.d; ++u) {
    const std::string t = std::to_string(u + 1);
    row("m^[" + t + "]", [&](std::size_t i) { return mo.m[i][u]; });
    row("m^[" + t + "," + t + "]", [&](std::size_t i) { return mo.mm[i][u][u]; });
  }
  for (std::size_t u = 0; u < mo.d; ++u)
    for (std::size_t v = u + 1; v < mo.d; ++v)
      row("c^[" + std::to_string(u + 1) + "," + std::to_string(v + 1) + "]", [&](std::size_t i) { return mo.c[i][u][v]; });
  if (!a.ergodic) {
    os << "ergodic moments skipped: " << a.warning << '\n';
    return os.str();
  }
  const auto& r = a.recurrence;
  for (std::size_t u = 0; u < r.d; ++u) {
    const std::string t = std::to_string(u + 1);
    row("mu^(" + t + ")_jj", [&](std::size_t j) { return r.mu[u](static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)); });
    row("mu^(" + t + "," + t + ")_jj", [&](std::size_t j) { return r.mu2[u][u](static_cast<Eigen::Index>(j)); });
  }
  for (std::size_t u = 0; u < r.d; ++u)
    row("Var^(" + std::to_string(u + 1) + ")_j", [&](std::size_t j) { return r.variance[u](static_cast<Eigen::Index>(j)); });
  for (std::size_t u = 0; u < r.d; ++u)
    for (std::size_t v = u + 1; v < r.d; ++v) {
      const std::string t = std::to_string(u + 1) + "," + std::to_string(v + 1);
      row("mu^(" + t + ")_jj", [&](std::size_t j) { return r.mu2[u][v](static_cast<Eigen::Index>(j)); });
      row("cov^(" + t + ")_jj", [&](std::size_t j) { return r.covariance[u][v](static_cast<Eigen::Index>(j)); });
      row("corr^(" + t + ")_j", [&](std::size_t j) { return r.correlation[u][v](static_cast<Eigen::Index>(j)); });
    }
  return os.str();
}

json to_json(const EstimatorReport& r) {
  return json{{"quantity", r.quantity}, {"at", r.at},         {"estimate", r.estimate},
              {"stderr", r.std_error},  {"n", r.n},           {"censored_fraction", r.censored_fraction}};
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError("'" + path + "' is not valid JSON: " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write '" + path + "'");
  out << text;
  if (!out) throw ParseError("write to '" + path + "' failed");
}

}  // namespace mtmrc

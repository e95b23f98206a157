#include "cspath/pointio.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "cspath/errors.hpp"

namespace cspath {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

PointType point_type_from(const std::string& s) {
  if (s == "regular") return PointType::regular;
  if (s == "bifurcation") return PointType::bifurcation;
  if (s == "fold") return PointType::fold;
  if (s == "user-target") return PointType::user_target;
  throw IoError("unknown point type '" + s + "'");
}

struct Header {
  std::map<std::string, std::string> kv;

  const std::string& get(const std::string& key) const {
    auto it = kv.find(key);
    if (it == kv.end()) throw IoError("missing header key '" + key + "'");
    return it->second;
  }
  double num(const std::string& key) const { return std::stod(get(key)); }
  int integer(const std::string& key) const { return std::stoi(get(key)); }
};

// Reads `key value` lines until a lone `data` line.
Header read_header(std::istream& in, const std::string& magic) {
  Header h;
  std::string line;
  if (!std::getline(in, line) || line != magic)
    throw IoError("bad file signature (expected '" + magic + "')");
  while (std::getline(in, line)) {
    if (line == "data") return h;
    const auto sp = line.find(' ');
    if (sp == std::string::npos) throw IoError("malformed header line '" + line + "'");
    h.kv[line.substr(0, sp)] = line.substr(sp + 1);
  }
  throw IoError("missing data section");
}

std::vector<double> parse_numbers(const std::string& s) {
  std::vector<double> out;
  std::istringstream iss(s);
  double v;
  while (iss >> v) out.push_back(v);
  return out;
}

std::string join17(const Eigen::VectorXd& v) {
  std::string s;
  for (int i = 0; i < v.size(); ++i) {
    if (i) s += ' ';
    s += fmt17(v(i));
  }
  return s;
}

std::ofstream open_out(const std::string& file) {
  std::ofstream out(file);
  if (!out) throw IoError("cannot write '" + file + "'");
  return out;
}

}  // namespace

void save_point(const SystemState& state, PointType type, int n_unstable,
                const std::string& file) {
  std::ofstream out = open_out(file);
  const double gres = assemble_G(state).cwiseAbs().maxCoeff();
  out << "cspath-point 1\n";
  out << "model " << state.model->name() << "\n";
  out << "point_type " << to_string(type) << "\n";
  out << "active_param " << state.active_param << "\n";
  out << "n_unstable " << n_unstable << "\n";
  out << "j_ca " << fmt17(j_ca(state)) << "\n";
  out << "gres " << fmt17(gres) << "\n";
  out << "n_params " << state.params.size() << "\n";
  out << "params " << join17(state.params) << "\n";
  out << "n_nodes " << state.n() << "\n";
  out << "x_min " << fmt17(state.fem->mesh.x_min()) << "\n";
  out << "x_max " << fmt17(state.fem->mesh.x_max()) << "\n";
  out << "data\n";
  const int n = state.n();
  for (int k = 0; k < n; ++k) {
    out << fmt17(state.fem->mesh.nodes(k));
    for (int c = 0; c < state.n_comps(); ++c) out << ',' << fmt17(state.u(c * n + k));
    out << "\n";
  }
}

LoadedPoint load_point(const std::string& file, double staleness_tol) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot read '" + file + "'");
  const Header h = read_header(in, "cspath-point 1");

  LoadedPoint lp;
  lp.type = point_type_from(h.get("point_type"));
  lp.n_unstable = h.integer("n_unstable");
  lp.j_ca_saved = h.num("j_ca");
  lp.gres_saved = h.num("gres");

  SystemState s;
  s.model = find_model(h.get("model"));
  const int n = h.integer("n_nodes");
  s.fem = std::make_shared<FemOps>(assemble(build_mesh(h.num("x_min"), h.num("x_max"), n)));
  const std::vector<double> pv = parse_numbers(h.get("params"));
  if (static_cast<int>(pv.size()) != h.integer("n_params") ||
      h.integer("n_params") != s.model->n_params())
    throw IoError("parameter count mismatch in '" + file + "'");
  s.params = Eigen::Map<const Eigen::VectorXd>(pv.data(), static_cast<int>(pv.size()));
  s.active_param = h.integer("active_param");
  s.u.resize(s.model->n_comps() * n);
  std::string line;
  for (int k = 0; k < n; ++k) {
    if (!std::getline(in, line)) throw IoError("truncated data section in '" + file + "'");
    for (auto& ch : line)
      if (ch == ',') ch = ' ';
    const std::vector<double> row = parse_numbers(line);
    if (static_cast<int>(row.size()) != 1 + s.model->n_comps())
      throw IoError("bad data row in '" + file + "'");
    for (int c = 0; c < s.model->n_comps(); ++c) s.u(c * n + k) = row[c + 1];
  }
  const double gres = assemble_G(s).cwiseAbs().maxCoeff();
  if (gres > staleness_tol)
    throw IoError("point file '" + file + "' is stale: ||G||_inf = " + fmt17(gres) +
                  " exceeds " + fmt17(staleness_tol));
  lp.state = std::move(s);
  return lp;
}

void save_path(const CanonicalPath& path, const SystemState& ref, const std::string& file) {
  std::ofstream out = open_out(file);
  out << "cspath-path 1\n";
  out << "model " << ref.model->name() << "\n";
  out << "active_param " << ref.active_param << "\n";
  out << "n_params " << ref.params.size() << "\n";
  out << "params " << join17(ref.params) << "\n";
  out << "alpha " << fmt17(path.alpha) << "\n";
  out << "T " << fmt17(path.mesh.T()) << "\n";
  out << "m " << path.mesh.m() << "\n";
  out << "value " << fmt17(path.value) << "\n";
  out << "n_nodes " << ref.n() << "\n";
  out << "x_min " << fmt17(ref.fem->mesh.x_min()) << "\n";
  out << "x_max " << fmt17(ref.fem->mesh.x_max()) << "\n";
  out << "data\n";
  for (int i = 0; i < path.mesh.m(); ++i) {
    out << fmt17(path.mesh.points(i));
    for (int r = 0; r < path.values.rows(); ++r) out << ',' << fmt17(path.values(r, i));
    out << "\n";
  }
}

LoadedPath load_path(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot read '" + file + "'");
  const Header h = read_header(in, "cspath-path 1");
  LoadedPath lp;
  lp.ref.model = find_model(h.get("model"));
  const int n = h.integer("n_nodes");
  lp.ref.fem =
      std::make_shared<FemOps>(assemble(build_mesh(h.num("x_min"), h.num("x_max"), n)));
  const std::vector<double> pv = parse_numbers(h.get("params"));
  if (static_cast<int>(pv.size()) != lp.ref.model->n_params())
    throw IoError("parameter count mismatch in '" + file + "'");
  lp.ref.params = Eigen::Map<const Eigen::VectorXd>(pv.data(), static_cast<int>(pv.size()));
  lp.ref.active_param = h.integer("active_param");
  const int m = h.integer("m");
  const int d = lp.ref.model->n_comps() * n;
  lp.path.alpha = h.num("alpha");
  lp.path.value = h.num("value");
  lp.path.values.resize(d, m);
  Eigen::VectorXd pts(m);
  std::string line;
  for (int i = 0; i < m; ++i) {
    if (!std::getline(in, line)) throw IoError("truncated data section in '" + file + "'");
    for (auto& ch : line)
      if (ch == ',') ch = ' ';
    const std::vector<double> row = parse_numbers(line);
    if (static_cast<int>(row.size()) != 1 + d)
      throw IoError("bad data row in '" + file + "'");
    pts(i) = row[0];
    for (int r = 0; r < d; ++r) lp.path.values(r, i) = row[r + 1];
  }
  lp.path.mesh = make_mesh_from_points(pts);
  lp.path.converged = true;
  lp.ref.u = lp.path.values.col(m - 1);
  return lp;
}

void write_branch_csv(const std::vector<BranchRecord>& records, const std::string& file) {
  std::ofstream out = open_out(file);
  out << "index,point_type,n_unstable,param,l2norm,j_ca,j_disc,point_file\n";
  for (const auto& r : records) {
    out << r.index << ',' << to_string(r.point_type) << ',' << r.n_unstable << ','
        << fmt17(r.param) << ',' << fmt17(r.l2norm) << ',' << fmt17(r.j_ca) << ','
        << fmt17(r.j_disc) << ',' << r.point_file << "\n";
  }
}

void write_alpha_j_csv(const std::vector<double>& alv, const std::vector<double>& vv,
                       const std::string& file) {
  std::ofstream out = open_out(file);
  out << "alpha,J\n";
  for (size_t i = 0; i < alv.size(); ++i)
    out << fmt17(alv[i]) << ',' << fmt17(vv[i]) << "\n";
}

void write_spectrum_csv(const Eigen::VectorXcd& lambda, const std::string& file) {
  std::ofstream out = open_out(file);
  out << "re_lambda,im_lambda\n";
  // sorted by real part then imaginary part for reproducible output
  std::vector<std::complex<double>> v(lambda.data(), lambda.data() + lambda.size());
  std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  for (const auto& l : v) out << fmt17(l.real()) << ',' << fmt17(l.imag()) << "\n";
}

void write_spectral_summary(int defect, bool has_spp, double suggested_T,
                            const std::string& file) {
  std::ofstream out = open_out(file);
  out << "defect,has_spp,suggested_T\n";
  out << defect << ',' << (has_spp ? 1 : 0) << ',' << fmt17(suggested_T) << "\n";
}

void write_skiba_csv(const SkibaResult& result, const std::string& file) {
  std::ofstream out = open_out(file);
  out << "alpha,J_A,J_B,J_A_minus_J_B\n";
  for (const auto& s : result.grid) {
    if (!s.ok) continue;
    out << fmt17(s.alpha) << ',' << fmt17(s.j_a) << ',' << fmt17(s.j_b) << ','
        << fmt17(s.j_a - s.j_b) << "\n";
  }
}

void write_skiba_summary(const SkibaResult& result, const std::string& file) {
  std::ofstream out = open_out(file);
  out << "found,alpha_star,value_gap\n";
  out << (result.found ? 1 : 0) << ',' << fmt17(result.alpha_star) << ','
      << fmt17(result.value_gap) << "\n";
}

}  // namespace cspath

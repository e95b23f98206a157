#pragma once

#include <string>
#include <vector>

#include "cspath/continuation.hpp"
#include "cspath/isc.hpp"
#include "cspath/model.hpp"
#include "cspath/tbvp.hpp"
#include "cspath/value.hpp"

namespace cspath {

/// Shortest decimal text that round-trips a double (17 significant digits).
std::string fmt17(double v);

struct LoadedPoint {
  SystemState state;
  PointType type = PointType::regular;
  int n_unstable = -1;
  double j_ca_saved = 0;
  double gres_saved = 0;
};

/// Point file: header lines `key value` followed by one row per node
/// (x, then the 2N component values), 17 significant digits throughout.
void save_point(const SystemState& state, PointType type, int n_unstable,
                const std::string& file);

/// Loads a point, re-assembles FEM/model and verifies the staleness check
/// ||G||_inf <= staleness_tol.
LoadedPoint load_point(const std::string& file, double staleness_tol = 1e-9);

struct LoadedPath {
  SystemState ref;  // model, fem, params; u = terminal column
  CanonicalPath path;
};

/// Path file: header lines, then one row per time point (t, u_1..u_{2Nn}).
void save_path(const CanonicalPath& path, const SystemState& ref, const std::string& file);
LoadedPath load_path(const std::string& file);

void write_branch_csv(const std::vector<BranchRecord>& records, const std::string& file);
void write_alpha_j_csv(const std::vector<double>& alv, const std::vector<double>& vv,
                       const std::string& file);
void write_spectrum_csv(const Eigen::VectorXcd& lambda, const std::string& file);
void write_spectral_summary(int defect, bool has_spp, double suggested_T,
                            const std::string& file);
void write_skiba_csv(const SkibaResult& result, const std::string& file);
void write_skiba_summary(const SkibaResult& result, const std::string& file);

}  // namespace cspath

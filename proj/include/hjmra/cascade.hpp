#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hjmra/dynamics.hpp"
#include "hjmra/grid.hpp"
#include "hjmra/hj_solver.hpp"
#include "hjmra/implicit_set.hpp"

namespace hjmra {

/// Ordered reach-avoid legs: reach targets[k] while staying in safes[k].
struct MraTask {
  double t0 = 0.0;
  double t1 = 1.0;
  std::vector<ImplicitSet> targets;
  std::vector<ImplicitSet> safes;
  /// Optional level functions of G_i united with T_i. When present they are
  /// used by the enlarged safe sets instead of max(h_G, h_T).
  std::vector<ImplicitSet> unions;

  int size() const { return static_cast<int>(targets.size()); }
  /// Level function of G_i united with T_i, 0-based leg.
  ImplicitSet safe_union(int leg) const;
  bool time_invariant() const;
  /// Throws std::invalid_argument on an ill-formed task.
  void validate(int state_dim) const;
};

struct CascadeOptions {
  double cfl = 0.8;
  double output_dt = 0.1;
  /// Spatial order of the solver (1 or 2).
  int order = 1;
  int threads = 0;
  /// Enlarge each safe set by its restricted target T~ = T and F, where F is
  /// the predecessor's feasible set. Evaluated as min(h_{G or T}, max(h_G, V_F))
  /// so that a shared boundary of G and T is not a zero seam. Stage one uses
  /// a constant predecessor.
  bool enlarge_safe = false;
  /// Predecessor level used by stage one when enlarge_safe is set; <= 0 means
  /// ten times the workspace diagonal.
  double absent_level = 0.0;
  std::function<void(int stage, const SolveProgress&)> progress;
};

/// One solved stage. `stage` counts solves (1 = last leg only); `target_index`
/// is the 1-based leg this stage starts with (N - stage + 1).
struct CascadeStage {
  int stage = 0;
  int target_index = 0;
  std::shared_ptr<const GridField> value;
  /// Stored dynamic target min(h_T, previous stage) at the output stamps.
  std::shared_ptr<const GridField> target;
  double solve_seconds = 0.0;
};

struct CascadeResult {
  /// In solve order: stages[0] handles the last leg alone.
  std::vector<CascadeStage> stages;
  /// Task legs in user order, kept for exact target evaluation online.
  std::vector<ImplicitSet> targets;
  std::vector<ImplicitSet> safes;
  double t0 = 0.0;
  double t1 = 0.0;
  bool time_invariant = false;
  bool enlarged_safe = false;
  double absent_level = 0.0;

  int size() const { return static_cast<int>(stages.size()); }
  const Grid& grid() const { return stages.front().value->grid(); }
  const CascadeStage& final_stage() const { return stages.back(); }
  /// Stage whose first leg is `target_index` (1-based, user order).
  const CascadeStage& for_target(int target_index) const;
};

CascadeResult solve_cascade(const MraTask& task, const SystemModel& sys, const Grid& grid,
                            const CascadeOptions& opts = {});

struct FeasibilityReport {
  bool feasible = false;
  double margin = 0.0;
  bool out_of_domain = false;
};

FeasibilityReport query_feasible(const CascadeResult& result, std::span<const double> x, double t);

/// Writes stage_<k>_value.mrav / stage_<k>_target.mrav and manifest.json.
/// `task_description` is embedded verbatim in the manifest.
void save_cascade(const CascadeResult& result, const std::filesystem::path& dir,
                  const std::string& task_description_json = "{}");
/// Loads fields and verifies file hashes. Implicit target sets are not
/// restored; online target values then come from the stored target fields.
CascadeResult load_cascade(const std::filesystem::path& dir);

/// Hex SHA-256 of a byte buffer.
std::string sha256_hex(std::span<const std::uint8_t> bytes);

}  // namespace hjmra

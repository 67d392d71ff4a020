#include "hjmra/cascade.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace hjmra {

using nlohmann::json;

ImplicitSet MraTask::safe_union(int leg) const {
  if (!unions.empty()) return unions[leg];
  return set_union(safes[leg], targets[leg]);
}

bool MraTask::time_invariant() const {
  for (const auto& s : targets) {
    if (!s.time_invariant()) return false;
  }
  for (const auto& s : safes) {
    if (!s.time_invariant()) return false;
  }
  for (const auto& s : unions) {
    if (!s.time_invariant()) return false;
  }
  return true;
}

void MraTask::validate(int state_dim) const {
  if (targets.empty()) throw std::invalid_argument("MRA task needs at least one target");
  if (targets.size() != safes.size()) throw std::invalid_argument("MRA task: target and safe counts differ");
  if (!unions.empty() && unions.size() != targets.size()) {
    throw std::invalid_argument("MRA task: union count differs from the target count");
  }
  if (!(t0 >= 0.0 && t0 < t1)) throw std::invalid_argument("MRA task: need 0 <= t0 < t1");
  for (std::size_t k = 0; k < targets.size(); ++k) {
    if (!targets[k].valid() || !safes[k].valid()) {
      throw std::invalid_argument("MRA task: leg " + std::to_string(k + 1) + " has an empty set");
    }
    if (targets[k].dim() != state_dim || safes[k].dim() != state_dim) {
      throw std::invalid_argument("MRA task: leg " + std::to_string(k + 1) + " dimension differs from the state");
    }
  }
}

const CascadeStage& CascadeResult::for_target(int target_index) const {
  for (const auto& s : stages) {
    if (s.target_index == target_index) return s;
  }
  throw std::out_of_range("no cascade stage for target index " + std::to_string(target_index));
}

CascadeResult solve_cascade(const MraTask& task, const SystemModel& sys, const Grid& grid,
                            const CascadeOptions& opts) {
  task.validate(sys.n);
  const int N = task.size();
  CascadeResult result;
  result.targets = task.targets;
  result.safes = task.safes;
  result.t0 = task.t0;
  result.t1 = task.t1;
  result.time_invariant = task.time_invariant() && sys.time_invariant;
  result.enlarged_safe = opts.enlarge_safe;
  result.absent_level = opts.absent_level > 0.0 ? opts.absent_level : 10.0 * grid.diagonal();

  std::shared_ptr<const GridField> prev;
  for (int i = 1; i <= N; ++i) {
    const int leg = N - i;  // zero-based leg handled first in this stage
    SliceSource target = SliceSource::from_set(task.targets[leg], grid);
    SliceSource feasible = prev ? SliceSource::from_field(prev) : SliceSource::constant(result.absent_level);
    if (prev || opts.enlarge_safe) target = slice_min(target, feasible);
    SliceSource safe = SliceSource::from_set(task.safes[leg], grid);
    if (opts.enlarge_safe) {
      // G or (T and F) = (G or T) and (G or F)
      safe = slice_min(SliceSource::from_set(task.safe_union(leg), grid), slice_max(safe, feasible));
    }

    RaProblem pb;
    pb.sys = sys;
    pb.grid = grid;
    pb.target = target;
    pb.safe = safe;
    pb.t0 = task.t0;
    pb.t1 = task.t1;
    pb.cfl = opts.cfl;
    pb.output_dt = opts.output_dt;
    pb.order = opts.order;
    pb.threads = opts.threads;
    if (opts.progress) {
      pb.progress = [&opts, i](const SolveProgress& p) { opts.progress(i, p); };
    }

    SolveStats stats;
    GridField V;
    try {
      V = solve_ra(pb, &stats);
    } catch (const SolverError& e) {
      throw SolverError("stage " + std::to_string(i) + ": " + e.what(), e.time(), i);
    }

    auto tf = std::make_shared<GridField>(grid, V.times());
    for (std::size_t k = 0; k < V.num_slices(); ++k) target.fill(V.times()[k], tf->slice(k));

    CascadeStage st;
    st.stage = i;
    st.target_index = leg + 1;
    st.value = std::make_shared<const GridField>(std::move(V));
    st.target = tf;
    st.solve_seconds = stats.seconds;
    prev = st.value;
    result.stages.push_back(std::move(st));
  }
  return result;
}

FeasibilityReport query_feasible(const CascadeResult& result, std::span<const double> x, double t) {
  const auto r = interpolate(*result.final_stage().value, x, t);
  FeasibilityReport rep;
  rep.margin = r.value;
  rep.out_of_domain = r.out_of_domain;
  rep.feasible = !r.out_of_domain && r.value >= 0.0;
  return rep;
}

// ---------------------------------------------------------------------------
// Persistence

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx, md, &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw std::runtime_error("SHA-256 computation failed");
  }
  EVP_MD_CTX_free(ctx);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return os.str();
}

namespace {

std::string write_with_hash(const GridField& field, const std::filesystem::path& path) {
  const auto bytes = encode_field(field);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
  return sha256_hex(bytes);
}

std::shared_ptr<const GridField> read_with_hash(const std::filesystem::path& path,
                                                const std::string& expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (sha256_hex(bytes) != expected) throw std::runtime_error("hash mismatch for " + path.string());
  return std::make_shared<const GridField>(decode_field(bytes));
}

json grid_json(const Grid& g) {
  json axes = json::array();
  for (const auto& a : g.axes()) {
    axes.push_back({{"lo", a.lo}, {"hi", a.hi}, {"count", a.count}, {"periodic", a.periodic}});
  }
  return axes;
}

}  // namespace

void save_cascade(const CascadeResult& result, const std::filesystem::path& dir,
                  const std::string& task_description_json) {
  if (result.stages.empty()) throw std::invalid_argument("save_cascade: empty cascade");
  std::filesystem::create_directories(dir);
  json manifest;
  manifest["format"] = "hjmra-cascade";
  manifest["version"] = 1;
  manifest["task"] = json::parse(task_description_json);
  manifest["t0"] = result.t0;
  manifest["t1"] = result.t1;
  manifest["time_invariant"] = result.time_invariant;
  manifest["enlarged_safe"] = result.enlarged_safe;
  manifest["absent_level"] = result.absent_level;
  manifest["grid"] = grid_json(result.grid());
  manifest["stamps"] = result.stages.front().value->times();
  json stages = json::array();
  for (const auto& st : result.stages) {
    const std::string vname = "stage_" + std::to_string(st.stage) + "_value.mrav";
    const std::string tname = "stage_" + std::to_string(st.stage) + "_target.mrav";
    json s;
    s["stage"] = st.stage;
    s["target_index"] = st.target_index;
    s["value_file"] = vname;
    s["value_sha256"] = write_with_hash(*st.value, dir / vname);
    s["target_file"] = tname;
    s["target_sha256"] = write_with_hash(*st.target, dir / tname);
    s["solve_seconds"] = st.solve_seconds;
    stages.push_back(s);
  }
  manifest["stages"] = stages;
  std::ofstream out(dir / "manifest.json");
  out << manifest.dump(2) << "\n";
  if (!out) throw std::runtime_error("cannot write manifest in " + dir.string());
}

CascadeResult load_cascade(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw std::runtime_error("missing manifest.json in " + dir.string());
  const json manifest = json::parse(in);
  if (manifest.value("format", "") != "hjmra-cascade") throw std::runtime_error("not a cascade manifest");
  CascadeResult r;
  r.t0 = manifest.at("t0").get<double>();
  r.t1 = manifest.at("t1").get<double>();
  r.time_invariant = manifest.at("time_invariant").get<bool>();
  r.enlarged_safe = manifest.value("enlarged_safe", false);
  r.absent_level = manifest.value("absent_level", 0.0);
  for (const auto& s : manifest.at("stages")) {
    CascadeStage st;
    st.stage = s.at("stage").get<int>();
    st.target_index = s.at("target_index").get<int>();
    st.value = read_with_hash(dir / s.at("value_file").get<std::string>(), s.at("value_sha256").get<std::string>());
    st.target = read_with_hash(dir / s.at("target_file").get<std::string>(), s.at("target_sha256").get<std::string>());
    st.solve_seconds = s.value("solve_seconds", 0.0);
    r.stages.push_back(std::move(st));
  }
  if (r.stages.empty()) throw std::runtime_error("cascade manifest lists no stages");
  for (const auto& st : r.stages) {
    if (!(st.value->grid() == r.grid()) || st.value->times() != r.stages.front().value->times()) {
      throw std::runtime_error("cascade stages do not share grid and stamps");
    }
  }
  return r;
}

}  // namespace hjmra

#include "gravden/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>

#include "gravden/error.hpp"

namespace gravden::report {

namespace {

using nlohmann::json;

std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

json finite_or_string(double v) {
  if (std::isfinite(v)) return v;
  return num(v);
}

const char* median_name(MedianScope s) { return s == MedianScope::Global ? "global" : "leaf"; }

double runtime(const RunReport& r) { return r.timings.total; }

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorKind::IoError, "SHA-256 computation failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

json to_json(const DenoiseParams& p) {
  return json{{"max_leaf_points", p.max_leaf_points},
              {"min_leaf_edge_fraction", p.min_leaf_edge_fraction},
              {"beta", p.beta},
              {"min_vox_count", p.min_vox_count},
              {"k", p.k},
              {"q", p.q},
              {"alpha", p.alpha},
              {"sigma", p.sigma},
              {"lambda", p.lambda},
              {"epsilon", p.epsilon},
              {"recompute_knn", p.recompute_knn},
              {"median", median_name(p.median_scope)}};
}

json to_json(const BaselineParams& p) { return json{{"G", p.G}, {"alpha_threshold", p.alpha_threshold}}; }

json to_json(const NoiseSpec& n) {
  return json{{"random_ratio", n.random_ratio},     {"dense_ratio", n.dense_ratio},
              {"clusters", n.cluster_count},        {"cluster_sigma", n.cluster_sigma_fraction},
              {"bbox_expand", n.bbox_expand},       {"seed", n.seed}};
}

json to_json(const EvalReport& m) {
  return json{{"precision", m.precision}, {"recall", m.recall},          {"f1", m.f1},
              {"psnr_db", finite_or_string(m.psnr_db)}, {"cd", finite_or_string(m.cd)}};
}

json to_json(const RunReport& r) {
  json config;
  config["name"] = r.name;
  config["method"] = r.baseline ? "baseline" : "gravity";
  if (r.baseline)
    config["baseline"] = to_json(r.baseline_params);
  else
    config["params"] = to_json(r.params);
  config["stages"] = json{{"octree", r.toggles.use_octree},
                          {"a1", r.toggles.a1_voxel},
                          {"a2", r.toggles.a2_density},
                          {"a3", r.toggles.a3_gravity}};
  config["threads"] = r.threads;
  config["repeats"] = r.repeats;
  if (r.noise) config["noise"] = to_json(*r.noise);

  json doc;
  doc["config"] = std::move(config);
  doc["counts"] = json{{"n_input", r.counts.n_input},
                       {"p1", r.counts.p1},
                       {"p2", r.counts.p2},
                       {"n_output", r.counts.n_output},
                       {"leaves", r.leaves}};
  doc["metrics"] = r.metrics ? to_json(*r.metrics) : json(nullptr);
  doc["timings_s"] = json{{"octree", r.timings.octree},         {"a1_voxel", r.timings.a1_voxel},
                          {"a2_density", r.timings.a2_density}, {"a3_gravity", r.timings.a3_gravity},
                          {"total", r.timings.total},           {"io", r.timings.io}};
  doc["seed"] = r.noise ? json(r.noise->seed) : json(nullptr);
  doc["input_sha256"] = r.input_sha256;
  return doc;
}

void write_text(const std::string& text, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw Error(ErrorKind::IoError, "write to '" + path.string() + "' failed");
}

void write_json(const nlohmann::json& doc, const std::filesystem::path& path) { write_text(doc.dump(2) + "\n", path); }

std::string method_table_csv(const std::vector<RunReport>& rows) {
  std::ostringstream out;
  out << "Method,Precision,Recall,F1,PSNR_dB,CD,Runtime_s\n";
  for (const auto& r : rows) {
    const EvalReport m = r.metrics.value_or(EvalReport{});
    out << r.name << ',' << num(m.precision) << ',' << num(m.recall) << ',' << num(m.f1) << ',' << num(m.psnr_db)
        << ',' << num(m.cd) << ',' << num(runtime(r)) << '\n';
  }
  return out.str();
}

std::string ablation_table_csv(const std::vector<RunReport>& rows) {
  std::ostringstream out;
  out << "Configuration,Octree,A1,A2,A3,F1,PSNR_dB,CD,Runtime_s\n";
  for (const auto& r : rows) {
    const EvalReport m = r.metrics.value_or(EvalReport{});
    out << r.name << ',' << r.toggles.use_octree << ',' << r.toggles.a1_voxel << ',' << r.toggles.a2_density << ','
        << r.toggles.a3_gravity << ',' << num(m.f1) << ',' << num(m.psnr_db) << ',' << num(m.cd) << ','
        << num(runtime(r)) << '\n';
  }
  return out.str();
}

std::string sweep_table_csv(SweepAxis axis, const std::vector<double>& values, const std::vector<RunReport>& rows) {
  if (values.size() != rows.size())
    throw Error(ErrorKind::InvalidParameter, "sweep table needs one row per value");
  std::ostringstream out;
  out << to_string(axis) << ",Precision,Recall,F1,PSNR_dB,CD,Runtime_s\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const EvalReport m = rows[i].metrics.value_or(EvalReport{});
    out << num(values[i]) << ',' << num(m.precision) << ',' << num(m.recall) << ',' << num(m.f1) << ','
        << num(m.psnr_db) << ',' << num(m.cd) << ',' << num(runtime(rows[i])) << '\n';
  }
  return out.str();
}

}  // namespace gravden::report

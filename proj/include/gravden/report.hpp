#ifndef GRAVDEN_REPORT_HPP
#define GRAVDEN_REPORT_HPP

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "gravden/pipeline.hpp"

namespace gravden::report {

/// Lowercase hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);

nlohmann::json to_json(const DenoiseParams& params);
nlohmann::json to_json(const BaselineParams& params);
nlohmann::json to_json(const NoiseSpec& noise);
nlohmann::json to_json(const EvalReport& metrics);  // psnr_db is "inf" when unbounded

/// config, counts, metrics, timings_s, seed, input_sha256.
nlohmann::json to_json(const RunReport& report);

void write_json(const nlohmann::json& doc, const std::filesystem::path& path);

/// Method,Precision,Recall,F1,PSNR_dB,CD,Runtime_s
std::string method_table_csv(const std::vector<RunReport>& rows);

/// Configuration,Octree,A1,A2,A3,F1,PSNR_dB,CD,Runtime_s
std::string ablation_table_csv(const std::vector<RunReport>& rows);

/// <axis>,Precision,Recall,F1,PSNR_dB,CD,Runtime_s
std::string sweep_table_csv(SweepAxis axis, const std::vector<double>& values, const std::vector<RunReport>& rows);

void write_text(const std::string& text, const std::filesystem::path& path);

}  // namespace gravden::report

#endif  // GRAVDEN_REPORT_HPP

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "dufm/model.hpp"

namespace dufm {

/// Scientific notation with 17 significant digits; '.' decimal separator.
std::string fmt_sci(double v);

/// json <-> Matrix as an array of rows.
nlohmann::json matrix_to_json(const Matrix& A);
Matrix matrix_from_json(const nlohmann::json& j);

/// Little-endian binary container: magic "DUFM", u32 rows, u32 cols, f64
/// row-major payload. Streams may hold several records back to back.
void write_matrix_bin(std::ostream& os, const Matrix& A);
Matrix read_matrix_bin(std::istream& is);

/// ParamStack persistence: params.bin holds H_1, W_1, ..., W_L as
/// consecutive container records; manifest.json carries K, d, L, kind,
/// lambda.
void save_param_stack(const std::filesystem::path& dir, const ParamStack& params, const ModelKind& kind,
                      double lambda);
ParamStack load_param_stack(const std::filesystem::path& dir, ModelKind* kind_out = nullptr,
                            double* lambda_out = nullptr);

/// CSV with a header row, '\n' line endings, numeric cells preformatted.
std::string csv_table(const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows);

void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace dufm

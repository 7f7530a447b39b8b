#include "dufm/io.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace dufm {

std::string fmt_sci(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.16e", v);
    return buf;
}

nlohmann::json matrix_to_json(const Matrix& A) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < A.cols(); ++j) row.push_back(A(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.empty() || !j[0].is_array())
        throw IoError("matrix_from_json: expected a non-empty array of rows");
    const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
    const Eigen::Index cols = static_cast<Eigen::Index>(j[0].size());
    Matrix A(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        if (static_cast<Eigen::Index>(j[static_cast<std::size_t>(i)].size()) != cols)
            throw IoError("matrix_from_json: ragged rows");
        for (Eigen::Index c = 0; c < cols; ++c)
            A(i, c) = j[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)].get<double>();
    }
    return A;
}

namespace {

constexpr char kMagic[4] = {'D', 'U', 'F', 'M'};

void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_f64(std::ostream& os, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

double read_f64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

}  // namespace

void write_matrix_bin(std::ostream& os, const Matrix& A) {
    os.write(kMagic, 4);
    write_u32(os, static_cast<std::uint32_t>(A.rows()));
    write_u32(os, static_cast<std::uint32_t>(A.cols()));
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < A.cols(); ++j) write_f64(os, A(i, j));
    if (!os) throw IoError("write_matrix_bin: stream failure");
}

Matrix read_matrix_bin(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw IoError("read_matrix_bin: bad magic bytes (expected DUFM)");
    const std::uint32_t rows = read_u32(is);
    const std::uint32_t cols = read_u32(is);
    if (!is || rows == 0 || cols == 0) throw IoError("read_matrix_bin: bad header");
    Matrix A(rows, cols);
    for (std::uint32_t i = 0; i < rows; ++i)
        for (std::uint32_t j = 0; j < cols; ++j) A(i, j) = read_f64(is);
    if (!is) throw IoError("read_matrix_bin: truncated payload");
    return A;
}

void save_param_stack(const std::filesystem::path& dir, const ParamStack& params, const ModelKind& kind,
                      double lambda) {
    params.validate();
    std::filesystem::create_directories(dir);
    std::ofstream bin(dir / "params.bin", std::ios::binary);
    if (!bin) throw IoError("save_param_stack: cannot open " + (dir / "params.bin").string());
    for (const Matrix& m : params.mats) write_matrix_bin(bin, m);
    bin.close();

    nlohmann::json manifest;
    manifest["K"] = params.K;
    manifest["d"] = params.d;
    manifest["L"] = params.L;
    manifest["kind"] = kind.name();
    manifest["lambda"] = lambda;
    write_json_file(dir / "manifest.json", manifest);
}

ParamStack load_param_stack(const std::filesystem::path& dir, ModelKind* kind_out, double* lambda_out) {
    const nlohmann::json manifest = read_json_file(dir / "manifest.json");
    ParamStack p;
    p.K = manifest.at("K").get<int>();
    p.d = manifest.at("d").get<int>();
    p.L = manifest.at("L").get<int>();
    std::ifstream bin(dir / "params.bin", std::ios::binary);
    if (!bin) throw IoError("load_param_stack: cannot open " + (dir / "params.bin").string());
    for (int i = 0; i <= p.L; ++i) p.mats.push_back(read_matrix_bin(bin));
    p.validate();
    if (kind_out) *kind_out = model_kind_from_name(manifest.at("kind").get<std::string>());
    if (lambda_out) *lambda_out = manifest.at("lambda").get<double>();
    return p;
}

std::string csv_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
    std::ostringstream out;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out << ',';
        out << header[i];
    }
    out << '\n';
    for (const auto& row : rows) {
        if (row.size() != header.size()) throw IoError("csv_table: row width does not match header");
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            out << row[i];
        }
        out << '\n';
    }
    return out.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("write_text_file: cannot open " + path.string());
    os.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!os) throw IoError("write_text_file: write failure for " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("read_text_file: cannot open " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
    return nlohmann::json::parse(read_text_file(path));
}

}  // namespace dufm

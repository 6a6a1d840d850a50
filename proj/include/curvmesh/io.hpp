#pragma once

#include "curvmesh/eigensolver.hpp"
#include "curvmesh/errors.hpp"

#include <Eigen/Sparse>
#include <json.hpp>

#include <cctype>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace curvmesh {

enum class MatrixSymmetry { general, symmetric };

namespace detail {

inline std::ofstream open_for_writing(const std::string& path)
{
    const std::filesystem::path p(path);
    if (p.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(p.parent_path(), ec);
        require(!ec, ErrorCode::io, "cannot create directory '" + p.parent_path().string() + "'");
    }
    std::ofstream out(path);
    require(bool(out), ErrorCode::io, "cannot open '" + path + "' for writing");
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    return out;
}

inline void finish_writing(std::ofstream& out, const std::string& path)
{
    out.flush();
    require(bool(out), ErrorCode::io, "write failed for '" + path + "'");
}

inline std::string lower(std::string s)
{
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

} // namespace detail

/// Matrix Market coordinate/real output. Symmetric storage keeps the entries
/// with row >= col and requires the matrix to be exactly symmetric.
inline void write_matrix_market(std::ostream& out, const Eigen::SparseMatrix<double>& m,
                                MatrixSymmetry symmetry = MatrixSymmetry::general)
{
    const bool sym = symmetry == MatrixSymmetry::symmetric;
    if (sym) {
        require(m.rows() == m.cols(), ErrorCode::invalid_argument, "symmetric storage needs a square matrix");
        const Eigen::SparseMatrix<double> t = m.transpose();
        require((m - t).norm() == 0.0, ErrorCode::invalid_argument, "matrix is not exactly symmetric");
    }
    std::vector<Eigen::Triplet<double>> entries;
    for (Eigen::Index c = 0; c < m.outerSize(); ++c)
        for (Eigen::SparseMatrix<double>::InnerIterator it(m, c); it; ++it)
            if (!sym || it.row() >= it.col()) entries.emplace_back(it.row(), it.col(), it.value());
    out << "%%MatrixMarket matrix coordinate real " << (sym ? "symmetric" : "general") << '\n';
    out << m.rows() << ' ' << m.cols() << ' ' << entries.size() << '\n';
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (const auto& e : entries) out << e.row() + 1 << ' ' << e.col() + 1 << ' ' << e.value() << '\n';
}

inline void write_matrix_market(const std::string& path, const Eigen::SparseMatrix<double>& m,
                                MatrixSymmetry symmetry = MatrixSymmetry::general)
{
    auto out = detail::open_for_writing(path);
    write_matrix_market(out, m, symmetry);
    detail::finish_writing(out, path);
}

/// Reads coordinate real/integer/pattern matrices, general or symmetric.
/// Symmetric files are expanded to full storage.
inline Eigen::SparseMatrix<double> read_matrix_market(std::istream& in, const std::string& name = "<stream>")
{
    std::string line;
    require(bool(std::getline(in, line)), ErrorCode::io, name + ": empty file");
    std::istringstream banner(line);
    std::string tag, object, format, field, sym;
    banner >> tag >> object >> format >> field >> sym;
    require(tag == "%%MatrixMarket" && detail::lower(object) == "matrix", ErrorCode::io,
            name + ": missing %%MatrixMarket matrix banner");
    require(detail::lower(format) == "coordinate", ErrorCode::io, name + ": only coordinate format is supported");
    field = detail::lower(field);
    sym = detail::lower(sym);
    require(field == "real" || field == "integer" || field == "pattern", ErrorCode::io,
            name + ": unsupported field '" + field + "'");
    require(sym == "general" || sym == "symmetric", ErrorCode::io, name + ": unsupported symmetry '" + sym + "'");

    long long rows = -1, cols = -1, nnz = -1;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '%') continue;
        std::istringstream sizes(line);
        require(bool(sizes >> rows >> cols >> nnz), ErrorCode::io, name + ": malformed size line");
        break;
    }
    require(rows >= 0 && cols >= 0 && nnz >= 0, ErrorCode::io, name + ": missing size line");

    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(static_cast<std::size_t>(sym == "symmetric" ? 2 * nnz : nnz));
    long long read = 0;
    while (read < nnz && std::getline(in, line)) {
        if (line.empty() || line[0] == '%') continue;
        std::istringstream row(line);
        long long i = 0, j = 0;
        double v = 1.0;
        require(bool(row >> i >> j), ErrorCode::io, name + ": malformed entry '" + line + "'");
        if (field != "pattern") require(bool(row >> v), ErrorCode::io, name + ": missing value in '" + line + "'");
        require(i >= 1 && i <= rows && j >= 1 && j <= cols, ErrorCode::io,
                name + ": entry (" + std::to_string(i) + "," + std::to_string(j) + ") out of range");
        entries.emplace_back(i - 1, j - 1, v);
        if (sym == "symmetric" && i != j) entries.emplace_back(j - 1, i - 1, v);
        ++read;
    }
    require(read == nnz, ErrorCode::io,
            name + ": expected " + std::to_string(nnz) + " entries, found " + std::to_string(read));
    Eigen::SparseMatrix<double> m(rows, cols);
    m.setFromTriplets(entries.begin(), entries.end());
    m.makeCompressed();
    return m;
}

inline Eigen::SparseMatrix<double> read_matrix_market(const std::string& path)
{
    std::ifstream in(path);
    require(bool(in), ErrorCode::io, "cannot open '" + path + "'");
    return read_matrix_market(in, path);
}

/// `index,eigenvalue,residual`, one row per mode.
inline void write_eigenvalues_csv(std::ostream& out, const EigenResult& r)
{
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    out << "index,eigenvalue,residual\n";
    for (Eigen::Index j = 0; j < r.eigenvalues.size(); ++j) {
        out << j << ',' << r.eigenvalues(j) << ',';
        if (static_cast<std::size_t>(j) < r.residuals.size()) out << r.residuals[static_cast<std::size_t>(j)];
        out << '\n';
    }
}

inline void write_eigenvalues_csv(const std::string& path, const EigenResult& r)
{
    auto out = detail::open_for_writing(path);
    write_eigenvalues_csv(out, r);
    detail::finish_writing(out, path);
}

/// Reads the `eigenvalue` column of an eigenvalue CSV.
inline Eigen::VectorXd read_eigenvalues_csv(std::istream& in, const std::string& name = "<stream>")
{
    std::string line;
    require(bool(std::getline(in, line)), ErrorCode::io, name + ": empty file");
    require(line.rfind("index,eigenvalue", 0) == 0, ErrorCode::io, name + ": unexpected header '" + line + "'");
    std::vector<double> values;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto a = line.find(',');
        require(a != std::string::npos, ErrorCode::io, name + ": malformed row '" + line + "'");
        const auto b = line.find(',', a + 1);
        try {
            values.push_back(std::stod(line.substr(a + 1, b == std::string::npos ? std::string::npos : b - a - 1)));
        } catch (const std::exception&) {
            fail(ErrorCode::io, name + ": malformed eigenvalue in '" + line + "'");
        }
    }
    return Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

inline Eigen::VectorXd read_eigenvalues_csv(const std::string& path)
{
    std::ifstream in(path);
    require(bool(in), ErrorCode::io, "cannot open '" + path + "'");
    return read_eigenvalues_csv(in, path);
}

/// One row per degree of freedom, one column per mode (`dof,mode0,mode1,...`).
inline void write_eigenvectors_csv(const std::string& path, const EigenResult& r)
{
    auto out = detail::open_for_writing(path);
    out << "dof";
    for (Eigen::Index c = 0; c < r.eigenvectors.cols(); ++c) out << ",mode" << c;
    out << '\n';
    for (Eigen::Index i = 0; i < r.eigenvectors.rows(); ++i) {
        out << i;
        for (Eigen::Index c = 0; c < r.eigenvectors.cols(); ++c) out << ',' << r.eigenvectors(i, c);
        out << '\n';
    }
    detail::finish_writing(out, path);
}

inline void write_json(const std::string& path, const nlohmann::json& j)
{
    auto out = detail::open_for_writing(path);
    out << j.dump(2) << '\n';
    detail::finish_writing(out, path);
}

inline nlohmann::json read_json(const std::string& path)
{
    std::ifstream in(path);
    require(bool(in), ErrorCode::io, "cannot open '" + path + "'");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::io, path + ": " + e.what());
    }
}

} // namespace curvmesh
